"""Closed forms of the bubble machinery.

Every explicit function of the construction lives here: the bubble
U_{mu,xi}, its Laplacian, the kernel fields Z_i, the exterior correctors
phi_1, phi_2, Upsilon and the hole coefficients a_1, a_2. Functions accept
points as arrays whose last axis has length N and are vectorized over the
leading axes.
"""
import math
import numpy as np
from fractions import Fraction
from dataclasses import dataclass, field
from typing import Tuple
from scipy.special import gamma
from pumpwood_biharmonic.exceptions import (
    PumpwoodBiharmonicPreconditionException)


LOG_SPACE_EXPONENT = 50.0
"""Exponents above this value are evaluated through logarithms."""


@dataclass(frozen=True)
class Dimension:
    """Spatial dimension and the constants derived from it."""

    N: int
    """Spatial dimension, must satisfy N >= 5."""

    def __post_init__(self):
        """__post_init__."""
        if not isinstance(self.N, (int, np.integer)) or self.N < 5:
            msg = "N >= 5 required, got N={N}"
            raise PumpwoodBiharmonicPreconditionException(
                message=msg, payload={"N": self.N})

    @property
    def p_exact(self) -> Fraction:
        """Critical exponent (N+4)/(N-4)."""
        return Fraction(self.N + 4, self.N - 4)

    @property
    def p(self) -> float:
        """Critical exponent as a float."""
        return float(self.p_exact)

    @property
    def m(self) -> float:
        """Decay exponent (N-4)/2 of the bubble."""
        return (self.N - 4) / 2.0

    @property
    def sigma(self) -> Fraction:
        """Blow-up exponent (N-2)/(2(N-3))."""
        return sigma_exponent(self)

    @property
    def kappa(self) -> Fraction:
        """Reduced energy exponent (N-2)(N-4)/(2(N-3))."""
        return kappa_exponent(self)

    @property
    def alpha(self) -> float:
        """Normalization alpha_N of the bubble."""
        N = self.N
        return float(N * (N - 4) * (N - 2) * (N + 2)) ** ((N - 4) / 8.0)

    @property
    def sphere_measure(self) -> float:
        """Measure of the unit sphere S^(N-1), 2 pi^(N/2) / Gamma(N/2)."""
        return 2.0 * math.pi ** (self.N / 2.0) / gamma(self.N / 2.0)

    @property
    def k_theory(self) -> float:
        """Distributional constant of Delta^2 |x|^(4-N)."""
        N = self.N
        return 2.0 * (N - 2) * (N - 4) * self.sphere_measure

    @property
    def gamma_stated(self) -> float:
        """Normalization (N-4)(N-2)|S^(N-1)| written in the Green system."""
        N = self.N
        return (N - 4) * (N - 2) * self.sphere_measure


@dataclass(frozen=True)
class BubbleParams:
    """Concentration weight and center of a bubble."""

    mu: float
    xi: Tuple[float, ...]

    def __post_init__(self):
        """__post_init__."""
        if not self.mu > 0:
            msg = "Bubble weight mu must be positive, got mu={mu}"
            raise PumpwoodBiharmonicPreconditionException(
                message=msg, payload={"mu": self.mu})
        object.__setattr__(self, "xi", tuple(float(v) for v in self.xi))

    @classmethod
    def centered(cls, dim: Dimension, mu: float = 1.0) -> "BubbleParams":
        """Bubble centered at the origin."""
        return cls(mu=mu, xi=(0.0,) * dim.N)


@dataclass(frozen=True)
class ReducedParams:
    """Rescaled parameters (d, tau) at hole radius eps.

    The bubble weight and center are mu = d eps^sigma and xi = mu tau.
    """

    d: float
    tau: Tuple[float, ...]
    eps: float
    delta: float = field(default=None)
    """Compactness parameter, when set d and |tau| are checked against it."""

    def __post_init__(self):
        """__post_init__."""
        object.__setattr__(self, "tau", tuple(float(v) for v in self.tau))
        if not (self.d > 0 and self.eps > 0):
            msg = "d and eps must be positive, got d={d} eps={eps}"
            raise PumpwoodBiharmonicPreconditionException(
                message=msg, payload={"d": self.d, "eps": self.eps})
        if self.delta is not None:
            tau_norm = float(np.linalg.norm(self.tau))
            in_range = (
                self.delta <= self.d <= 1.0 / self.delta and
                tau_norm <= 1.0 / self.delta)
            if not in_range:
                msg = (
                    "Reduced parameters d={d}, |tau|={tau_norm} outside of "
                    "the compact set fixed by delta={delta}")
                raise PumpwoodBiharmonicPreconditionException(
                    message=msg, payload={
                        "d": self.d, "tau_norm": tau_norm,
                        "delta": self.delta})

    def mu(self, dim: Dimension) -> float:
        """Bubble weight d eps^sigma."""
        return self.d * self.eps ** float(dim.sigma)

    def xi(self, dim: Dimension) -> Tuple[float, ...]:
        """Bubble center mu tau."""
        mu = self.mu(dim)
        return tuple(mu * t for t in self.tau)

    def bubble(self, dim: Dimension) -> BubbleParams:
        """Bubble parameters realized by (d, tau, eps)."""
        return BubbleParams(mu=self.mu(dim), xi=self.xi(dim))


def sigma_exponent(dim: Dimension) -> Fraction:
    """Exponent sigma = (N-2)/(2(N-3)) of the blow-up rate."""
    return Fraction(dim.N - 2, 2 * (dim.N - 3))


def kappa_exponent(dim: Dimension) -> Fraction:
    """Exponent kappa = (N-2)(N-4)/(2(N-3)) of the reduced energy."""
    return Fraction((dim.N - 2) * (dim.N - 4), 2 * (dim.N - 3))


def _distance2(b: BubbleParams, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return np.sum((x - np.asarray(b.xi)) ** 2, axis=-1)


def safe_power(base, exponent: float) -> np.ndarray:
    """Positive base to a power, through logarithms for large exponents."""
    base = np.asarray(base, dtype=float)
    if abs(exponent) > LOG_SPACE_EXPONENT:
        return np.exp(exponent * np.log(base))
    return base ** exponent


def bubble_radial(dim: Dimension, r, mu: float = 1.0) -> np.ndarray:
    """Bubble centered at the origin as a function of the radius."""
    r2 = np.asarray(r, dtype=float) ** 2
    return dim.alpha * safe_power(mu / (mu * mu + r2), dim.m)


def bubble_eval(dim: Dimension, b: BubbleParams, x) -> np.ndarray:
    """Evaluate alpha_N (mu / (mu^2 + |x - xi|^2))^((N-4)/2)."""
    mu = b.mu
    return dim.alpha * safe_power(mu / (mu * mu + _distance2(b, x)), dim.m)


def bubble_laplacian_radial(dim: Dimension, r,
                            mu: float = 1.0) -> np.ndarray:
    """Laplacian of the centered bubble as a function of the radius."""
    N = dim.N
    r2 = np.asarray(r, dtype=float) ** 2
    q = mu * mu + r2
    return (
        -dim.alpha * (N - 4) * mu ** dim.m * (2.0 * r2 + N * mu * mu) *
        safe_power(q, -N / 2.0))


def bubble_laplacian(dim: Dimension, b: BubbleParams, x) -> np.ndarray:
    """Evaluate Delta U_{mu,xi}(x), strictly negative."""
    return bubble_laplacian_radial(
        dim, np.sqrt(_distance2(b, x)), mu=b.mu)


def bubble_laplacian_derivative_radial(dim: Dimension, r,
                                       mu: float = 1.0) -> np.ndarray:
    """Radial derivative of Delta U for the centered bubble."""
    N = dim.N
    r = np.asarray(r, dtype=float)
    r2 = r ** 2
    q = mu * mu + r2
    return (
        dim.alpha * (N - 4) * (N - 2) * mu ** dim.m * r *
        ((N + 2) * mu * mu + 2.0 * r2) * safe_power(q, -(N + 2) / 2.0))


def kernel_field_Z(dim: Dimension, b: BubbleParams, i: int, x) -> np.ndarray:
    """Kernel fields Z_0 = dU/dmu and Z_i = dU/dxi_i of the linearization.

    Args:
        dim (Dimension):
            Spatial dimension.
        b (BubbleParams):
            Bubble parameters.
        i (int):
            Index in 0..N, 0 is the weight derivative.
        x:
            Points with last axis of length N.
    """
    N = dim.N
    if not (0 <= int(i) <= N):
        msg = "Kernel field index must lie in 0..{N}, got i={i}"
        raise PumpwoodBiharmonicPreconditionException(
            message=msg, payload={"N": N, "i": i})
    x = np.asarray(x, dtype=float)
    mu = b.mu
    dist2 = _distance2(b, x)
    q = mu * mu + dist2
    if i == 0:
        return (
            dim.alpha * dim.m * mu ** ((N - 6) / 2.0) *
            (dist2 - mu * mu) * safe_power(q, -(N - 2) / 2.0))
    diff = x[..., i - 1] - b.xi[i - 1]
    return (
        dim.alpha * (N - 4) * mu ** dim.m * diff *
        safe_power(q, -(N - 2) / 2.0))


CORRECTORS = ("phi1", "phi2", "Upsilon")


def _check_corrector(which: str, x) -> np.ndarray:
    if which not in CORRECTORS:
        msg = "Unknown corrector [{which}], expected one of {options}"
        raise PumpwoodBiharmonicPreconditionException(
            message=msg, payload={"which": which, "options": CORRECTORS})
    radius = np.linalg.norm(np.asarray(x, dtype=float), axis=-1)
    if np.any(radius < 1.0):
        msg = "Correctors are defined outside the unit ball, min |x|={r_min}"
        raise PumpwoodBiharmonicPreconditionException(
            message=msg, payload={"r_min": float(np.min(radius))})
    return radius


def corrector_eval(dim: Dimension, which: str, x) -> np.ndarray:
    """Exterior correctors phi_1 = |x|^(4-N), phi_2 = |x|^(2-N), Upsilon."""
    r = _check_corrector(which, x)
    N = dim.N
    phi1 = r ** (4.0 - N)
    phi2 = r ** (2.0 - N)
    return {"phi1": phi1, "phi2": phi2, "Upsilon": phi1 + phi2}[which]


def corrector_laplacian(dim: Dimension, which: str, x) -> np.ndarray:
    """Laplacian of the correctors, phi_2 is harmonic off the origin."""
    r = _check_corrector(which, x)
    N = dim.N
    lap1 = -2.0 * (N - 4) * r ** (2.0 - N)
    lap2 = np.zeros_like(r)
    return {"phi1": lap1, "phi2": lap2, "Upsilon": lap1 + lap2}[which]


def coeff_a1_a2(dim: Dimension, rp: ReducedParams) -> Tuple[float, float]:
    """Hole coefficients a_1, a_2 in their explicit form."""
    N = dim.N
    alpha = dim.alpha
    mu = rp.mu(dim)
    t2 = float(np.sum(np.asarray(rp.tau) ** 2))
    a1 = (
        0.5 * alpha * rp.eps ** 2 * (2.0 * t2 + N) /
        (mu ** (N / 2.0) * (1.0 + t2) ** (N / 2.0)))
    a2 = alpha / (mu * (1.0 + t2)) ** dim.m - a1
    return a1, a2


def coeff_a1_a2_definition(dim: Dimension,
                           rp: ReducedParams) -> Tuple[float, float]:
    """Hole coefficients a_1, a_2 through U(tau) and Delta U(tau)."""
    N = dim.N
    mu = rp.mu(dim)
    unit = BubbleParams.centered(dim)
    tau = np.asarray(rp.tau)
    u_tau = float(bubble_eval(dim, unit, tau))
    lap_tau = float(bubble_laplacian(dim, unit, tau))
    shift = lap_tau / (2.0 * (N - 4)) * rp.eps ** 2 / mu ** (N / 2.0)
    return -shift, u_tau / mu ** dim.m + shift


def radial_laplacian(dim: Dimension, r, d1, d2) -> np.ndarray:
    """Laplacian f'' + (N-1) f'/r of a radial profile."""
    r = np.asarray(r, dtype=float)
    return np.asarray(d2) + (dim.N - 1) * np.asarray(d1) / r


def radial_bilaplacian(dim: Dimension, r, d1, d2, d3, d4) -> np.ndarray:
    """Bi-Laplacian of a radial profile from its first four derivatives.

    Delta^2 f = f'''' + 2(N-1) f'''/r + (N-1)(N-3)(f''/r^2 - f'/r^3).
    """
    N = dim.N
    r = np.asarray(r, dtype=float)
    c = (N - 1) * (N - 3)
    return (
        np.asarray(d4) + 2.0 * (N - 1) * np.asarray(d3) / r +
        c * (np.asarray(d2) / r ** 2 - np.asarray(d1) / r ** 3))
