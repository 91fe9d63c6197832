"""Navier biharmonic Green's function of the ball and of annuli.

For a fixed pole x the regular part H(x, .) is biharmonic with data
|x - y|^(4-N) and -2(N-4)|x - y|^(2-N) on every boundary sphere. Both data
are zonal around x, so H is expanded in Gegenbauer polynomials
C_l^lambda(cos theta), lambda = (N-2)/2, and each degree is a radial
biharmonic problem in the basis r^l, r^(l+2), r^(2-N-l), r^(4-N-l). The
solid ball keeps only the two regular exponents.

With the pole at the origin the data are constant, only degree 0 survives
and the expansion reduces to the closed form
H(0, y) = (2N-4)/N - ((N-4)/N)|y|^2 on the unit ball.
"""
import logging
import numpy as np
from functools import lru_cache
from dataclasses import dataclass
from typing import Optional, Tuple
from scipy.special import eval_gegenbauer, gammaln, roots_jacobi
from pumpwood_biharmonic.analytic import Dimension
from pumpwood_biharmonic.domain import AnnulusDomain
from pumpwood_biharmonic.stencils import fd_laplacian, richardson
from pumpwood_biharmonic.exceptions import (
    PumpwoodBiharmonicPreconditionException,
    PumpwoodBiharmonicConvergenceException)


logger = logging.getLogger(__name__)

DEFAULT_DEGREE = 32
"""Spherical harmonic cutoff of the zonal expansion."""

TAIL_TOLERANCE = 1e-8
"""Accepted change of H when the cutoff is doubled."""


def h00_closed_form(dim: Dimension) -> float:
    """Regular part of the unit ball at the center, 2(N-2)/N."""
    return 2.0 * (dim.N - 2) / dim.N


def _gegenbauer_norms(N: int, degree: int) -> np.ndarray:
    """Squared norms of C_l^lambda for the weight (1 - z^2)^(lambda-1/2)."""
    lam = (N - 2) / 2.0
    ell = np.arange(degree + 1, dtype=float)
    log_h = (
        np.log(np.pi) + (1.0 - 2.0 * lam) * np.log(2.0) +
        gammaln(ell + 2.0 * lam) - gammaln(ell + 1.0) -
        np.log(ell + lam) - 2.0 * gammaln(lam))
    return np.exp(log_h)


def _exponents(N: int, ell: int, ball: bool) -> np.ndarray:
    if ball:
        return np.array([ell, ell + 2.0])
    return np.array([ell, ell + 2.0, 2.0 - N - ell, 4.0 - N - ell])


def _laplacian_factors(N: int, ell: int, exponents: np.ndarray) -> np.ndarray:
    """Delta(r^a Y_l) = k_a r^(a-2) Y_l."""
    return exponents * (exponents + N - 2.0) - ell * (ell + N - 2.0)


@lru_cache(maxsize=256)
def _zonal_coefficients(N: int, inner: float, outer: float, degree: int,
                        s: float) -> Tuple[np.ndarray, ...]:
    """Radial coefficients per degree for a pole at distance s of 0.

    Return:
        Tuple indexed by degree, each an array of coefficients of the
        normalized basis (r / anchor)^a. Growing exponents are anchored
        at the outer radius, decaying ones at the inner radius.
    """
    ball = inner == 0.0
    lam = (N - 2) / 2.0
    spheres = [outer] if ball else [inner, outer]
    n_angular = 4 * degree + 8
    z, w = roots_jacobi(n_angular, lam - 0.5, lam - 0.5)
    norms = _gegenbauer_norms(N, degree)

    projected = {}
    for rho in spheres:
        if s == 0.0:
            f = np.zeros(degree + 1)
            g = np.zeros(degree + 1)
            f[0] = rho ** (4.0 - N)
            g[0] = -2.0 * (N - 4) * rho ** (2.0 - N)
        else:
            q = s * s + rho * rho - 2.0 * s * rho * z
            data_f = q ** (-(N - 4) / 2.0)
            data_g = -2.0 * (N - 4) * q ** (-(N - 2) / 2.0)
            f = np.empty(degree + 1)
            g = np.empty(degree + 1)
            for ell in range(degree + 1):
                c_ell = eval_gegenbauer(ell, lam, z)
                f[ell] = np.dot(w, data_f * c_ell) / norms[ell]
                g[ell] = np.dot(w, data_g * c_ell) / norms[ell]
        projected[rho] = (f, g)

    coefficients = []
    for ell in range(degree + 1):
        exps = _exponents(N, ell, ball)
        ks = _laplacian_factors(N, ell, exps)
        anchors = np.where(exps >= 0, outer, inner if not ball else outer)
        rows = []
        rhs = []
        for rho in spheres:
            basis = (rho / anchors) ** exps
            f, g = projected[rho]
            rows.append(basis)
            rhs.append(f[ell])
            # Laplacian rows scaled by rho^2
            rows.append(ks * basis)
            rhs.append(rho * rho * g[ell])
        coefficients.append(np.linalg.solve(np.array(rows), np.array(rhs)))
    return tuple(coefficients)


@dataclass(frozen=True)
class GreenRegularPart:
    """Regular part H of the Navier Green's function on a radial domain.

    The Green's function G(x, y) = |x - y|^(4-N) - H(x, y) solves
    Delta^2 G(x, .) = k_N delta_x with G = Delta G = 0 on the boundary,
    where k_N = `normalization` is the distributional constant of
    Delta^2 |x|^(4-N).
    """

    domain: AnnulusDomain
    normalization: float
    degree: int = DEFAULT_DEGREE

    @classmethod
    def build(cls, domain: AnnulusDomain,
              degree: int = DEFAULT_DEGREE) -> "GreenRegularPart":
        """Regular part with the theoretical normalization of the domain."""
        return cls(
            domain=domain, normalization=domain.dim.k_theory, degree=degree)

    @property
    def dim(self) -> Dimension:
        """Dimension of the domain."""
        return self.domain.dim

    def _check_points(self, *points) -> None:
        for point in points:
            radius = np.linalg.norm(np.atleast_2d(point), axis=-1)
            inside = radius < self.domain.outer
            if not self.domain.is_ball:
                inside = inside & (radius > self.domain.inner)
            if not np.all(inside):
                msg = (
                    "Points must lie in the open domain inner={inner} < |x| "
                    "< outer={outer}")
                raise PumpwoodBiharmonicPreconditionException(
                    message=msg, payload={
                        "inner": self.domain.inner,
                        "outer": self.domain.outer})

    def _expand(self, x, y, degree: int, laplacian: bool) -> np.ndarray:
        N = self.dim.N
        x = np.asarray(x, dtype=float)
        y = np.atleast_2d(np.asarray(y, dtype=float))
        s = float(np.linalg.norm(x))
        r = np.linalg.norm(y, axis=-1)
        coefficients = _zonal_coefficients(
            N, float(self.domain.inner), float(self.domain.outer),
            int(degree), s)
        if s == 0.0:
            z = np.ones_like(r)
        else:
            with np.errstate(invalid="ignore", divide="ignore"):
                z = np.where(r > 0, (y @ x) / (s * np.where(r > 0, r, 1.0)),
                             1.0)
            z = np.clip(z, -1.0, 1.0)

        lam = (N - 2) / 2.0
        ball = self.domain.is_ball
        total = np.zeros_like(r)
        for ell, coef in enumerate(coefficients):
            if s == 0.0 and ell > 0:
                break
            exps = _exponents(N, ell, ball)
            anchors = np.where(
                exps >= 0, self.domain.outer,
                self.domain.inner if not ball else self.domain.outer)
            ratio = r[:, None] / anchors[None, :]
            basis = ratio ** exps[None, :]
            if laplacian:
                ks = _laplacian_factors(N, ell, exps)
                # k_a vanishes for the regular harmonic exponent at r = 0
                with np.errstate(divide="ignore", invalid="ignore"):
                    term = np.where(
                        ks[None, :] == 0.0, 0.0,
                        ks[None, :] * ratio ** (exps[None, :] - 2.0) /
                        anchors[None, :] ** 2)
                radial = term @ coef
            else:
                radial = basis @ coef
            total = total + radial * eval_gegenbauer(ell, lam, z)
        return total

    def evaluate(self, x, y, check_tail: bool = False) -> np.ndarray:
        """Evaluate H(x, y) for one pole x and points y of shape (M, N).

        Args:
            x:
                Pole, a point of length N.
            y:
                Evaluation points.
            check_tail (bool):
                Compare against the expansion with doubled cutoff and raise
                when it moves H by more than TAIL_TOLERANCE.
        Raises:
            PumpwoodBiharmonicPreconditionException:
                Points outside the open domain.
            PumpwoodBiharmonicConvergenceException:
                Expansion tail above tolerance.
        """
        self._check_points(x, y)
        values = self._expand(x, y, self.degree, laplacian=False)
        if check_tail and float(np.linalg.norm(x)) > 0.0:
            doubled = self._expand(x, y, 2 * self.degree, laplacian=False)
            tail = float(np.max(
                np.abs(doubled - values) / np.maximum(1.0, np.abs(doubled))))
            logger.debug("regular part tail %.3e at L=%d", tail, self.degree)
            if tail > TAIL_TOLERANCE:
                msg = (
                    "Spherical harmonic expansion not converged, tail "
                    "{tail} at cutoff {degree}")
                raise PumpwoodBiharmonicConvergenceException(
                    message=msg, payload={
                        "tail": tail, "degree": self.degree})
            values = doubled
        return values

    def laplacian(self, x, y) -> np.ndarray:
        """Laplacian in y of H(x, y), harmonic in the domain."""
        self._check_points(x, y)
        return self._expand(x, y, self.degree, laplacian=True)

    def green(self, x, y) -> np.ndarray:
        """Green's function |x - y|^(4-N) - H(x, y)."""
        N = self.dim.N
        x = np.asarray(x, dtype=float)
        y = np.atleast_2d(np.asarray(y, dtype=float))
        dist = np.linalg.norm(y - x, axis=-1)
        if np.any(dist == 0.0):
            msg = "Green's function is singular at y = x"
            raise PumpwoodBiharmonicPreconditionException(
                message=msg, payload={"x": x.tolist()})
        return dist ** (4.0 - N) - self.evaluate(x, y)


def regular_part_ball(dim: Dimension, x, y,
                      degree: int = DEFAULT_DEGREE) -> float:
    """Regular part H(x, y) of the unit ball.

    The center pair x = y = 0 uses the closed form 2(N-2)/N.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    ball = GreenRegularPart.build(
        AnnulusDomain(dim=dim, inner=0.0), degree=degree)
    ball._check_points(x, y)
    if not np.any(x) and not np.any(y):
        return h00_closed_form(dim)
    return float(ball.evaluate(x, y[None, :], check_tail=True)[0])


def green_navier(dim: Dimension, dom: AnnulusDomain, x, y,
                 degree: int = DEFAULT_DEGREE) -> float:
    """Navier Green's function G(x, y) on the ball or an annulus."""
    part = GreenRegularPart(
        domain=dom, normalization=dim.k_theory, degree=degree)
    return float(part.green(x, np.asarray(y, dtype=float)[None, :])[0])


@dataclass(frozen=True)
class FluxMeasurement:
    """Normalization recovered from the flux of grad Delta G."""

    k_measured: float
    k_theory: float
    radius: float

    @property
    def relative_error(self) -> float:
        """Relative deviation from 2(N-2)(N-4)|S^(N-1)|."""
        return abs(self.k_measured - self.k_theory) / self.k_theory


def measure_kN_flux(dim: Dimension, dom: Optional[AnnulusDomain] = None,
                    x=None, radius: float = 0.05,
                    degree: int = DEFAULT_DEGREE) -> FluxMeasurement:
    """Measure k_N as the flux of grad Delta_y G(x, .) on a small sphere.

    Delta G is obtained from G values alone by Richardson-extrapolated
    central differences, its radial derivative by an extrapolated central
    difference. The sphere is sampled at the 2N directions +-e_i, which
    integrate zonal harmonics of degree <= 3 exactly.
    """
    N = dim.N
    dom = dom or AnnulusDomain(dim=dim, inner=0.0)
    x = np.zeros(N) if x is None else np.asarray(x, dtype=float)
    part = GreenRegularPart(
        domain=dom, normalization=dim.k_theory, degree=degree)
    directions = np.vstack([np.eye(N), -np.eye(N)])

    def green(points):
        return part.green(x, points)

    def lap_g(rho):
        points = x + rho * directions
        h = rho / 8.0
        levels = [fd_laplacian(green, points, h / 2 ** k) for k in range(3)]
        return richardson(levels)

    derivatives = []
    for step in (radius / 10.0, radius / 20.0):
        derivatives.append(
            (lap_g(radius + step) - lap_g(radius - step)) / (2.0 * step))
    radial = richardson(derivatives)
    flux = dim.sphere_measure * radius ** (N - 1) * float(np.mean(radial))
    measurement = FluxMeasurement(
        k_measured=flux, k_theory=dim.k_theory, radius=radius)
    logger.info(
        "k_N flux N=%d measured %.10g theory %.10g", N, flux, dim.k_theory)
    return measurement


def center_profile(dom: AnnulusDomain, r, degree: int = DEFAULT_DEGREE
                   ) -> Tuple[np.ndarray, np.ndarray]:
    """H(0, y) and its Laplacian for radii r in the closed domain.

    With the pole at the center only degree 0 survives, so on the unit
    ball this is (2N-4)/N - ((N-4)/N) r^2 and -2(N-4).
    """
    part = GreenRegularPart.build(dom, degree=degree)
    r = np.asarray(r, dtype=float)
    points = np.zeros((r.size, dom.dim.N))
    points[:, 0] = r
    pole = np.zeros(dom.dim.N)
    return (
        part._expand(pole, points, degree, laplacian=False),
        part._expand(pole, points, degree, laplacian=True))
