"""Radial quadrature of the bubble integrals and Green identities.

Integrals over R^N of radial integrands reduce to
|S^(N-1)| int_0^inf f(r) r^(N-1) dr. The half line is mapped to [0, 1)
(algebraic r = a s/(1-s) or exponential r = -a log(1-s)) and integrated
with Gauss-Legendre panels. Every result carries a self-convergence
estimate obtained by doubling the number of panels.

The Green identities integrate U^p against |y + tau|^(4-N) and
|y + tau|^(2-N). Averaging the kernels over spheres |y| = r gives exact
closed forms, so both identities are radial integrals with a kink at
r = |tau|, which is placed on a panel breakpoint.
"""
import logging
import numpy as np
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Tuple
from numpy.polynomial.legendre import leggauss
from scipy.special import beta, roots_jacobi
from pumpwood_biharmonic.analytic import (
    Dimension, bubble_radial, bubble_laplacian_radial,
    bubble_laplacian_derivative_radial, safe_power)
from pumpwood_biharmonic.domain import RadialField
from pumpwood_biharmonic.exceptions import (
    PumpwoodBiharmonicConvergenceException,
    PumpwoodBiharmonicPreconditionException)


logger = logging.getLogger(__name__)

MAPPINGS = ("algebraic", "exponential")
CONSTANT_TOLERANCE = 1e-9
IDENTITY_TOLERANCE = 1e-4


@dataclass(frozen=True)
class QuadratureRule:
    """Composite Gauss-Legendre rule on the mapped half line."""

    nodes: int = 64
    """Gauss nodes per panel."""

    panels: int = 8
    """Uniform panels in the mapped variable s."""

    breakpoints: Tuple[float, ...] = field(default=())
    """Extra radii where the integrand has a kink."""

    mapping: str = "algebraic"
    """Map of [0, 1) onto [0, inf), one of MAPPINGS."""

    scale: float = 1.0
    """Length scale a of the map, r(1/2) = a for the algebraic map."""

    def __post_init__(self):
        """__post_init__."""
        if self.mapping not in MAPPINGS:
            msg = "Unknown quadrature mapping [{mapping}]"
            raise PumpwoodBiharmonicPreconditionException(
                message=msg, payload={"mapping": self.mapping})
        if self.nodes < 2 or self.panels < 1 or not self.scale > 0:
            msg = "Quadrature needs nodes >= 2, panels >= 1 and scale > 0"
            raise PumpwoodBiharmonicPreconditionException(
                message=msg, payload={
                    "nodes": self.nodes, "panels": self.panels,
                    "scale": self.scale})
        object.__setattr__(
            self, "breakpoints", tuple(float(b) for b in self.breakpoints))

    def refined(self) -> "QuadratureRule":
        """Same rule with twice as many panels."""
        return QuadratureRule(
            nodes=self.nodes, panels=2 * self.panels,
            breakpoints=self.breakpoints, mapping=self.mapping,
            scale=self.scale)

    def _to_s(self, r: float) -> float:
        if self.mapping == "algebraic":
            return r / (self.scale + r)
        return -np.expm1(-r / self.scale)

    def _to_r(self, s: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        if self.mapping == "algebraic":
            return self.scale * s / (1.0 - s), self.scale / (1.0 - s) ** 2
        return -self.scale * np.log1p(-s), self.scale / (1.0 - s)

    def points(self, upper: Optional[float] = None):
        """Radii and weights for int_0^upper (upper None is infinity)."""
        s_end = 1.0 if upper is None else self._to_s(upper)
        cuts = np.linspace(0.0, s_end, self.panels + 1)
        extra = [self._to_s(b) for b in self.breakpoints if b > 0]
        extra = [c for c in extra if 0.0 < c < s_end]
        cuts = np.unique(np.concatenate([cuts, extra]))
        x, w = leggauss(self.nodes)
        left, right = cuts[:-1], cuts[1:]
        half = 0.5 * (right - left)
        s = (left[:, None] + half[:, None] * (x[None, :] + 1.0)).ravel()
        ws = (half[:, None] * w[None, :]).ravel()
        r, jac = self._to_r(s)
        return r, ws * jac


@dataclass(frozen=True)
class QuadratureResult:
    """Integral value and its self-convergence estimate."""

    value: float
    estimate: float
    """Relative change between the rule and its refinement."""

    panels: int

    def to_dict(self) -> dict:
        """Serializable view."""
        return {
            "value": self.value, "self_convergence": self.estimate,
            "panels": self.panels}


def log_panels(lower: float, upper: float, panels: int = 32,
               nodes: int = 64, breakpoints: Sequence[float] = ()
               ) -> Tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre radii and weights on [lower, upper] uniform in log r.

    Weights include the Jacobian dr = r dt.
    """
    t_lo, t_hi = np.log(lower), np.log(upper)
    cuts = np.linspace(t_lo, t_hi, panels + 1)
    extra = [np.log(b) for b in breakpoints if lower < b < upper]
    cuts = np.unique(np.concatenate([cuts, extra]))
    x, w = leggauss(nodes)
    left, right = cuts[:-1], cuts[1:]
    half = 0.5 * (right - left)
    t = (left[:, None] + half[:, None] * (x[None, :] + 1.0)).ravel()
    wt = (half[:, None] * w[None, :]).ravel()
    r = np.exp(t)
    return r, wt * r


def integrate_radial(integrand: Callable, rule: QuadratureRule,
                     upper: Optional[float] = None) -> float:
    """int_0^upper integrand(r) dr with a fixed rule."""
    r, w = rule.points(upper)
    return float(np.dot(w, integrand(r)))


def integrate_converged(integrand: Callable, rule: QuadratureRule,
                        tolerance: float = CONSTANT_TOLERANCE,
                        upper: Optional[float] = None,
                        name: str = "integral") -> QuadratureResult:
    """Integrate and certify the value by doubling the panels.

    Raises:
        PumpwoodBiharmonicConvergenceException:
            When the refined rule moves the value by more than tolerance.
    """
    coarse = integrate_radial(integrand, rule, upper)
    finer_rule = rule.refined()
    fine = integrate_radial(integrand, finer_rule, upper)
    estimate = abs(fine - coarse) / max(abs(fine), np.finfo(float).tiny)
    logger.debug(
        "%s: %.17g self-convergence %.3e (%d panels)", name, fine, estimate,
        finer_rule.panels)
    if estimate > tolerance:
        msg = (
            "Quadrature of {name} did not self-converge: estimate "
            "{estimate} above {tolerance}")
        raise PumpwoodBiharmonicConvergenceException(
            message=msg, payload={
                "name": name, "estimate": estimate, "tolerance": tolerance})
    return QuadratureResult(
        value=fine, estimate=estimate, panels=finer_rule.panels)


def constant_aN_closed_form(dim: Dimension) -> float:
    """alpha_N^(2N/(N-4)) |S^(N-1)| B(N/2, N/2) / 2."""
    N = dim.N
    return (
        dim.alpha ** (2.0 * N / (N - 4)) * dim.sphere_measure *
        0.5 * beta(N / 2.0, N / 2.0))


def constant_aN(dim: Dimension, mu: float = 1.0,
                rule: Optional[QuadratureRule] = None) -> QuadratureResult:
    """a_N, the integral of U_{mu,0}^(2N/(N-4)) over R^N."""
    N = dim.N
    rule = rule or QuadratureRule(scale=mu)
    exponent = 2.0 * N / (N - 4)

    def integrand(r):
        return (
            dim.sphere_measure * r ** (N - 1) *
            safe_power(bubble_radial(dim, r, mu), exponent))
    return integrate_converged(integrand, rule, name="a_N")


def constant_bN(dim: Dimension) -> float:
    """b_N = (3/4)(N-2)|S^(N-1)| as written in the reduced energy."""
    return 0.75 * (dim.N - 2) * dim.sphere_measure


def constant_cN(dim: Dimension,
                rule: Optional[QuadratureRule] = None) -> QuadratureResult:
    """c_N = (alpha_N / 2) times the integral of U^p."""
    integral = integral_Up(dim, rule)
    return QuadratureResult(
        value=0.5 * dim.alpha * integral.value, estimate=integral.estimate,
        panels=integral.panels)


def constant_bN_cN(dim: Dimension,
                   rule: Optional[QuadratureRule] = None
                   ) -> Tuple[float, QuadratureResult]:
    """Closed form b_N and quadrature c_N."""
    return constant_bN(dim), constant_cN(dim, rule)


def integral_Up(dim: Dimension,
                rule: Optional[QuadratureRule] = None) -> QuadratureResult:
    """Integral of U^p over R^N."""
    N = dim.N
    rule = rule or QuadratureRule()

    def integrand(r):
        return (
            dim.sphere_measure * r ** (N - 1) *
            safe_power(bubble_radial(dim, r), dim.p))
    return integrate_converged(integrand, rule, name="int U^p")


def integral_Up_flux(dim: Dimension, radius: float = 50.0,
                     rule: Optional[QuadratureRule] = None) -> float:
    """Integral of U^p from the flux of grad Delta U through |x| = radius.

    Delta^2 U = U^p turns the integral over the ball into the flux
    |S^(N-1)| R^(N-1) (Delta U)'(R); the outside tail is added by
    quadrature.
    """
    N = dim.N
    rule = rule or QuadratureRule(scale=radius)
    flux = (
        dim.sphere_measure * radius ** (N - 1) *
        float(bubble_laplacian_derivative_radial(dim, radius)))

    def tail(t):
        r = radius + t
        return (
            dim.sphere_measure * r ** (N - 1) *
            safe_power(bubble_radial(dim, r), dim.p))
    return flux + integrate_radial(tail, rule)


def bubble_energy_constant(dim: Dimension,
                           rule: Optional[QuadratureRule] = None) -> float:
    """Energy of the bubble, (2/N) a_N."""
    return 2.0 / dim.N * constant_aN(dim, rule=rule).value


def hole_coefficient(dim: Dimension, k_N: float) -> float:
    """Coefficient of -Delta U U d^(2-N) for a given normalization k_N.

    Equals b_N when k_N = (N-4)(N-2)|S^(N-1)| and (N-2)|S^(N-1)| for the
    distributional constant 2(N-2)(N-4)|S^(N-1)|.
    """
    N = dim.N
    return 0.5 * (k_N / (2.0 * (N - 4)) + (N - 2) * dim.sphere_measure)


def sphere_mean_kernel(dim: Dimension, r, t: float,
                       exponent: int) -> np.ndarray:
    """Mean of |y + tau|^exponent over |y| = r with |tau| = t.

    Only the fundamental exponents 2-N and 4-N are supported.
    """
    N = dim.N
    r = np.asarray(r, dtype=float)
    big = np.maximum(r, t)
    small = np.minimum(r, t)
    if exponent == 2 - N:
        return big ** (2.0 - N)
    if exponent == 4 - N:
        return (
            big ** (4.0 - N) -
            (N - 4) / float(N) * small ** 2 * big ** (2.0 - N))
    msg = "Sphere means are closed form for exponents 2-N and 4-N only"
    raise PumpwoodBiharmonicPreconditionException(
        message=msg, payload={"exponent": exponent})


def sphere_mean_gauss(dim: Dimension, r: float, t: float, exponent: float,
                      nodes: int = 96) -> float:
    """Sphere mean by Gauss-Gegenbauer quadrature in the polar angle."""
    a = (dim.N - 3) / 2.0
    z, w = roots_jacobi(nodes, a, a)
    values = (r * r + t * t + 2.0 * r * t * z) ** (exponent / 2.0)
    return float(np.dot(w, values) / np.sum(w))


@dataclass(frozen=True)
class IdentityReport:
    """Quadrature of a Green identity against its closed form."""

    tau: Tuple[float, ...]
    computed: float
    predicted: float
    estimate: float
    """Self-convergence of the quadrature."""

    @property
    def relative_residual(self) -> float:
        """|computed - predicted| / |predicted|."""
        return abs(self.computed - self.predicted) / abs(self.predicted)

    def passed(self, tolerance: float = IDENTITY_TOLERANCE) -> bool:
        """Residual and self-convergence below tolerance."""
        return (
            self.relative_residual <= tolerance and
            self.estimate <= tolerance)

    def to_dict(self) -> dict:
        """Serializable view."""
        return {
            "tau": list(self.tau), "computed": self.computed,
            "predicted": self.predicted,
            "relative_residual": self.relative_residual,
            "self_convergence": self.estimate}


def _check_tau(dim: Dimension, tau) -> np.ndarray:
    tau = np.asarray(tau, dtype=float)
    if tau.shape != (dim.N,):
        msg = "tau must have length N={N}, got shape {shape}"
        raise PumpwoodBiharmonicPreconditionException(
            message=msg, payload={"N": dim.N, "shape": list(tau.shape)})
    return tau


def _kernel_integral(dim: Dimension, t: float, exponent: int,
                     rule: Optional[QuadratureRule]) -> QuadratureResult:
    N = dim.N
    rule = rule or QuadratureRule()
    rule = QuadratureRule(
        nodes=rule.nodes, panels=rule.panels, breakpoints=(t,) if t else (),
        mapping=rule.mapping, scale=rule.scale)

    def integrand(r):
        return (
            dim.sphere_measure * r ** (N - 1) *
            safe_power(bubble_radial(dim, r), dim.p) *
            sphere_mean_kernel(dim, r, t, exponent))
    return integrate_converged(
        integrand, rule, tolerance=IDENTITY_TOLERANCE,
        name="kernel {}".format(exponent))


def representation_identity_4(dim: Dimension, tau,
                              rule: Optional[QuadratureRule] = None,
                              k_N: Optional[float] = None) -> IdentityReport:
    """Integral of U^p(y)|y + tau|^(4-N) against k_N U(tau)."""
    tau = _check_tau(dim, tau)
    t = float(np.linalg.norm(tau))
    result = _kernel_integral(dim, t, 4 - dim.N, rule)
    k_N = dim.k_theory if k_N is None else k_N
    return IdentityReport(
        tau=tuple(tau), computed=result.value,
        predicted=k_N * float(bubble_radial(dim, t)),
        estimate=result.estimate)


def representation_identity_2(dim: Dimension, tau,
                              rule: Optional[QuadratureRule] = None
                              ) -> IdentityReport:
    """Integral of U^p(y)|y + tau|^(2-N) against -(N-2)|S| Delta U(tau)."""
    tau = _check_tau(dim, tau)
    t = float(np.linalg.norm(tau))
    result = _kernel_integral(dim, t, 2 - dim.N, rule)
    predicted = (
        -(dim.N - 2) * dim.sphere_measure *
        float(bubble_laplacian_radial(dim, t)))
    return IdentityReport(
        tau=tuple(tau), computed=result.value, predicted=predicted,
        estimate=result.estimate)


def measured_kN(dim: Dimension,
                rule: Optional[QuadratureRule] = None) -> QuadratureResult:
    """Normalization that makes the |y|^(4-N) identity exact at tau = 0."""
    report = representation_identity_4(dim, np.zeros(dim.N), rule)
    return QuadratureResult(
        value=report.computed / float(bubble_radial(dim, 0.0)),
        estimate=report.estimate, panels=(rule or QuadratureRule()).panels)


def hole_term_from_identities(dim: Dimension, tau, k_N: float,
                              rule: Optional[QuadratureRule] = None
                              ) -> float:
    """-b Delta U(tau) U(tau) rebuilt from the two kernel integrals."""
    r4 = representation_identity_4(dim, tau, rule, k_N=k_N)
    r2 = representation_identity_2(dim, tau, rule)
    product = r4.computed * r2.computed / (
        k_N * (dim.N - 2) * dim.sphere_measure)
    return hole_coefficient(dim, k_N) * product


@dataclass(frozen=True)
class ReducedConstants:
    """Constants of the reduced energy expansion, all positive."""

    N: int
    aN: float
    bN: float
    cN: float
    sphere_measure: float
    kN: float
    """Normalization adopted everywhere, measured from the identities."""

    b_eff: float
    """Hole coefficient for the adopted kN."""

    self_convergence: dict = field(default_factory=dict)

    def __post_init__(self):
        """__post_init__."""
        values = {
            "aN": self.aN, "bN": self.bN, "cN": self.cN,
            "sphere_measure": self.sphere_measure, "kN": self.kN,
            "b_eff": self.b_eff}
        negative = [k for k, v in values.items() if not v > 0]
        if negative:
            msg = "Constants must be positive, got non positive {names}"
            raise PumpwoodBiharmonicPreconditionException(
                message=msg, payload={"names": negative})

    @property
    def bubble_energy(self) -> float:
        """Energy of the bubble, (2/N) a_N."""
        return self.aN * 2.0 / self.N

    def scaled(self, factor: float) -> "ReducedConstants":
        """Constants with b and c multiplied by the same factor."""
        return ReducedConstants(
            N=self.N, aN=self.aN, bN=self.bN * factor, cN=self.cN * factor,
            sphere_measure=self.sphere_measure, kN=self.kN,
            b_eff=self.b_eff * factor,
            self_convergence=dict(self.self_convergence))

    def to_dict(self) -> dict:
        """Serializable view."""
        return {
            "aN": self.aN, "bN": self.bN, "cN": self.cN,
            "sphere_measure": self.sphere_measure, "kN": self.kN,
            "b_eff": self.b_eff, "bubble_energy": self.bubble_energy}


def reduced_constants(dim: Dimension, rule: Optional[QuadratureRule] = None
                      ) -> ReducedConstants:
    """Compute a_N, b_N, c_N and the measured k_N."""
    a_n = constant_aN(dim, rule=rule)
    b_n, c_n = constant_bN_cN(dim, rule)
    k_n = measured_kN(dim, rule)
    return ReducedConstants(
        N=dim.N, aN=a_n.value, bN=b_n, cN=c_n.value,
        sphere_measure=dim.sphere_measure, kN=k_n.value,
        b_eff=hole_coefficient(dim, k_n.value),
        self_convergence={
            "aN": a_n.estimate, "cN": c_n.estimate,
            "kN": k_n.estimate})


WEIGHTED_NORMS = ("star", "starstar")


def weighted_norms(field: RadialField, center_offset: Sequence[float],
                   which: str) -> float:
    """Weighted sup norms of a radial field in expanded variables.

    The weights grow with |y - xi'|, whose maximum over the sphere |y| = r
    is r + |xi'|; the norms use that value. Derivatives of the star norm
    are radial derivatives. The sup runs over grid nodes, a lower bound of
    the continuous sup.

    Args:
        field (RadialField):
            Field on an expanded grid, with derivatives of order <= 3 for
            the star norm.
        center_offset (Sequence[float]):
            Expanded bubble center xi'.
        which (str):
            "star" or "starstar".
    """
    if which not in WEIGHTED_NORMS:
        msg = "Unknown weighted norm [{which}], expected one of {options}"
        raise PumpwoodBiharmonicPreconditionException(
            message=msg, payload={"which": which, "options": WEIGHTED_NORMS})
    offset = float(np.linalg.norm(np.asarray(center_offset, dtype=float)))
    dist2 = (field.r + offset) ** 2
    if which == "starstar":
        return float(np.max(np.abs((1.0 + dist2) ** 4 * field.values)))
    if field.derivatives is None or field.derivatives.shape[0] < 4:
        msg = "Star norm needs radial derivatives up to order 3"
        raise PumpwoodBiharmonicPreconditionException(message=msg)
    total = np.zeros_like(field.r)
    for i in range(4):
        total = total + np.abs(
            (1.0 + dist2) ** ((2.0 + i) / 2.0) * field.derivatives[i])
    return float(np.max(total))
