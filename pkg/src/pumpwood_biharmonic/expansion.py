"""Projection of the bubble on the pierced ball and its expansion.

For a centered bubble the projection is PU = U - F with F the radial
biharmonic function A + B r^2 + C r^(4-N) + D r^(2-N) that matches U and
Delta U on both spheres. The remainder

    R = PU - U + alpha_N mu^m H(x, 0) + a_1 phi_1(x/eps) + a_2 phi_2(x/eps)

is then radial biharmonic as well, with four explicit coefficients. The
numerical pipeline computes PU with the split solver and checks the pointwise
brackets on R and Delta R, and the size of the error term
E = (V_+)^p - U_{d,0}^p in expanded variables.
"""
import logging
import numpy as np
from dataclasses import dataclass, field
from typing import Optional, Tuple
from pumpwood_biharmonic.analytic import (
    Dimension, ReducedParams, bubble_radial, bubble_laplacian_radial,
    coeff_a1_a2, safe_power)
from pumpwood_biharmonic.domain import AnnulusDomain, RadialGrid, RadialField
from pumpwood_biharmonic.green import center_profile
from pumpwood_biharmonic.quadrature import weighted_norms
from pumpwood_biharmonic.solver import bubble_projection
from pumpwood_biharmonic.exceptions import (
    PumpwoodBiharmonicGridException,
    PumpwoodBiharmonicPreconditionException)


logger = logging.getLogger(__name__)

REGIONS = ("full", "core")

STARSTAR_ONSET_EPS = 1e-3
"""Below this hole radius the error term norm decays at its asymptotic rate.

Above it the weighted norm is dominated by the outer part of the expanded
domain and is nearly flat in eps.
"""


@dataclass(frozen=True)
class RadialBiharmonic:
    """A + B r^2 + C r^(4-N) + D r^(2-N)."""

    dim: Dimension
    A: float
    B: float
    C: float
    D: float

    def values(self, r) -> np.ndarray:
        """Evaluate at radii r > 0 (r = 0 allowed when C = D = 0)."""
        N = self.dim.N
        r = np.asarray(r, dtype=float)
        out = self.A + self.B * r ** 2
        if self.C or self.D:
            out = out + self.C * r ** (4.0 - N) + self.D * r ** (2.0 - N)
        return out

    def laplacian(self, r) -> np.ndarray:
        """2N B - 2(N-4) C r^(2-N)."""
        N = self.dim.N
        r = np.asarray(r, dtype=float)
        out = 2.0 * N * self.B * np.ones_like(r)
        if self.C:
            out = out - 2.0 * (N - 4) * self.C * r ** (2.0 - N)
        return out

    def coefficients(self) -> Tuple[float, float, float, float]:
        """(A, B, C, D)."""
        return self.A, self.B, self.C, self.D


def _require_radial(rp: ReducedParams) -> None:
    if any(rp.tau):
        msg = "Radial build requires tau = 0, got tau={tau}"
        raise PumpwoodBiharmonicPreconditionException(
            message=msg, payload={"tau": list(rp.tau)})


def boundary_interpolant(dim: Dimension, dom: AnnulusDomain,
                         mu: float) -> RadialBiharmonic:
    """Radial biharmonic F with F = U and Delta F = Delta U on the boundary.

    The decaying powers are normalized as (r/eps)^a and the Laplacian rows
    scaled by the radius squared, which keeps the system well conditioned
    for small holes.
    """
    N = dim.N
    one = dom.outer
    u_out = float(bubble_radial(dim, one, mu))
    lap_out = float(bubble_laplacian_radial(dim, one, mu))
    if dom.is_ball:
        B = lap_out / (2.0 * N)
        return RadialBiharmonic(dim=dim, A=u_out - B * one ** 2, B=B, C=0.0,
                                D=0.0)
    eps = dom.inner
    u_in = float(bubble_radial(dim, eps, mu))
    lap_in = float(bubble_laplacian_radial(dim, eps, mu))
    t = one / eps
    matrix = np.array([
        [1.0, eps ** 2, 1.0, 1.0],
        [0.0, 2.0 * N * eps ** 2, -2.0 * (N - 4), 0.0],
        [1.0, one ** 2, t ** (4.0 - N), t ** (2.0 - N)],
        [0.0, 2.0 * N * one ** 2, -2.0 * (N - 4) * t ** (4.0 - N), 0.0]])
    rhs = np.array([
        u_in, eps ** 2 * lap_in, u_out, one ** 2 * lap_out])
    A, B, c_tilde, d_tilde = np.linalg.solve(matrix, rhs)
    return RadialBiharmonic(
        dim=dim, A=A, B=B, C=c_tilde * eps ** (N - 4),
        D=d_tilde * eps ** (N - 2))


def exact_projection(dim: Dimension, dom: AnnulusDomain, mu: float,
                     r) -> Tuple[np.ndarray, np.ndarray]:
    """PU and Delta PU of the centered bubble in closed form."""
    F = boundary_interpolant(dim, dom, mu)
    r = np.asarray(r, dtype=float)
    pu = bubble_radial(dim, r, mu) - F.values(r)
    lap = bubble_laplacian_radial(dim, r, mu) - F.laplacian(r)
    return pu, lap


def exact_remainder(dim: Dimension, dom: AnnulusDomain,
                    rp: ReducedParams) -> RadialBiharmonic:
    """Remainder R as a radial biharmonic function.

    With H(x, 0) = A0 + B0 |x|^2 on the unit ball the coefficients are
    (alpha mu^m A0 - A, alpha mu^m B0 - B, a_1 eps^(N-4) - C,
    a_2 eps^(N-2) - D).
    """
    _require_radial(rp)
    N = dim.N
    mu = rp.mu(dim)
    eps = rp.eps
    F = boundary_interpolant(dim, dom, mu)
    a1, a2 = coeff_a1_a2(dim, rp)
    scale = dim.alpha * mu ** dim.m
    a0 = 2.0 * (N - 2) / N
    b0 = -(N - 4) / float(N)
    return RadialBiharmonic(
        dim=dim, A=scale * a0 - F.A, B=scale * b0 - F.B,
        C=a1 * eps ** (N - 4) - F.C, D=a2 * eps ** (N - 2) - F.D)


def compute_projection(dim: Dimension, dom: AnnulusDomain, rp: ReducedParams,
                       grid: Optional[RadialGrid] = None,
                       nodes: int = 400) -> RadialField:
    """PU on a graded grid, Delta^2 PU = U^p with Navier data."""
    _require_radial(rp)
    mu = rp.mu(dim)
    grid = grid or RadialGrid.graded(dom, nodes, scale_hint=mu)
    return bubble_projection(dim, dom, grid, mu)


def assemble_remainder(dim: Dimension, dom: AnnulusDomain, rp: ReducedParams,
                       PU: RadialField) -> RadialField:
    """Nodewise R = PU - U + alpha mu^m H(., 0) + a_1 phi_1 + a_2 phi_2.

    Delta R is assembled from the Laplacian companion of PU.
    """
    _require_radial(rp)
    if not PU.grid.compatible(dom) or PU.laplacian is None:
        msg = "Remainder needs PU with its Laplacian on a grid of the domain"
        raise PumpwoodBiharmonicGridException(message=msg)
    N = dim.N
    r = PU.r
    mu = rp.mu(dim)
    eps = rp.eps
    a1, a2 = coeff_a1_a2(dim, rp)
    ball = AnnulusDomain(dim=dim, inner=0.0, outer=dom.outer)
    h, lap_h = center_profile(ball, r)
    scale = dim.alpha * mu ** dim.m
    phi1 = (r / eps) ** (4.0 - N)
    phi2 = (r / eps) ** (2.0 - N)
    values = (
        PU.values - bubble_radial(dim, r, mu) + scale * h + a1 * phi1 +
        a2 * phi2)
    lap = (
        PU.laplacian - bubble_laplacian_radial(dim, r, mu) + scale * lap_h -
        2.0 * (N - 4) * a1 * (r / eps) ** (2.0 - N) / eps ** 2)
    return RadialField(grid=PU.grid, values=values, laplacian=lap)


def remainder_brackets(dim: Dimension, rp: ReducedParams,
                       r) -> Tuple[np.ndarray, np.ndarray]:
    """Pointwise brackets of |R| and |Delta R|."""
    N = dim.N
    mu = rp.mu(dim)
    eps = rp.eps
    r = np.asarray(r, dtype=float)
    bound_r = (
        eps ** (N - 1) * mu ** (-(N + 2) / 2.0) * r ** (4.0 - N) +
        eps ** (N - 1) * mu ** (-(N - 2) / 2.0) * r ** (2.0 - N))
    bound_lap = eps ** (N - 1) * mu ** (-(N + 2) / 2.0) * r ** (2.0 - N)
    return bound_r, bound_lap


@dataclass(frozen=True)
class ExpansionReport:
    """Sup ratios of the remainder and size of the error term at one eps."""

    eps: float
    d: float
    tau: Tuple[float, ...]
    sup_ratio_R: float
    sup_ratio_dR: float
    E_starstar: float = float("nan")
    E_lq: float = float("nan")
    """L^(2N/(N+4)) norm of E in expanded variables."""

    region: str = "full"
    grid_meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        """Serializable view."""
        return {
            "eps": self.eps, "d": self.d, "tau": list(self.tau),
            "sup_ratio_R": self.sup_ratio_R,
            "sup_ratio_dR": self.sup_ratio_dR,
            "E_starstar": self.E_starstar, "E_lq": self.E_lq,
            "region": self.region, "grid_meta": self.grid_meta}


def check_bounds(dim: Dimension, rp: ReducedParams, remainder: RadialField,
                 region: str = "full", E_starstar: float = float("nan"),
                 E_lq: float = float("nan")) -> ExpansionReport:
    """Sup over nodes of |R| and |Delta R| divided by their brackets.

    Args:
        region (str):
            "full" uses every node, "core" only nodes with r <= mu.
    """
    if region not in REGIONS:
        msg = "Unknown region [{region}], expected one of {options}"
        raise PumpwoodBiharmonicPreconditionException(
            message=msg, payload={"region": region, "options": REGIONS})
    if remainder.laplacian is None:
        msg = "Bound check needs the Laplacian of the remainder"
        raise PumpwoodBiharmonicGridException(message=msg)
    r = remainder.r
    mask = np.ones(r.size, dtype=bool)
    if region == "core":
        mask = r <= rp.mu(dim)
    bound_r, bound_lap = remainder_brackets(dim, rp, r[mask])
    ratio_r = float(np.max(np.abs(remainder.values[mask]) / bound_r))
    ratio_lap = float(np.max(np.abs(remainder.laplacian[mask]) / bound_lap))
    return ExpansionReport(
        eps=rp.eps, d=rp.d, tau=rp.tau, sup_ratio_R=ratio_r,
        sup_ratio_dR=ratio_lap, E_starstar=E_starstar, E_lq=E_lq,
        region=region, grid_meta={
            "nodes": remainder.grid.size, "inner": remainder.grid.inner,
            "outer": remainder.grid.outer,
            "nodes_in_region": int(np.sum(mask))})


def error_term(dim: Dimension, rp: ReducedParams,
               PU: RadialField) -> RadialField:
    """E = (V_+)^p - U_{d,0}^p with V(y) = eps^(sigma m) PU(eps^sigma y).

    The field lives on the grid of PU scaled by eps^(-sigma).
    """
    _require_radial(rp)
    sigma = float(dim.sigma)
    grid = PU.grid.scaled(rp.eps ** -sigma)
    v = rp.eps ** (sigma * dim.m) * PU.values
    u_d = bubble_radial(dim, grid.nodes, rp.d)
    values = (
        safe_power(np.maximum(v, 0.0), dim.p) - safe_power(u_d, dim.p))
    return RadialField(grid=grid, values=values)


def error_norms(dim: Dimension, E: RadialField) -> Tuple[float, float]:
    """Weighted sup norm and L^(2N/(N+4)) norm of the error term."""
    star2 = weighted_norms(E, np.zeros(dim.N), "starstar")
    q = 2.0 * dim.N / (dim.N + 4)
    lq = E.integrate(dim, np.abs(E.values) ** q) ** (1.0 / q)
    return star2, float(lq)


def rescaled_boundary_values(dim: Dimension, dom: AnnulusDomain,
                             rp: ReducedParams) -> dict:
    """mu^(-m) R on both spheres against mu^2 and eps / mu^(N-3)."""
    R = exact_remainder(dim, dom, rp)
    mu = rp.mu(dim)
    scale = mu ** -dim.m
    outer = float(scale * R.values(dom.outer))
    hole = float(scale * R.values(dom.inner))
    return {
        "outer": outer, "hole": hole, "outer_bound": mu ** 2,
        "hole_bound": rp.eps / mu ** (dim.N - 3)}


def expansion_case(dim: Dimension, eps: float, d: float, nodes: int = 400,
                   region: str = "full") -> ExpansionReport:
    """Full pipeline at one hole radius: PU, R, brackets and E."""
    rp = ReducedParams(d=d, tau=(0.0,) * dim.N, eps=eps)
    dom = AnnulusDomain(dim=dim, inner=eps)
    PU = compute_projection(dim, dom, rp, nodes=nodes)
    R = assemble_remainder(dim, dom, rp, PU)
    E = error_term(dim, rp, PU)
    star2, lq = error_norms(dim, E)
    report = check_bounds(dim, rp, R, region=region, E_starstar=star2, E_lq=lq)
    logger.info(
        "expansion eps=%.4g ratio R %.4g ratio dR %.4g E** %.4g", eps,
        report.sup_ratio_R, report.sup_ratio_dR, star2)
    return report
