"""Radial Navier biharmonic solves on the ball and on annuli.

The bi-Laplacian is split into two Dirichlet Laplace problems
Delta phi = psi, Delta psi = rhs. The radial Laplacian is discretized in
conservative form with face weights r_{i+1/2}^(N-1), so minus the interior
matrix is an M-matrix and a nonnegative right hand side gives a
nonnegative solution. On the solid ball the center row is
2N (f_1 - f_0) / r_1^2.

The nonlinear problem Delta u = w, Delta w = (u_+)^p is solved by damped
Newton on the coupled interior unknowns after a short homogeneous
rescaling warm-up.
"""
import math
import logging
import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu, norm as sparse_norm
from scipy.integrate import trapezoid
from dataclasses import dataclass, field
from functools import cached_property
from typing import List, Optional, Sequence
from pumpwood_biharmonic.analytic import Dimension, bubble_radial, safe_power
from pumpwood_biharmonic.domain import (
    AnnulusDomain, RadialGrid, RadialField)
from pumpwood_biharmonic.exceptions import (
    PumpwoodBiharmonicConvergenceException,
    PumpwoodBiharmonicGridException,
    PumpwoodBiharmonicPreconditionException)


logger = logging.getLogger(__name__)

LINEAR_TOLERANCE = 1e-10
"""Backward error accepted from the sparse LU solves."""


class RadialLaplacian:
    """Conservative radial Laplacian of a grid with Dirichlet ends.

    Unknowns are the interior nodes; on the solid ball the center node is
    an unknown as well.
    """

    def __init__(self, dim: Dimension, grid: RadialGrid):
        """__init__.

        Args:
            dim (Dimension):
                Spatial dimension setting the radial weight r^(N-1).
            grid (RadialGrid):
                Nodes of the operator, a center node makes it a ball.
        """
        self.dim = dim
        self.grid = grid
        self.ball = grid.inner == 0.0
        start = 0 if self.ball else 1
        self.interior = np.arange(start, grid.size - 1)

    @cached_property
    def full(self) -> sp.csr_matrix:
        """Laplacian rows for every node, boundary rows are zero."""
        r = self.grid.nodes
        N = self.dim.N
        n = r.size
        h = np.diff(r)
        faces = (0.5 * (r[1:] + r[:-1])) ** (N - 1)
        flux = faces / h
        rows, cols, vals = [], [], []
        for i in range(1, n - 1):
            volume = r[i] ** (N - 1) * 0.5 * (h[i - 1] + h[i])
            left = flux[i - 1] / volume
            right = flux[i] / volume
            rows += [i, i, i]
            cols += [i - 1, i, i + 1]
            vals += [left, -(left + right), right]
        if self.ball:
            coef = 2.0 * N / r[1] ** 2
            rows += [0, 0]
            cols += [0, 1]
            vals += [-coef, coef]
        return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))

    @cached_property
    def matrix(self) -> sp.csc_matrix:
        """Interior block acting on interior unknowns."""
        idx = self.interior
        return self.full[idx][:, idx].tocsc()

    @cached_property
    def lu(self):
        """Sparse LU factorization of the interior block."""
        try:
            return splu(self.matrix)
        except RuntimeError as error:
            msg = "Radial Laplacian factorization failed: {error}"
            raise PumpwoodBiharmonicConvergenceException(
                message=msg, payload={"error": str(error)})

    def apply(self, values: np.ndarray) -> np.ndarray:
        """Discrete Laplacian at interior unknowns of a full nodal array."""
        return (self.full @ values)[self.interior]

    def solve_dirichlet(self, rhs: np.ndarray) -> np.ndarray:
        """Full nodal solution of Delta f = rhs with f = 0 at the ends."""
        out = np.zeros(self.grid.size)
        out[self.interior] = self.lu.solve(rhs[self.interior])
        return out

    def backward_error(self, solution: np.ndarray, rhs: np.ndarray) -> float:
        """||A x - b|| / (||A|| ||x|| + ||b||) on interior rows."""
        residual = self.apply(solution) - rhs[self.interior]
        norm_a = sparse_norm(self.matrix, np.inf)
        denom = (
            norm_a * np.max(np.abs(solution)) +
            np.max(np.abs(rhs[self.interior])))
        if denom == 0.0:
            return 0.0
        return float(np.max(np.abs(residual)) / denom)

    def inner(self, f: np.ndarray, g: np.ndarray) -> float:
        """Radial L^2 product with weight |S^(N-1)| r^(N-1)."""
        r = self.grid.nodes
        weight = self.dim.sphere_measure * r ** (self.dim.N - 1)
        return float(trapezoid(weight * f * g, r))


def _check_compatible(dom: AnnulusDomain, grid: RadialGrid) -> None:
    if not grid.compatible(dom):
        msg = (
            "Grid [{g_inner}, {g_outer}] does not span the domain "
            "[{inner}, {outer}]")
        raise PumpwoodBiharmonicGridException(
            message=msg, payload={
                "g_inner": grid.inner, "g_outer": grid.outer,
                "inner": dom.inner, "outer": dom.outer})


def solve_linear_navier(dim: Dimension, dom: AnnulusDomain,
                        rhs: RadialField,
                        operator: Optional[RadialLaplacian] = None
                        ) -> RadialField:
    """Solve Delta^2 phi = rhs with phi = Delta phi = 0 on the boundary.

    Args:
        dim (Dimension):
            Spatial dimension.
        dom (AnnulusDomain):
            Ball or annulus.
        rhs (RadialField):
            Right hand side on a grid spanning dom.
        operator (RadialLaplacian):
            Factorized operator of the same grid to reuse.
    Return:
        Field phi with its Laplacian psi as companion.
    Raises:
        PumpwoodBiharmonicGridException:
            Grid and domain do not match.
        PumpwoodBiharmonicConvergenceException:
            Singular system or backward error above LINEAR_TOLERANCE.
    """
    _check_compatible(dom, rhs.grid)
    op = operator or RadialLaplacian(dim, rhs.grid)
    source = rhs.values.copy()
    psi = op.solve_dirichlet(source)
    phi = op.solve_dirichlet(psi)
    error = max(op.backward_error(psi, source), op.backward_error(phi, psi))
    logger.debug("linear Navier solve backward error %.3e", error)
    if not error <= LINEAR_TOLERANCE:
        msg = "Linear Navier solve backward error {error} above {tol}"
        raise PumpwoodBiharmonicConvergenceException(
            message=msg, payload={"error": error, "tol": LINEAR_TOLERANCE})
    return RadialField(grid=rhs.grid, values=phi, laplacian=psi)


def bubble_projection(dim: Dimension, dom: AnnulusDomain, grid: RadialGrid,
                      mu: float) -> RadialField:
    """Projection PU of the centered bubble, solving Delta^2 PU = U^p."""
    rhs = RadialField(
        grid=grid, values=safe_power(bubble_radial(dim, grid.nodes, mu),
                                     dim.p))
    return solve_linear_navier(dim, dom, rhs)


@dataclass(frozen=True)
class SolverConfig:
    """Numerical knobs of the nonlinear solve."""

    tolerance: float = 1e-9
    """Relative residual accepted by Newton."""

    max_iterations: int = 50
    max_halvings: int = 8
    warmup_iterations: int = 3
    trivial_threshold: float = 1e-6
    """Solutions with max u below it are reported as trivial."""


@dataclass(frozen=True)
class SolveReport:
    """Outcome of a nonlinear solve."""

    converged: bool
    newton_iterations: int
    final_residual: float
    u: RadialField
    w: RadialField
    mu_estimate: Optional[float]
    """(alpha_N / max u)^(2/(N-4)), None for the trivial solution."""

    positivity_violated: bool
    trivial: bool = False
    eps: float = field(default=float("nan"))

    @property
    def succeeded(self) -> bool:
        """Converged to a positive nontrivial solution."""
        return (
            self.converged and not self.trivial and
            not self.positivity_violated)

    def d_estimate(self, dim: Dimension) -> Optional[float]:
        """Rescaled weight mu / eps^sigma."""
        if self.mu_estimate is None:
            return None
        return self.mu_estimate / self.eps ** float(dim.sigma)


def _residual(op: RadialLaplacian, p: float, u: np.ndarray,
              w: np.ndarray):
    """Coupled residual on interior unknowns and its relative size."""
    up = np.maximum(u, 0.0) ** p
    f1 = op.apply(u) - w[op.interior]
    f2 = op.apply(w) - up[op.interior]
    size = max(
        np.max(np.abs(f1)) / max(np.max(np.abs(w)), 1.0),
        np.max(np.abs(f2)) / max(np.max(up), 1.0))
    return np.concatenate([f1, f2]), float(size)


def _jacobian(op: RadialLaplacian, p: float, u: np.ndarray) -> sp.csc_matrix:
    m = op.interior.size
    ui = np.maximum(u[op.interior], 0.0)
    # 0^(p-1) taken as 0
    deriv = np.where(ui > 0.0, p * ui ** (p - 1.0), 0.0)
    eye = sp.identity(m, format="csc")
    return sp.bmat([
        [op.matrix, -eye],
        [-sp.diags(deriv, format="csc"), op.matrix]], format="csc")


def _warmup(op: RadialLaplacian, p: float, u: np.ndarray,
            iterations: int) -> np.ndarray:
    """Rescaled fixed point u <- t S(u_+^p), t from the Nehari ratio."""
    for _ in range(iterations):
        up = np.maximum(u, 0.0) ** p
        v = op.solve_dirichlet(op.solve_dirichlet(up))
        num = op.inner(up, u)
        den = op.inner(up, v)
        if not (num > 0 and den > 0):
            break
        u = (num / den) ** (p / (p - 1.0)) * v
    return u


def solve_nonlinear(dim: Dimension, dom: AnnulusDomain, init: RadialField,
                    cfg: Optional[SolverConfig] = None,
                    eps: Optional[float] = None) -> SolveReport:
    """Damped Newton for Delta u = w, Delta w = u_+^p with Navier data.

    Args:
        dim (Dimension):
            Spatial dimension.
        dom (AnnulusDomain):
            Annulus of the solve.
        init (RadialField):
            Initial guess. Its Laplacian companion, when present, starts w.
        cfg (SolverConfig):
            Tolerances and iteration limits.
        eps (float):
            Hole radius recorded in the report, defaults to dom.inner.
    Return:
        SolveReport with the best iterate. Non convergence is reported by
        the flag, not raised.
    """
    cfg = cfg or SolverConfig()
    _check_compatible(dom, init.grid)
    grid = init.grid
    op = RadialLaplacian(dim, grid)
    p = dim.p
    eps = dom.inner if eps is None else eps

    u = init.values.copy()
    if not op.ball:
        u[0] = 0.0
    u[-1] = 0.0
    if cfg.warmup_iterations and np.max(u) > 0.0:
        u = _warmup(op, p, u, cfg.warmup_iterations)
    if init.laplacian is not None and not cfg.warmup_iterations:
        w = init.laplacian.copy()
    else:
        w = np.zeros(grid.size)
        w[op.interior] = op.apply(u)
    w[-1] = 0.0
    if not op.ball:
        w[0] = 0.0

    m = op.interior.size
    residual, size = _residual(op, p, u, w)
    iterations = 0
    while size > cfg.tolerance and iterations < cfg.max_iterations:
        iterations += 1
        jac = _jacobian(op, p, u)
        try:
            step = splu(jac).solve(-residual)
        except RuntimeError as error:
            logger.warning("Newton Jacobian singular: %s", error)
            break
        accepted = False
        lam = 1.0
        for _ in range(cfg.max_halvings + 1):
            u_try = u.copy()
            w_try = w.copy()
            u_try[op.interior] += lam * step[:m]
            w_try[op.interior] += lam * step[m:]
            res_try, size_try = _residual(op, p, u_try, w_try)
            if np.isfinite(size_try) and size_try < size:
                accepted = True
                break
            lam *= 0.5
        logger.debug(
            "newton %d residual %.3e damping %.4g", iterations, size_try,
            lam)
        if not accepted:
            logger.warning(
                "Newton backtracking failed at iteration %d", iterations)
            break
        u, w, residual, size = u_try, w_try, res_try, size_try

    converged = size <= cfg.tolerance
    u_max = float(np.max(u))
    trivial = u_max < cfg.trivial_threshold
    positivity_violated = bool(
        not trivial and np.any(u[op.interior] <= 0.0))
    mu_estimate = None if trivial else mu_from_peak(dim, u_max)
    if not converged:
        logger.warning(
            "Newton stopped at residual %.3e after %d iterations", size,
            iterations)
    return SolveReport(
        converged=bool(converged and not positivity_violated),
        newton_iterations=iterations, final_residual=size,
        u=RadialField(grid=grid, values=u, laplacian=w),
        w=RadialField(grid=grid, values=w),
        mu_estimate=mu_estimate, positivity_violated=positivity_violated,
        trivial=trivial, eps=eps)


def independent_residual(dim: Dimension, report: SolveReport,
                         skip: int = 2) -> float:
    """Residual of a solution under a non conservative stencil.

    Uses f'' + (N-1) f'/r with second order np.gradient derivatives,
    ignoring `skip` nodes next to each end. The value is relative to the
    size of the equations and of the order of the discretization error.
    """
    r = report.u.r
    N = dim.N
    u = report.u.values
    w = report.w.values

    def lap(f):
        d1 = np.gradient(f, r, edge_order=2)
        d2 = np.gradient(d1, r, edge_order=2)
        with np.errstate(divide="ignore", invalid="ignore"):
            return d2 + (N - 1) * d1 / r
    keep = slice(skip, r.size - skip)
    up = np.maximum(u, 0.0) ** dim.p
    first = np.max(np.abs(lap(u) - w)[keep]) / max(np.max(np.abs(w)), 1.0)
    second = np.max(np.abs(lap(w) - up)[keep]) / max(np.max(up), 1.0)
    return float(max(first, second))


def rescaled_guess(dim: Dimension, previous: SolveReport, grid: RadialGrid,
                   mu_new: float) -> RadialField:
    """Previous solution moved to a new grid and bubble scale.

    A bubble rescales as U_mu(r) = mu^(-(N-4)/2) U_1(r/mu), so the guess is
    (mu_old/mu_new)^m u_old(r mu_old/mu_new), interpolated in log r.
    """
    factor = previous.mu_estimate / mu_new
    m = dim.m
    old_r = previous.u.r
    old_u = previous.u.values
    old_w = previous.w.values
    log_target = np.log(grid.nodes * factor)
    log_old = np.log(old_r)
    u = factor ** m * np.interp(
        log_target, log_old, old_u, left=0.0, right=0.0)
    w = factor ** (m + 2) * np.interp(
        log_target, log_old, old_w, left=0.0, right=0.0)
    u[0] = u[-1] = 0.0
    w[0] = w[-1] = 0.0
    return RadialField(grid=grid, values=u, laplacian=w)


def default_schedule(start: float = 0.2, ratio: float = 0.7,
                     count: int = 16) -> List[float]:
    """Geometric schedule start, start*ratio, ... (about 1e-3 at the end)."""
    return [start * ratio ** k for k in range(count)]


def validate_schedule(eps_schedule: Sequence[float]) -> List[float]:
    """Check a continuation schedule: strictly decreasing, first <= 0.2."""
    schedule = [float(e) for e in eps_schedule]
    if not schedule:
        msg = "Continuation schedule is empty"
        raise PumpwoodBiharmonicPreconditionException(message=msg)
    decreasing = all(a > b for a, b in zip(schedule[:-1], schedule[1:]))
    if not decreasing or schedule[0] > 0.2 or schedule[-1] <= 0.0:
        msg = (
            "Schedule must be strictly decreasing, positive and start at "
            "eps <= 0.2, got {schedule}")
        raise PumpwoodBiharmonicPreconditionException(
            message=msg, payload={"schedule": schedule})
    return schedule


def continuation_in_eps(dim: Dimension, eps_schedule: Sequence[float],
                        d_star: float, nodes: int = 400,
                        cfg: Optional[SolverConfig] = None,
                        grading: float = 1.0) -> List[SolveReport]:
    """Solve along a decreasing sequence of hole radii.

    The first solve starts from the projected bubble with mu = d* eps^sigma.
    Each next solve starts from the previous solution rescaled to the
    weight d_eps eps_next^sigma, d_eps being the weight measured on the
    previous solution. Stops at the first failed solve; the failing report
    is the last entry.
    """
    cfg = cfg or SolverConfig()
    schedule = validate_schedule(eps_schedule)
    sigma = float(dim.sigma)
    reports: List[SolveReport] = []
    for index, eps in enumerate(schedule):
        dom = AnnulusDomain(dim=dim, inner=eps)
        grid = RadialGrid.graded(dom, nodes, grading=grading)
        if reports:
            d_prev = reports[-1].d_estimate(dim)
            mu_pred = d_prev * eps ** sigma
            grid.check_resolution(mu_pred)
            init = rescaled_guess(dim, reports[-1], grid, mu_pred)
        else:
            mu_pred = d_star * eps ** sigma
            grid.check_resolution(mu_pred)
            init = bubble_projection(dim, dom, grid, mu_pred)
        report = solve_nonlinear(dim, dom, init, cfg, eps=eps)
        reports.append(report)
        logger.info(
            "continuation %d eps=%.6g converged=%s iterations=%d mu=%s",
            index, eps, report.converged, report.newton_iterations,
            report.mu_estimate)
        if not report.succeeded:
            logger.warning("continuation stopped at index %d", index)
            break
    return reports


def mu_from_peak(dim: Dimension, peak: float) -> float:
    """Weight of the bubble with the same maximum."""
    if not peak > 0:
        return math.inf
    return (dim.alpha / peak) ** (2.0 / (dim.N - 4))
