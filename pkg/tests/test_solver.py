"""Linear and nonlinear radial Navier solves."""
import numpy as np
import pytest
from numpy.polynomial import Polynomial
from pumpwood_biharmonic.analytic import (
    Dimension, bubble_radial, bubble_laplacian_radial, radial_bilaplacian)
from pumpwood_biharmonic.domain import AnnulusDomain, RadialGrid, RadialField
from pumpwood_biharmonic.expansion import exact_projection
from pumpwood_biharmonic.solver import (
    RadialLaplacian, SolverConfig, solve_linear_navier, bubble_projection,
    solve_nonlinear, independent_residual, default_schedule,
    validate_schedule, continuation_in_eps, mu_from_peak, rescaled_guess,
    SolveReport)
from pumpwood_biharmonic.exceptions import (
    PumpwoodBiharmonicGridException,
    PumpwoodBiharmonicPreconditionException)


def _manufactured(dim, eps):
    """u = (r - eps)^3 (1 - r)^3 and its bi-Laplacian."""
    u = Polynomial([-eps, 1.0]) ** 3 * Polynomial([1.0, -1.0]) ** 3
    derivatives = [u.deriv(k) for k in range(1, 5)]

    def rhs(r):
        return radial_bilaplacian(dim, r, *[d(r) for d in derivatives])
    return u, rhs


@pytest.mark.parametrize("N", [5, 6])
def test_manufactured_solution_second_order(N):
    dim = Dimension(N)
    eps = 0.2
    dom = AnnulusDomain(dim=dim, inner=eps)
    u, rhs = _manufactured(dim, eps)
    errors = []
    for n in (81, 161, 321):
        grid = RadialGrid.graded(dom, n, grading=0.0)
        phi = solve_linear_navier(
            dim, dom, RadialField.from_function(grid, rhs))
        errors.append(np.max(np.abs(phi.values - u(grid.nodes))))
    orders = np.log2(np.array(errors[:-1]) / np.array(errors[1:]))
    assert np.all(orders >= 1.9)


def test_maximum_principle_random_sources():
    rng = np.random.default_rng(2024)
    for _ in range(20):
        dim = Dimension(int(rng.integers(5, 8)))
        inner = float(rng.choice([0.0, rng.uniform(0.01, 0.5)]))
        dom = AnnulusDomain(dim=dim, inner=inner)
        grid = RadialGrid.graded(dom, 120, scale_hint=0.1)
        source = rng.uniform(0.0, 10.0, size=grid.size)
        field = solve_linear_navier(
            dim, dom, RadialField(grid=grid, values=source))
        scale = np.max(np.abs(field.values))
        assert np.all(field.values >= -1e-12 * scale)
        assert np.all(field.laplacian <= 1e-12 * np.max(
            np.abs(field.laplacian)))


def test_interior_matrix_is_m_matrix(dim5):
    grid = RadialGrid.graded(AnnulusDomain(dim=dim5, inner=0.05), 60)
    matrix = -RadialLaplacian(dim5, grid).matrix.toarray()
    off = matrix - np.diag(np.diag(matrix))
    assert np.all(np.diag(matrix) > 0.0)
    assert np.all(off <= 0.0)


def test_projection_matches_closed_form(dim5):
    dom = AnnulusDomain(dim=dim5, inner=0.1)
    mu = 0.3
    grid = RadialGrid.graded(dom, 800)
    numeric = bubble_projection(dim5, dom, grid, mu)
    pu, lap = exact_projection(dim5, dom, mu, grid.nodes)
    scale = float(bubble_radial(dim5, 0.0, mu))
    assert np.max(np.abs(numeric.values - pu)) <= 5e-3 * scale
    assert numeric.values[0] == 0.0 and numeric.values[-1] == 0.0


def test_grid_domain_mismatch(dim5):
    grid = RadialGrid.graded(AnnulusDomain(dim=dim5, inner=0.1), 50)
    other = AnnulusDomain(dim=dim5, inner=0.2)
    with pytest.raises(PumpwoodBiharmonicGridException):
        solve_linear_navier(
            dim5, other, RadialField(grid=grid, values=np.ones(50)))


def test_zero_guess_is_trivial(dim5):
    dom = AnnulusDomain(dim=dim5, inner=0.1)
    grid = RadialGrid.graded(dom, 100)
    report = solve_nonlinear(
        dim5, dom, RadialField(grid=grid, values=np.zeros(100)))
    assert report.converged
    assert report.trivial
    assert report.mu_estimate is None
    assert not report.succeeded
    assert report.d_estimate(dim5) is None


def test_mu_from_peak_inverts_bubble(dim6):
    peak = float(bubble_radial(dim6, 0.0, 0.037))
    assert mu_from_peak(dim6, peak) == pytest.approx(0.037, rel=1e-12)


def test_default_schedule():
    schedule = default_schedule()
    assert len(schedule) == 16
    assert schedule[0] == 0.2
    assert schedule[-1] == pytest.approx(0.2 * 0.7 ** 15)
    assert validate_schedule(schedule) == schedule


@pytest.mark.parametrize("schedule", [[], [0.3, 0.1], [0.1, 0.1], [0.1, 0.2]])
def test_invalid_schedules(schedule):
    with pytest.raises(PumpwoodBiharmonicPreconditionException):
        validate_schedule(schedule)


@pytest.mark.slow
def test_nonlinear_solve_from_projected_bubble(dim5):
    eps = 0.2
    dom = AnnulusDomain(dim=dim5, inner=eps)
    grid = RadialGrid.graded(dom, 400)
    mu = 1.9 * eps ** 0.75
    init = bubble_projection(dim5, dom, grid, mu)
    report = solve_nonlinear(dim5, dom, init, SolverConfig())
    assert report.succeeded
    assert report.final_residual <= 1e-9
    assert independent_residual(dim5, report) < 1e-1


@pytest.mark.slow
def test_continuation_short_schedule(dim5):
    reports = continuation_in_eps(dim5, [0.2, 0.14, 0.098], 1.9)
    assert len(reports) == 3
    assert all(r.succeeded for r in reports)
    mus = [r.mu_estimate for r in reports]
    assert mus[0] > mus[1] > mus[2]


def test_rescaled_guess_moves_bubble_to_new_weight(dim5):
    grid = RadialGrid.graded(AnnulusDomain(dim=dim5, inner=1e-3), 2000)
    mu_old, mu_new = 0.3, 0.2
    previous = SolveReport(
        converged=True, newton_iterations=0, final_residual=0.0,
        u=RadialField(
            grid=grid, values=bubble_radial(dim5, grid.nodes, mu_old)),
        w=RadialField(
            grid=grid,
            values=bubble_laplacian_radial(dim5, grid.nodes, mu_old)),
        mu_estimate=mu_old, positivity_violated=False, eps=1e-3)
    new_grid = RadialGrid.graded(AnnulusDomain(dim=dim5, inner=2e-3), 1000)
    guess = rescaled_guess(dim5, previous, new_grid, mu_new)
    keep = (new_grid.nodes > 2e-3) & (new_grid.nodes < 0.6)
    r = new_grid.nodes[keep]
    assert np.allclose(
        guess.values[keep], bubble_radial(dim5, r, mu_new), rtol=1e-3)
    assert np.allclose(
        guess.laplacian[keep], bubble_laplacian_radial(dim5, r, mu_new),
        rtol=1e-3)
    assert guess.values[0] == guess.values[-1] == 0.0


@pytest.mark.slow
def test_mu_estimate_grid_refinement(dim5):
    eps = 0.1
    dom = AnnulusDomain(dim=dim5, inner=eps)
    mus = []
    for nodes in (400, 800):
        grid = RadialGrid.graded(dom, nodes)
        init = bubble_projection(dim5, dom, grid, 1.9 * eps ** 0.75)
        report = solve_nonlinear(dim5, dom, init, SolverConfig(), eps=eps)
        assert report.succeeded
        mus.append(report.mu_estimate)
    assert mus[1] == pytest.approx(mus[0], rel=5e-3)
