"""Reduced energy Psi, its critical point and the energy expansion."""
import numpy as np
import pytest
from pumpwood_biharmonic.analytic import Dimension, ReducedParams
from pumpwood_biharmonic.domain import AnnulusDomain, RadialField, RadialGrid
from pumpwood_biharmonic.expansion import compute_projection, exact_projection
from pumpwood_biharmonic.quadrature import (
    ReducedConstants, constant_bN, hole_coefficient)
from pumpwood_biharmonic.reduced_energy import (
    PsiModel, hole_profile, hole_profile_derivative, psi_eval,
    psi_gradient, psi_dd, psi_hessian, critical_d_closed_form,
    psi_critical_point, derivative_sign_changes, energy_eval,
    projection_energy, energy_expansion_check, to_expanded_variables,
    numeric_projection_energy)
from pumpwood_biharmonic.exceptions import (
    PumpwoodBiharmonicPreconditionException)


def _model(dim: Dimension, c_n: float = 30.0, hole: str = "effective"):
    constants = ReducedConstants(
        N=dim.N, aN=1.0, bN=constant_bN(dim), cN=c_n,
        sphere_measure=dim.sphere_measure, kN=dim.k_theory,
        b_eff=hole_coefficient(dim, dim.k_theory))
    return PsiModel(dim=dim, constants=constants, H00=1.2, hole=hole)


def test_hole_coefficient_choice(dim5):
    assert _model(dim5).b == pytest.approx(3.0 * dim5.sphere_measure)
    assert _model(dim5, hole="stated").b == pytest.approx(6.0 * np.pi ** 2)
    with pytest.raises(PumpwoodBiharmonicPreconditionException):
        _model(dim5, hole="other")


def test_psi_value(dim5):
    model = _model(dim5)
    expected = model.b * 5.0 * dim5.alpha ** 2 / 8.0 + model.c * 2.0
    assert psi_eval(model, 2.0) == pytest.approx(expected)
    with pytest.raises(PumpwoodBiharmonicPreconditionException):
        psi_eval(model, 0.0)


def test_hole_profile_derivative(dim6):
    s = np.array([0.0, 0.4, 2.0])
    h = 1e-6
    numeric = (hole_profile(dim6, s + h) - hole_profile(dim6, s - h)) / (
        2.0 * h)
    assert np.allclose(hole_profile_derivative(dim6, s), numeric, rtol=1e-6)
    assert float(hole_profile_derivative(dim6, 0.0)) < 0.0


def test_gradient_by_differences(dim5):
    model = _model(dim5)
    tau = np.array([0.1, -0.2, 0.05, 0.0, 0.3])
    grad = psi_gradient(model, 1.5, tau)
    h = 1e-6
    d_num = (psi_eval(model, 1.5 + h, tau) - psi_eval(model, 1.5 - h, tau)
             ) / (2.0 * h)
    assert grad[0] == pytest.approx(d_num, rel=1e-6)
    shift = np.zeros(5)
    shift[1] = h
    t_num = (psi_eval(model, 1.5, tau + shift) -
             psi_eval(model, 1.5, tau - shift)) / (2.0 * h)
    assert grad[2] == pytest.approx(t_num, rel=1e-5)


@pytest.mark.parametrize("N", [5, 6, 7])
def test_critical_point_is_saddle(N):
    dim = Dimension(N)
    model = _model(dim)
    point = psi_critical_point(model)
    assert point.d_star == pytest.approx(
        critical_d_closed_form(model), rel=1e-10)
    assert point.gradient_residual <= 1e-12
    assert point.signature == {"positive": 1, "negative": N, "zero": 0}
    assert point.is_saddle
    assert psi_dd(model, point.d_star) > 0.0
    assert derivative_sign_changes(model) == 1


def test_hessian_symmetric(dim5):
    model = _model(dim5)
    tau = np.array([0.3, 0.1, 0.0, -0.2, 0.1])
    hess = psi_hessian(model, 1.7, tau)
    assert np.allclose(hess, hess.T, rtol=1e-6, atol=1e-8)


def test_critical_point_invariant_under_common_scaling(dim5):
    model = _model(dim5)
    assert psi_critical_point(model.scaled(7.0)).d_star == pytest.approx(
        psi_critical_point(model).d_star, rel=1e-12)


@pytest.mark.parametrize("factor", [0.5, 2.0, 10.0])
def test_critical_point_scales_with_h00(dim6, factor):
    model = _model(dim6)
    base = psi_critical_point(model).d_star
    moved = psi_critical_point(model.replace_h00(factor)).d_star
    assert moved == pytest.approx(
        base * factor ** (-1.0 / (2 * 6 - 6)), rel=1e-10)


def test_energy_on_grid_matches_gauss(dim5):
    eps, mu = 0.1, 0.3
    dom = AnnulusDomain(dim=dim5, inner=eps)
    grid = RadialGrid.graded(dom, 4001)
    pu, lap = exact_projection(dim5, dom, mu, grid.nodes)
    field = RadialField(grid=grid, values=pu, laplacian=lap)
    assert energy_eval(dim5, dom, field) == pytest.approx(
        projection_energy(dim5, eps, mu), rel=1e-3)


def test_expanded_variables(dim5):
    dom = AnnulusDomain(dim=dim5, inner=0.01)
    grid = RadialGrid.graded(dom, 50)
    field = RadialField(
        grid=grid, values=np.ones(50), laplacian=np.ones(50))
    expanded = to_expanded_variables(dim5, field, 0.01)
    factor = 0.01 ** (0.75 * 0.5)
    assert np.allclose(expanded.values, factor)
    assert np.allclose(expanded.laplacian, factor * 0.01 ** 1.5)
    assert expanded.grid.outer == pytest.approx(0.01 ** -0.75)


@pytest.mark.slow
def test_energy_expansion_dimension_five(dim5):
    model = PsiModel.build(dim5)
    assert model.H00 == pytest.approx(1.2, abs=1e-10)
    check = energy_expansion_check(model, eps=1e-4)
    assert check.passed
    assert check.leading == pytest.approx(0.4 * model.constants.aN)


@pytest.mark.parametrize("eps", [0.1, 0.02])
def test_energy_invariant_under_expansion(dim5, eps):
    dom = AnnulusDomain(dim=dim5, inner=eps)
    rp = ReducedParams(d=1.9, tau=(0.0,) * 5, eps=eps)
    field = compute_projection(dim5, dom, rp, nodes=400)
    expanded = to_expanded_variables(dim5, field, eps)
    physical = energy_eval(dim5, dom, field)
    assert physical > 0.0
    assert energy_eval(dim5, dom.expanded(eps), expanded) == pytest.approx(
        physical, rel=1e-10)


def test_numeric_projection_energy_matches_exact(dim5):
    eps, d = 0.05, 1.9
    mu = d * eps ** 0.75
    assert numeric_projection_energy(dim5, eps, d, nodes=2000) == (
        pytest.approx(projection_energy(dim5, eps, mu), rel=1e-3))


def test_unknown_projection_rejected(dim5):
    with pytest.raises(PumpwoodBiharmonicPreconditionException):
        energy_expansion_check(_model(dim5), eps=1e-2, projection="sampled")


@pytest.mark.slow
def test_energy_deviation_shrinks_with_eps(dim5):
    model = PsiModel.build(dim5)
    checks = [energy_expansion_check(model, eps=e) for e in (1e-2, 1e-3, 1e-4)]
    deviations = [c.deviation for c in checks]
    assert deviations[0] > deviations[1] > deviations[2]
    assert not checks[0].passed
    assert deviations[0] == pytest.approx(0.92, abs=0.05)
    assert checks[2].passed


@pytest.mark.slow
def test_energy_check_on_solver_projection(dim5):
    model = PsiModel.build(dim5)
    exact = energy_expansion_check(model, eps=1e-2)
    numeric = energy_expansion_check(model, eps=1e-2, projection="numeric")
    assert numeric.projection == "numeric"
    assert numeric.self_convergence < 2e-2
    assert numeric.deviation == pytest.approx(exact.deviation, abs=2e-2)
