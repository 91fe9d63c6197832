"""Projection, remainder brackets and error term of the expansion."""
import numpy as np
import pytest
from pumpwood_biharmonic.analytic import (
    Dimension, ReducedParams, bubble_radial, bubble_laplacian_radial,
    coeff_a1_a2)
from pumpwood_biharmonic.domain import AnnulusDomain
from pumpwood_biharmonic.expansion import (
    boundary_interpolant, exact_projection, exact_remainder,
    compute_projection, assemble_remainder, check_bounds, error_term,
    error_norms, rescaled_boundary_values, expansion_case)
from pumpwood_biharmonic.exceptions import (
    PumpwoodBiharmonicPreconditionException)


def _params(dim, eps, d=1.9):
    return ReducedParams(d=d, tau=(0.0,) * dim.N, eps=eps)


@pytest.mark.parametrize("eps", [0.1, 1e-2, 1e-3])
def test_interpolant_matches_boundary_data(dim5, eps):
    dom = AnnulusDomain(dim=dim5, inner=eps)
    mu = 1.9 * eps ** 0.75
    F = boundary_interpolant(dim5, dom, mu)
    for r in (eps, 1.0):
        assert float(F.values(r)) == pytest.approx(
            float(bubble_radial(dim5, r, mu)), rel=1e-9)
        assert float(F.laplacian(r)) == pytest.approx(
            float(bubble_laplacian_radial(dim5, r, mu)), rel=1e-9)


def test_exact_projection_navier_data(dim6):
    dom = AnnulusDomain(dim=dim6, inner=0.05)
    pu, lap = exact_projection(dim6, dom, 0.2, np.array([0.05, 1.0]))
    scale = float(bubble_radial(dim6, 0.0, 0.2))
    assert np.all(np.abs(pu) <= 1e-10 * scale)
    assert np.all(np.abs(lap) <= 1e-10 * scale / 0.2 ** 2)


@pytest.mark.parametrize("N", [5, 6])
@pytest.mark.parametrize("eps", [0.1, 1e-2])
def test_remainder_boundary_values(N, eps):
    dim = Dimension(N)
    rp = _params(dim, eps)
    dom = AnnulusDomain(dim=dim, inner=eps)
    R = exact_remainder(dim, dom, rp)
    mu = rp.mu(dim)
    a1, a2 = coeff_a1_a2(dim, rp)
    scale = dim.alpha * mu ** dim.m
    outer = (
        scale - float(bubble_radial(dim, 1.0, mu)) +
        a1 * eps ** (N - 4) + a2 * eps ** (N - 2))
    h_hole = 2.0 * (N - 2) / N - (N - 4) / N * eps ** 2
    hole = (
        scale * h_hole - float(bubble_radial(dim, eps, mu)) + a1 + a2)
    assert float(R.values(1.0)) == pytest.approx(outer, rel=1e-8)
    assert float(R.values(eps)) == pytest.approx(hole, rel=1e-8, abs=1e-12)


def test_numeric_remainder_agrees(dim5):
    eps = 0.05
    rp = _params(dim5, eps)
    dom = AnnulusDomain(dim=dim5, inner=eps)
    PU = compute_projection(dim5, dom, rp, nodes=800)
    numeric = assemble_remainder(dim5, dom, rp, PU)
    exact = exact_remainder(dim5, dom, rp).values(PU.r)
    scale = float(bubble_radial(dim5, 0.0, rp.mu(dim5)))
    assert np.max(np.abs(numeric.values - exact)) <= 1e-3 * scale


def test_radial_pipeline_rejects_shift(dim5):
    rp = ReducedParams(d=1.9, tau=(0.1, 0.0, 0.0, 0.0, 0.0), eps=0.1)
    dom = AnnulusDomain(dim=dim5, inner=0.1)
    with pytest.raises(PumpwoodBiharmonicPreconditionException):
        exact_remainder(dim5, dom, rp)


def test_bounds_report_regions(dim5):
    eps = 0.01
    rp = _params(dim5, eps)
    dom = AnnulusDomain(dim=dim5, inner=eps)
    PU = compute_projection(dim5, dom, rp, nodes=400)
    R = assemble_remainder(dim5, dom, rp, PU)
    core = check_bounds(dim5, rp, R, region="core")
    full = check_bounds(dim5, rp, R, region="full")
    assert np.isfinite(core.sup_ratio_R) and np.isfinite(core.sup_ratio_dR)
    assert full.sup_ratio_R >= core.sup_ratio_R
    assert core.grid_meta["nodes_in_region"] < full.grid_meta["nodes"]
    with pytest.raises(PumpwoodBiharmonicPreconditionException):
        check_bounds(dim5, rp, R, region="outer")


def test_error_term_small_in_expanded_variables(dim5):
    eps = 1e-3
    rp = _params(dim5, eps)
    dom = AnnulusDomain(dim=dim5, inner=eps)
    PU = compute_projection(dim5, dom, rp, nodes=400)
    E = error_term(dim5, rp, PU)
    assert E.grid.outer == pytest.approx(eps ** -0.75)
    star2, lq = error_norms(dim5, E)
    peak = float(bubble_radial(dim5, 0.0, rp.d)) ** dim5.p
    assert 0.0 < lq
    assert star2 < np.inf
    assert np.max(np.abs(E.values)) < peak


def test_rescaled_boundary_values_keys(dim5):
    rp = _params(dim5, 0.01)
    dom = AnnulusDomain(dim=dim5, inner=0.01)
    values = rescaled_boundary_values(dim5, dom, rp)
    assert set(values) == {"outer", "hole", "outer_bound", "hole_bound"}
    assert abs(values["hole"]) <= values["hole_bound"]


def test_expansion_case_report(dim5):
    report = expansion_case(dim5, 0.05, 1.9, nodes=300, region="core")
    data = report.to_dict()
    assert data["region"] == "core"
    assert data["eps"] == 0.05
    assert np.isfinite(data["E_starstar"])


@pytest.mark.slow
def test_expansion_report_grid_refinement(dim5):
    coarse = expansion_case(dim5, 0.05, 1.9, nodes=400, region="core")
    fine = expansion_case(dim5, 0.05, 1.9, nodes=800, region="core")
    assert fine.sup_ratio_R == pytest.approx(coarse.sup_ratio_R, rel=0.05)
    assert fine.sup_ratio_dR == pytest.approx(coarse.sup_ratio_dR, rel=0.05)
    assert fine.E_starstar == pytest.approx(coarse.E_starstar, rel=0.02)
