"""Annulus geometry, graded grids and radial fields."""
import numpy as np
import pytest
from pumpwood_biharmonic.domain import (
    AnnulusDomain, RadialGrid, RadialField, MIN_NODES_PER_SCALE)
from pumpwood_biharmonic.exceptions import (
    PumpwoodBiharmonicPreconditionException,
    PumpwoodBiharmonicGridException)


def test_invalid_radii(dim5):
    with pytest.raises(PumpwoodBiharmonicPreconditionException):
        AnnulusDomain(dim=dim5, inner=0.5, outer=0.5)
    with pytest.raises(PumpwoodBiharmonicPreconditionException):
        AnnulusDomain(dim=dim5, inner=-0.1)


def test_contains_and_expanded(dim5):
    dom = AnnulusDomain(dim=dim5, inner=0.1)
    assert dom.contains(np.array([0.5, 0.0, 0.0, 0.0, 0.0]))
    assert not dom.contains(np.array([0.05, 0.0, 0.0, 0.0, 0.0]))
    big = dom.expanded(0.01)
    assert big.outer == pytest.approx(0.01 ** -0.75)
    assert big.inner == pytest.approx(0.1 * 0.01 ** -0.75)


def test_geometric_grid_on_annulus(dim5):
    dom = AnnulusDomain(dim=dim5, inner=0.01)
    grid = RadialGrid.graded(dom, 101)
    ratios = grid.nodes[1:] / grid.nodes[:-1]
    assert np.allclose(ratios, ratios[0], rtol=1e-10)
    assert grid.inner == 0.01
    assert grid.outer == 1.0
    assert grid.compatible(dom)


def test_uniform_grid(dim5):
    dom = AnnulusDomain(dim=dim5, inner=0.2)
    grid = RadialGrid.graded(dom, 9, grading=0.0)
    assert np.allclose(grid.nodes, np.linspace(0.2, 1.0, 9))


def test_grid_nodes_read_only(dim5):
    grid = RadialGrid.graded(AnnulusDomain(dim=dim5, inner=0.1), 20)
    with pytest.raises(ValueError):
        grid.nodes[3] = 0.5


def test_non_increasing_grid_rejected():
    with pytest.raises(PumpwoodBiharmonicGridException):
        RadialGrid(nodes=np.array([0.0, 0.5, 0.4, 1.0]))


def test_refined_keeps_nodes(dim5):
    grid = RadialGrid.graded(AnnulusDomain(dim=dim5, inner=0.1), 11)
    fine = grid.refined()
    assert fine.size == 21
    assert np.array_equal(fine.nodes[::2], grid.nodes)


def test_resolution_check(dim5):
    dom = AnnulusDomain(dim=dim5, inner=0.01)
    grid = RadialGrid.graded(dom, 200)
    grid.check_resolution(0.1)
    coarse = RadialGrid.graded(dom, 20)
    assert coarse.count_below(0.02) < MIN_NODES_PER_SCALE
    with pytest.raises(PumpwoodBiharmonicGridException):
        coarse.check_resolution(0.1)


def test_field_validation(dim5):
    grid = RadialGrid.graded(AnnulusDomain(dim=dim5, inner=0.1), 10)
    with pytest.raises(PumpwoodBiharmonicGridException):
        RadialField(grid=grid, values=np.zeros(9))
    values = np.zeros(10)
    values[4] = np.nan
    with pytest.raises(PumpwoodBiharmonicGridException):
        RadialField(grid=grid, values=values)


def test_volume_of_unit_ball(dim5):
    grid = RadialGrid.graded(
        AnnulusDomain(dim=dim5, inner=0.0), 2001, grading=0.0)
    field = RadialField(grid=grid, values=np.ones(grid.size))
    volume = field.integrate(dim5, field.values)
    assert volume == pytest.approx(dim5.sphere_measure / 5.0, rel=1e-5)


def test_derivatives_of_quadratic(dim5):
    grid = RadialGrid.graded(
        AnnulusDomain(dim=dim5, inner=0.1), 50, grading=0.0)
    field = RadialField.from_function(grid, lambda r: r ** 2)
    stack = field.with_derivatives(2).derivatives
    assert stack.shape == (3, 50)
    assert np.allclose(stack[1], 2.0 * grid.nodes)
    assert np.allclose(stack[2], 2.0)


def test_field_arithmetic(dim5):
    grid = RadialGrid.graded(AnnulusDomain(dim=dim5, inner=0.1), 10)
    a = RadialField(grid=grid, values=np.ones(10), laplacian=np.zeros(10))
    b = a.scale(2.0)
    total = a + b
    assert np.allclose(total.values, 3.0)
    assert np.allclose(total.laplacian, 0.0)
    other = RadialGrid.graded(AnnulusDomain(dim=dim5, inner=0.2), 10)
    with pytest.raises(PumpwoodBiharmonicGridException):
        a + RadialField(grid=other, values=np.ones(10))
