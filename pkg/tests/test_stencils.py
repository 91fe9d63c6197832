"""Finite-difference stencils and Richardson extrapolation."""
import numpy as np
import pytest
from pumpwood_biharmonic.stencils import (
    fd_laplacian, fd_bilaplacian, richardson, radial_laplacian_fd,
    ResidualReport)


def test_laplacian_of_square_norm():
    x = np.random.default_rng(0).normal(size=(7, 5))
    values = fd_laplacian(lambda y: np.sum(y ** 2, axis=-1), x, 0.1)
    assert np.allclose(values, 10.0, atol=1e-9)


def test_bilaplacian_of_quartic():
    # |x|^4 has Delta^2 = 8N(N+2)
    x = np.random.default_rng(1).normal(size=(4, 6))
    values = fd_bilaplacian(
        lambda y: np.sum(y ** 2, axis=-1) ** 2, x, 0.05)
    assert np.allclose(values, 8.0 * 6 * 8, rtol=1e-5)


def test_richardson_removes_even_powers():
    hs = [0.1, 0.05, 0.025]
    values = [1.0 + 3.0 * h ** 2 - 2.0 * h ** 4 for h in hs]
    assert float(richardson(values)) == pytest.approx(1.0, abs=1e-13)


def test_radial_laplacian_matches_closed_form():
    r = np.array([0.5, 1.0])
    values = radial_laplacian_fd(lambda s: s ** 2, r, 1e-3, 5)
    assert np.allclose(values, 10.0)


def test_residual_report_scaling():
    report = ResidualReport(
        residual=np.array([1e-3, 2.0]), scale=np.array([1.0, 1e4]),
        levels=3)
    assert report.max_relative == pytest.approx(1e-3)
    assert report.passed(1e-3)
    assert not report.passed(1e-4)
