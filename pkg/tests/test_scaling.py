"""Log-log fits of the concentration scale."""
import numpy as np
import pytest
from pumpwood_biharmonic.scaling import fit_scaling, loglog_slope
from pumpwood_biharmonic.exceptions import (
    PumpwoodBiharmonicPreconditionException)


def _eps(count=12):
    return [0.2 * 0.7 ** k for k in range(count)]


def test_exact_power_law(dim5):
    eps = _eps()
    fit = fit_scaling([(e, 2.0 * e ** 0.75) for e in eps], dim=dim5)
    assert fit.slope == pytest.approx(0.75, abs=1e-12)
    assert fit.slope_stderr == pytest.approx(0.0, abs=1e-10)
    assert np.allclose(fit.d_eps, 2.0)
    assert fit.d_variation() == pytest.approx(0.0, abs=1e-12)
    assert fit.passed()


def test_noisy_power_law(dim5):
    rng = np.random.default_rng(7)
    eps = _eps(16)
    pairs = [
        (e, 2.0 * e ** 0.75 * (1.0 + 0.01 * rng.standard_normal()))
        for e in eps]
    fit = fit_scaling(pairs, dim=dim5)
    assert abs(fit.slope - 0.75) < 0.02
    assert fit.relative_slope_error < 0.10


def test_wrong_exponent_fails(dim6):
    eps = _eps()
    fit = fit_scaling([(e, e ** 0.9) for e in eps], dim=dim6)
    assert not fit.passed()
    assert fit.to_dict()["sigma"] == pytest.approx(2.0 / 3.0)


def test_without_dimension():
    fit = fit_scaling([(e, e ** 0.5) for e in _eps()])
    assert fit.sigma is None and fit.d_eps is None
    assert not fit.passed()


def test_too_few_points():
    with pytest.raises(PumpwoodBiharmonicPreconditionException):
        fit_scaling([(0.1, 1.0), (0.01, 0.2), (0.001, 0.03)])


def test_short_range():
    with pytest.raises(PumpwoodBiharmonicPreconditionException):
        fit_scaling([(0.1, 1.0), (0.09, 0.9), (0.08, 0.8), (0.07, 0.7)])


def test_non_positive_scale():
    with pytest.raises(PumpwoodBiharmonicPreconditionException):
        fit_scaling([(e, -1.0) for e in _eps()])


def test_loglog_slope_two_points():
    slope, intercept, stderr = loglog_slope([1.0, 10.0], [3.0, 30.0])
    assert slope == pytest.approx(1.0)
    assert intercept == pytest.approx(np.log(3.0))
    assert stderr == 0.0
