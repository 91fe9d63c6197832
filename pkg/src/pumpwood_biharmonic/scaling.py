"""Log-log power law fits of measured scales."""
import numpy as np
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple
from scipy.linalg import lstsq
from pumpwood_biharmonic.analytic import Dimension
from pumpwood_biharmonic.exceptions import (
    PumpwoodBiharmonicPreconditionException)


MIN_POINTS = 4
MIN_DECADES = 1.0


@dataclass(frozen=True)
class ScalingFit:
    """Least squares fit log mu = intercept + slope log eps."""

    eps: Tuple[float, ...]
    mu: Tuple[float, ...]
    slope: float
    intercept: float
    slope_stderr: float
    """Standard error of the slope, 0 for an exact power law."""

    d_eps: Optional[Tuple[float, ...]] = None
    """mu / eps^sigma with the exact sigma of the dimension."""

    sigma: Optional[float] = None

    @property
    def relative_slope_error(self) -> Optional[float]:
        """|slope - sigma| / sigma."""
        if self.sigma is None:
            return None
        return abs(self.slope - self.sigma) / self.sigma

    def passed(self, tolerance: float = 0.10) -> bool:
        """Slope within tolerance * sigma of sigma."""
        error = self.relative_slope_error
        return error is not None and error <= tolerance

    def d_variation(self, decades: float = 1.0) -> Optional[float]:
        """(max - min) / max of d_eps over the smallest decades of eps."""
        if self.d_eps is None:
            return None
        eps = np.asarray(self.eps)
        d = np.asarray(self.d_eps)
        tail = d[eps <= eps.min() * 10.0 ** decades]
        return float((tail.max() - tail.min()) / tail.max())

    def to_dict(self) -> dict:
        """Serializable summary."""
        return {
            "slope": self.slope, "intercept": self.intercept,
            "slope_stderr": self.slope_stderr, "sigma": self.sigma,
            "relative_slope_error": self.relative_slope_error,
            "points": len(self.eps)}


def loglog_slope(x: Sequence[float], y: Sequence[float]
                 ) -> Tuple[float, float, float]:
    """Slope, intercept and slope standard error of log y against log x."""
    lx = np.log(np.asarray(x, dtype=float))
    ly = np.log(np.asarray(y, dtype=float))
    design = np.column_stack([np.ones_like(lx), lx])
    coef, _, _, _ = lstsq(design, ly)
    intercept, slope = float(coef[0]), float(coef[1])
    dof = lx.size - 2
    if dof > 0:
        resid = ly - design @ coef
        variance = float(resid @ resid) / dof
        spread = float(np.sum((lx - lx.mean()) ** 2))
        stderr = float(np.sqrt(variance / spread)) if spread > 0 else 0.0
    else:
        stderr = 0.0
    return slope, intercept, stderr


def fit_scaling(pairs: Sequence[Tuple[float, float]],
                dim: Optional[Dimension] = None) -> ScalingFit:
    """Fit mu against eps in log-log scale.

    Args:
        pairs (Sequence[Tuple[float, float]]):
            (eps, mu) pairs, at least four spanning a decade of eps.
        dim (Dimension):
            When given, d_eps = mu / eps^sigma is reported with the exact
            sigma of the dimension.
    Raises:
        PumpwoodBiharmonicPreconditionException:
            Too few points, too short a range or non positive entries.
    """
    pairs: List[Tuple[float, float]] = [
        (float(e), float(m)) for e, m in pairs]
    if len(pairs) < MIN_POINTS:
        msg = "Scaling fit needs at least {required} points, got {count}"
        raise PumpwoodBiharmonicPreconditionException(
            message=msg, payload={
                "required": MIN_POINTS, "count": len(pairs)})
    eps = np.array([e for e, _ in pairs])
    mu = np.array([m for _, m in pairs])
    if np.any(eps <= 0) or np.any(mu <= 0) or not np.all(
            np.isfinite(mu)):
        msg = "Scaling fit needs positive finite eps and mu"
        raise PumpwoodBiharmonicPreconditionException(message=msg)
    decades = float(np.log10(eps.max() / eps.min()))
    if decades < MIN_DECADES:
        msg = "Scaling fit needs eps spanning a decade, got {decades}"
        raise PumpwoodBiharmonicPreconditionException(
            message=msg, payload={"decades": decades})

    slope, intercept, stderr = loglog_slope(eps, mu)
    d_eps = sigma = None
    if dim is not None:
        sigma = float(dim.sigma)
        d_eps = tuple(float(v) for v in mu / eps ** sigma)
    return ScalingFit(
        eps=tuple(eps.tolist()), mu=tuple(mu.tolist()), slope=slope,
        intercept=intercept, slope_stderr=stderr, d_eps=d_eps, sigma=sigma)
