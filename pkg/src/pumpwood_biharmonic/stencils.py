"""Finite-difference verification of the closed forms.

Second order central differences for the Laplacian in R^N, the iterated
stencil for the bi-Laplacian, and a Richardson table over halved steps.
These are oracles for the analytic module, never used by the solvers.
"""
import logging
import numpy as np
from dataclasses import dataclass
from typing import Callable, List, Sequence
from pumpwood_biharmonic.analytic import Dimension, corrector_eval


logger = logging.getLogger(__name__)


def fd_laplacian(f: Callable, x: np.ndarray, h) -> np.ndarray:
    """Central-difference Laplacian of f at points x of shape (M, N).

    Args:
        f (Callable):
            Function of an (M, N) array returning M values.
        x (np.ndarray):
            Evaluation points.
        h (float or np.ndarray):
            Step, either a scalar or one step per point.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    h = np.broadcast_to(np.asarray(h, dtype=float), x.shape[:1])
    n_dim = x.shape[-1]
    total = -2.0 * n_dim * f(x)
    for i in range(n_dim):
        step = np.zeros_like(x)
        step[:, i] = h
        total = total + f(x + step) + f(x - step)
    return total / (h * h)


def fd_bilaplacian(f: Callable, x: np.ndarray, h) -> np.ndarray:
    """Iterated central-difference bi-Laplacian of f."""
    return fd_laplacian(lambda y: fd_laplacian(f, y, h), x, h)


def richardson(values: Sequence[np.ndarray], order: int = 2,
               ratio: float = 2.0) -> np.ndarray:
    """Richardson extrapolation of values computed at h, h/ratio, ...

    Args:
        values (Sequence[np.ndarray]):
            Approximations ordered from the coarsest step to the finest.
        order (int):
            Leading order of the error, even expansions are assumed so
            every column removes the next even power.
        ratio (float):
            Step reduction between consecutive entries.
    Return:
        Extrapolated approximation using all levels.
    """
    table: List[np.ndarray] = [np.asarray(v, dtype=float) for v in values]
    power = order
    while len(table) > 1:
        factor = ratio ** power
        table = [
            (factor * fine - coarse) / (factor - 1.0)
            for coarse, fine in zip(table[:-1], table[1:])]
        power += 2
    return table[0]


def extrapolated_bilaplacian(f: Callable, points: np.ndarray, h0,
                             levels: int = 3) -> np.ndarray:
    """Bi-Laplacian at steps h0, h0/2, ... combined by Richardson."""
    h0 = np.asarray(h0, dtype=float)
    values = [
        fd_bilaplacian(f, points, h0 / 2 ** k) for k in range(levels)]
    return richardson(values)


def radial_laplacian_fd(f: Callable, r, h: float, N: int) -> np.ndarray:
    """Central-difference radial Laplacian f'' + (N-1) f'/r."""
    r = np.asarray(r, dtype=float)
    fp = (f(r + h) - f(r - h)) / (2.0 * h)
    fpp = (f(r + h) - 2.0 * f(r) + f(r - h)) / (h * h)
    return fpp + (N - 1) * fp / r


@dataclass(frozen=True)
class ResidualReport:
    """Finite-difference residual of an equation at sample points."""

    residual: np.ndarray
    """Richardson extrapolated residual at each point."""

    scale: np.ndarray
    """Per point scale max(1, |reference|) used for the relative check."""

    levels: int
    """Number of step halvings used in the extrapolation."""

    @property
    def max_relative(self) -> float:
        """Largest residual measured against its scale."""
        return float(np.max(np.abs(self.residual) / self.scale))

    def passed(self, tolerance: float = 1e-5) -> bool:
        """Check the scaled residual against a tolerance."""
        return self.max_relative <= tolerance


def random_bubble_samples(dim: Dimension, count: int,
                          rng: np.random.Generator,
                          mu_range=(0.5, 2.0), reach: float = 2.0):
    """Random bubbles and points within reach * mu of their centers."""
    mus = rng.uniform(*mu_range, size=count)
    centers = rng.uniform(-1.0, 1.0, size=(count, dim.N))
    directions = rng.normal(size=(count, dim.N))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    radii = reach * rng.uniform(0.0, 1.0, size=count)
    points = centers + (mus * radii)[:, None] * directions
    return mus, centers, points


def _rowwise_bubble(dim: Dimension, mus: np.ndarray, centers: np.ndarray):
    """Bubble whose parameters change with the row of the argument."""
    def f(y):
        q = mus ** 2 + np.sum((y - centers) ** 2, axis=-1)
        return dim.alpha * (mus / q) ** dim.m
    return f


def _rowwise_kernel(dim: Dimension, mus: np.ndarray, centers: np.ndarray,
                    i: int):
    N = dim.N

    def f(y):
        dist2 = np.sum((y - centers) ** 2, axis=-1)
        q = mus ** 2 + dist2
        if i == 0:
            return (
                dim.alpha * dim.m * mus ** ((N - 6) / 2.0) *
                (dist2 - mus ** 2) * q ** (-(N - 2) / 2.0))
        return (
            dim.alpha * (N - 4) * mus ** dim.m *
            (y[:, i - 1] - centers[:, i - 1]) * q ** (-(N - 2) / 2.0))
    return f


def bubble_pde_residual(dim: Dimension, count: int = 1000, seed: int = 0,
                        h_factor: float = 0.1,
                        levels: int = 3) -> ResidualReport:
    """Residual of Delta^2 U - U^p at random points and random bubbles."""
    rng = np.random.default_rng(seed)
    mus, centers, points = random_bubble_samples(dim, count, rng)
    f = _rowwise_bubble(dim, mus, centers)
    bilap = extrapolated_bilaplacian(f, points, h_factor * mus, levels)
    target = f(points) ** dim.p
    report = ResidualReport(
        residual=bilap - target, scale=np.maximum(1.0, np.abs(target)),
        levels=levels)
    logger.debug(
        "bubble residual N=%d max relative %.3e", dim.N, report.max_relative)
    return report


def kernel_residual(dim: Dimension, i: int, count: int = 200,
                    seed: int = 0, h_factor: float = 0.1,
                    levels: int = 3) -> ResidualReport:
    """Residual of Delta^2 Z_i - p U^(p-1) Z_i at random points."""
    rng = np.random.default_rng(seed)
    mus, centers, points = random_bubble_samples(dim, count, rng)
    z = _rowwise_kernel(dim, mus, centers, i)
    u = _rowwise_bubble(dim, mus, centers)(points)
    bilap = extrapolated_bilaplacian(z, points, h_factor * mus, levels)
    potential = dim.p * u ** (dim.p - 1.0)
    target = potential * z(points)
    scale = np.maximum(1.0, np.maximum(np.abs(target), potential))
    return ResidualReport(
        residual=bilap - target, scale=scale, levels=levels)


def corrector_residual(dim: Dimension, which: str, count: int = 200,
                       seed: int = 0, h: float = 0.1,
                       levels: int = 3) -> ResidualReport:
    """Residual of Delta^2 phi at random points with 1.5 <= |x| <= 3."""
    rng = np.random.default_rng(seed)
    directions = rng.normal(size=(count, dim.N))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    points = directions * rng.uniform(1.5, 3.0, size=count)[:, None]

    def f(y):
        return corrector_eval(dim, which, y)
    residual = extrapolated_bilaplacian(f, points, h, levels)
    return ResidualReport(
        residual=residual, scale=np.ones(count), levels=levels)
