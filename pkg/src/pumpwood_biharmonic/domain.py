"""Pierced ball geometry and radial fields sampled on graded meshes."""
import numpy as np
from dataclasses import dataclass, field, replace
from typing import Optional
from scipy.integrate import trapezoid
from pumpwood_biharmonic.analytic import Dimension
from pumpwood_biharmonic.exceptions import (
    PumpwoodBiharmonicPreconditionException,
    PumpwoodBiharmonicGridException)


MIN_NODES_PER_SCALE = 8
"""Nodes required inside r < mu and inside r < 2 eps."""


@dataclass(frozen=True)
class AnnulusDomain:
    """Annulus inner < |x| < outer, inner = 0 is the solid ball."""

    dim: Dimension
    inner: float
    outer: float = 1.0

    def __post_init__(self):
        """__post_init__."""
        if not (0.0 <= self.inner < self.outer):
            msg = (
                "Annulus radii must satisfy 0 <= inner < outer, got "
                "inner={inner} outer={outer}")
            raise PumpwoodBiharmonicPreconditionException(
                message=msg, payload={
                    "inner": self.inner, "outer": self.outer})

    @property
    def is_ball(self) -> bool:
        """True for the solid ball."""
        return self.inner == 0.0

    def contains(self, x) -> bool:
        """Check if points lie in the open domain."""
        r = np.linalg.norm(np.atleast_2d(np.asarray(x, dtype=float)), axis=-1)
        return bool(np.all((r > self.inner) & (r < self.outer)) or (
            self.is_ball and np.all(r < self.outer)))

    def expanded(self, eps: float) -> "AnnulusDomain":
        """Domain eps^(-sigma) times this one (expanded variables)."""
        scale = eps ** -float(self.dim.sigma)
        return AnnulusDomain(
            dim=self.dim, inner=self.inner * scale, outer=self.outer * scale)


@dataclass(frozen=True)
class RadialGrid:
    """Strictly increasing radii from the inner to the outer radius.

    Nodes follow r(s) = a + (b - a) expm1(beta s) / expm1(beta) for uniform
    s in [0, 1]. With a > 0 and grading 1 this is the geometric mesh
    r = a (b/a)^s, which resolves the hole and the bubble scale at equal
    relative spacing.
    """

    nodes: np.ndarray
    grading: float = 1.0

    def __post_init__(self):
        """__post_init__."""
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 4 or np.any(np.diff(nodes) <= 0):
            msg = "Radial grid must be strictly increasing with >= 4 nodes"
            raise PumpwoodBiharmonicGridException(
                message=msg, payload={"size": int(nodes.size)})
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)

    @classmethod
    def graded(cls, domain: AnnulusDomain, n: int, grading: float = 1.0,
               scale_hint: Optional[float] = None) -> "RadialGrid":
        """Build a graded grid on the domain.

        Args:
            domain (AnnulusDomain):
                Domain to mesh.
            n (int):
                Number of nodes including both ends.
            grading (float):
                0 gives a uniform mesh, 1 the geometric mesh on annuli.
            scale_hint (float):
                Smallest length to resolve on the solid ball, usually the
                bubble weight mu.
        """
        a, b = domain.inner, domain.outer
        if domain.is_ball:
            h0 = (scale_hint or 1e-2 * b) / 4.0
        else:
            h0 = a
        beta = grading * np.log1p((b - a) / h0)
        s = np.linspace(0.0, 1.0, int(n))
        if beta == 0.0:
            nodes = a + (b - a) * s
        else:
            nodes = a + (b - a) * np.expm1(beta * s) / np.expm1(beta)
        nodes[0], nodes[-1] = a, b
        return cls(nodes=nodes, grading=grading)

    @property
    def size(self) -> int:
        """Number of nodes."""
        return int(self.nodes.size)

    @property
    def inner(self) -> float:
        """First node."""
        return float(self.nodes[0])

    @property
    def outer(self) -> float:
        """Last node."""
        return float(self.nodes[-1])

    def refined(self) -> "RadialGrid":
        """Grid with every interval halved, nodes are kept."""
        mid = 0.5 * (self.nodes[1:] + self.nodes[:-1])
        nodes = np.empty(2 * self.size - 1)
        nodes[0::2] = self.nodes
        nodes[1::2] = mid
        return RadialGrid(nodes=nodes, grading=self.grading)

    def scaled(self, factor: float) -> "RadialGrid":
        """Grid with every node multiplied by factor."""
        return RadialGrid(nodes=self.nodes * factor, grading=self.grading)

    def count_below(self, radius: float) -> int:
        """Number of nodes with r < radius."""
        return int(np.sum(self.nodes < radius))

    def check_resolution(self, mu: float) -> None:
        """Require enough nodes inside the bubble core and near the hole."""
        inside_mu = self.count_below(mu)
        near_hole = (
            self.count_below(2.0 * self.inner) if self.inner > 0
            else MIN_NODES_PER_SCALE)
        if min(inside_mu, near_hole) < MIN_NODES_PER_SCALE:
            msg = (
                "Grid under-resolves the solution: {inside_mu} nodes below "
                "mu={mu} and {near_hole} nodes below 2 eps, {required} "
                "required")
            raise PumpwoodBiharmonicGridException(
                message=msg, payload={
                    "inside_mu": inside_mu, "near_hole": near_hole,
                    "mu": mu, "required": MIN_NODES_PER_SCALE})

    def compatible(self, domain: AnnulusDomain, rtol: float = 1e-12) -> bool:
        """Check that the grid spans exactly the domain."""
        return bool(
            np.isclose(self.inner, domain.inner, rtol=rtol, atol=0.0) and
            np.isclose(self.outer, domain.outer, rtol=rtol, atol=0.0))


@dataclass(frozen=True)
class RadialField:
    """Radial function sampled on a grid, with optional companions.

    `laplacian` holds Delta of the field when it is known from a split
    solve. `derivatives` stacks radial derivatives of orders 0..k.
    """

    grid: RadialGrid
    values: np.ndarray
    laplacian: Optional[np.ndarray] = field(default=None)
    derivatives: Optional[np.ndarray] = field(default=None)

    def __post_init__(self):
        """__post_init__."""
        values = np.asarray(self.values, dtype=float)
        if values.shape != self.grid.nodes.shape:
            msg = "Field has {size} values for a grid of {nodes} nodes"
            raise PumpwoodBiharmonicGridException(
                message=msg, payload={
                    "size": int(values.size), "nodes": self.grid.size})
        if not np.all(np.isfinite(values)):
            msg = "Field values must be finite"
            raise PumpwoodBiharmonicGridException(message=msg)
        object.__setattr__(self, "values", values)
        if self.laplacian is not None:
            object.__setattr__(
                self, "laplacian", np.asarray(self.laplacian, dtype=float))

    @classmethod
    def from_function(cls, grid: RadialGrid, fun,
                      laplacian_fun=None) -> "RadialField":
        """Sample a radial function, and its Laplacian when given."""
        lap = None if laplacian_fun is None else laplacian_fun(grid.nodes)
        return cls(grid=grid, values=fun(grid.nodes), laplacian=lap)

    @property
    def r(self) -> np.ndarray:
        """Grid nodes."""
        return self.grid.nodes

    def with_derivatives(self, order: int = 3) -> "RadialField":
        """Attach radial derivatives up to order by repeated differences."""
        stack = [self.values]
        for _ in range(order):
            stack.append(np.gradient(stack[-1], self.r, edge_order=2))
        return replace(self, derivatives=np.vstack(stack))

    def interpolate(self, grid: RadialGrid) -> "RadialField":
        """Linear interpolation onto another grid, zero outside."""
        values = np.interp(grid.nodes, self.r, self.values, left=0.0,
                           right=0.0)
        return RadialField(grid=grid, values=values)

    def integrate(self, dim: Dimension, integrand: np.ndarray) -> float:
        """Trapezoid rule of a radial integrand with |S^(N-1)| r^(N-1)."""
        weight = dim.sphere_measure * self.r ** (dim.N - 1)
        return float(trapezoid(weight * integrand, self.r))

    def __add__(self, other: "RadialField") -> "RadialField":
        """Nodewise sum, companions add when both are present."""
        if other.grid is not self.grid and not np.array_equal(
                other.r, self.r):
            msg = "Cannot add fields sampled on different grids"
            raise PumpwoodBiharmonicGridException(message=msg)
        lap = None
        if self.laplacian is not None and other.laplacian is not None:
            lap = self.laplacian + other.laplacian
        return RadialField(
            grid=self.grid, values=self.values + other.values, laplacian=lap)

    def scale(self, factor: float) -> "RadialField":
        """Field multiplied by a constant."""
        lap = None if self.laplacian is None else factor * self.laplacian
        return RadialField(
            grid=self.grid, values=factor * self.values, laplacian=lap)
