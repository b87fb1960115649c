"""Primal and dual partitions of the truncated price interval ``[0, x_max]``."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class MeshError(ValueError):
    """Raised for invalid mesh parameters or node lists."""


@dataclass(frozen=True, eq=False)
class Mesh:
    """Finite-volume grid with nodes ``x_0 = 0 < ... < x_{N+1} = x_max``.

    Attributes
    ----------
    nodes : ndarray, shape (N+2,)
        Primal nodes including both boundary nodes.
    midpoints : ndarray, shape (N+1,)
        Face positions ``x_{i+1/2}`` for ``i = 0..N``.
    primal_lengths : ndarray, shape (N+1,)
        ``h_i = x_{i+1} - x_i``.
    dual_lengths : ndarray, shape (N+2,)
        ``l_i`` of the dual cells ``K_i``; ``l_0`` and ``l_{N+1}`` are the
        half cells touching the boundary.
    """

    nodes: np.ndarray
    midpoints: np.ndarray
    primal_lengths: np.ndarray
    dual_lengths: np.ndarray

    @property
    def n_interior(self) -> int:
        return self.nodes.size - 2

    @property
    def x_max(self) -> float:
        return float(self.nodes[-1])

    @property
    def interior(self) -> np.ndarray:
        return self.nodes[1:-1]

    @property
    def faces(self) -> np.ndarray:
        """Dual cell boundaries ``x_{-1/2} = 0, x_{1/2}, ..., x_{N+3/2} = x_max``."""
        return np.concatenate(([self.nodes[0]], self.midpoints, [self.nodes[-1]]))

    @property
    def h(self) -> float:
        return float(self.primal_lengths.max())

    def __repr__(self) -> str:
        return f"Mesh(n_interior={self.n_interior}, x_max={self.x_max:g}, h_max={self.h:.4g})"


def from_nodes(nodes) -> Mesh:
    """Build a mesh from an explicit node list, validating every invariant."""
    x = np.array(nodes, dtype=float)
    if x.ndim != 1 or x.size < 4:
        raise MeshError("need at least two interior nodes")
    if not np.all(np.isfinite(x)):
        raise MeshError("nodes must be finite")
    if x[0] != 0.0:
        raise MeshError(f"first node must be 0, got {x[0]!r}")
    h = np.diff(x)
    if np.any(h <= 0):
        raise MeshError("nodes must be strictly increasing")
    mid = 0.5 * (x[:-1] + x[1:])
    if np.any(mid <= x[:-1]) or np.any(mid >= x[1:]):
        raise MeshError("node spacing falls below floating-point resolution")
    faces = np.concatenate(([x[0]], mid, [x[-1]]))
    l = np.diff(faces)
    for arr in (x, mid, h, l):
        arr.setflags(write=False)
    return Mesh(nodes=x, midpoints=mid, primal_lengths=h, dual_lengths=l)


def build_uniform(n_interior: int, x_max: float) -> Mesh:
    """Uniform grid with ``n_interior`` unknowns and spacing ``x_max / (N+1)``."""
    if int(n_interior) != n_interior or n_interior < 2:
        raise MeshError(f"n_interior must be an integer >= 2, got {n_interior!r}")
    if not x_max > 0:
        raise MeshError(f"x_max must be positive, got {x_max!r}")
    n = int(n_interior)
    nodes = np.arange(n + 2, dtype=float) * (x_max / (n + 1))
    nodes[-1] = x_max
    return from_nodes(nodes)


def build_geometric(n_interior: int, x_max: float, ratio: float) -> Mesh:
    """Graded grid with ``h_{i+1} = ratio * h_i`` spanning ``[0, x_max]``.

    ``ratio > 1`` clusters nodes near the degenerate end ``x = 0``.
    """
    if not ratio > 0:
        raise MeshError(f"ratio must be positive, got {ratio!r}")
    if int(n_interior) != n_interior or n_interior < 2:
        raise MeshError(f"n_interior must be an integer >= 2, got {n_interior!r}")
    if not x_max > 0:
        raise MeshError(f"x_max must be positive, got {x_max!r}")
    n = int(n_interior)
    widths = ratio ** np.arange(n + 1, dtype=float)
    widths *= x_max / widths.sum()
    nodes = np.concatenate(([0.0], np.cumsum(widths)))
    nodes[-1] = x_max
    return from_nodes(nodes)


def quasi_uniformity_constant(mesh: Mesh) -> float:
    """Smallest ``c`` with ``l_{i+1}/c <= l_i <= c l_{i+1}`` over all dual cells."""
    l = mesh.dual_lengths
    q = l[1:] / l[:-1]
    return float(np.max(np.maximum(q, 1.0 / q)))
