"""Two-point flux assembly for the TPFA and fitted TPFA schemes.

The discrete flux through the face ``x_{i+1/2}`` is

    F_i = -tau_{i+1/2} (u_{i+1} - u_i) - x_{i+1/2} (b^+ u_{i+1} + b^- u_i)

with harmonic-mean transmissibility ``tau`` and the convective part taken
from the upstream node of the drift ``-b x``.  The fitted scheme replaces
the flux through the degenerate face ``x_{1/2}`` by

    G_0 = -x_1 / 4 * ((a + b) u_1 - (a - b) u_0)

and keeps ``F_i`` everywhere else.  Row ``i`` of the operator is
``F_i - F_{i-1} + c l_i u_i``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .mesh import Mesh
from .model import BlackScholesModel, MarketData

UPWIND = "upwind"
DOWNWIND = "downwind"


class SchemeKind(enum.Enum):
    TPFA = "tpfa"
    FITTED_TPFA = "fitted"

    @classmethod
    def parse(cls, value) -> "SchemeKind":
        if isinstance(value, cls):
            return value
        return cls(str(value).lower())


class DegenerateInterfaceError(ArithmeticError):
    """Both cells adjacent to a face carry zero transmissibility."""


@dataclass(frozen=True, eq=False)
class TridiagonalOperator:
    """Spatial operator restricted to the interior unknowns.

    ``sub[i-1]``, ``main[i]`` and ``sup[i]`` are the coefficients of
    ``u_{i-1}``, ``u_i`` and ``u_{i+1}`` in row ``i`` (0-based over interior
    nodes).  ``boundary_coupling`` holds the coefficients of ``u_0`` in the
    first row and ``u_{N+1}`` in the last; they multiply zeros after
    homogenization.
    """

    sub: np.ndarray
    main: np.ndarray
    sup: np.ndarray
    boundary_coupling: tuple[float, float]
    scheme: SchemeKind

    @property
    def size(self) -> int:
        return self.main.size

    def apply(self, u) -> np.ndarray:
        return _kernels.tridiag_matvec(self.sub, self.main, self.sup, np.asarray(u, dtype=float))

    def to_dense(self) -> np.ndarray:
        return np.diag(self.main) + np.diag(self.sub, -1) + np.diag(self.sup, 1)


def _unit_cell_diffusion(mesh: Mesh) -> np.ndarray:
    faces = mesh.faces
    lo, hi = faces[:-1], faces[1:]
    # (hi^3 - lo^3) / (hi - lo) without cancellation
    return (hi * hi + hi * lo + lo * lo) / 6.0


def cell_diffusion(mesh: Mesh, market: MarketData, t: float, i: int | None = None):
    """Dual-cell average of ``sigma(t)^2 x^2 / 2``; all cells when ``i`` is None."""
    k = float(market.volatility(t)) ** 2 * _unit_cell_diffusion(mesh)
    return k if i is None else float(k[i])


def transmissibility(mesh: Mesh, k, i: int | None = None):
    """Harmonic mean ``2 T_i T_{i+1} / (T_i + T_{i+1})`` with ``T_i = k_i / l_i``."""
    T = np.asarray(k, dtype=float) / mesh.dual_lengths
    left, right = T[:-1], T[1:]
    denom = left + right
    if np.any(denom == 0):
        bad = int(np.flatnonzero(denom == 0)[0])
        raise DegenerateInterfaceError(f"face {bad} has zero transmissibility on both sides")
    tau = 2.0 * left * right / denom
    return tau if i is None else float(tau[i])


def face_transmissibilities(mesh: Mesh, market: MarketData, t: float) -> np.ndarray:
    return transmissibility(mesh, cell_diffusion(mesh, market, t))


def unit_transmissibilities(mesh: Mesh) -> np.ndarray:
    """Face transmissibilities for ``sigma = 1``; they scale with ``sigma^2``."""
    return transmissibility(mesh, _unit_cell_diffusion(mesh))


def _coeffs(model: BlackScholesModel, t):
    a, b, c = model.coefficients(t)
    return float(a), float(b), float(c)


def discrete_flux_tpfa(mesh: Mesh, model: BlackScholesModel, t: float, u, i: int,
                       convection: str = UPWIND, tau=None) -> float:
    """Two-point flux through face ``x_{i+1/2}``; ``u`` includes boundary values.

    ``convection="downwind"`` pairs ``b^+`` with ``u_i`` and ``b^-`` with
    ``u_{i+1}``, which takes the value downstream of the drift.
    """
    if tau is None:
        tau = face_transmissibilities(mesh, model.market, t)
    _, b, _ = _coeffs(model, t)
    bp, bm = max(b, 0.0), min(b, 0.0)
    xf = mesh.midpoints[i]
    if convection == UPWIND:
        conv = bp * u[i + 1] + bm * u[i]
    elif convection == DOWNWIND:
        conv = bp * u[i] + bm * u[i + 1]
    else:
        raise ValueError(f"unknown convection treatment {convection!r}")
    return float(-tau[i] * (u[i + 1] - u[i]) - xf * conv)


def discrete_flux_fitted(mesh: Mesh, model: BlackScholesModel, t: float, u, i: int,
                         convection: str = UPWIND, tau=None) -> float:
    """Fitted flux at ``x_{1/2}``; identical to the TPFA flux on every other face."""
    if i != 0:
        return discrete_flux_tpfa(mesh, model, t, u, i, convection, tau)
    a, b, _ = _coeffs(model, t)
    x1 = mesh.nodes[1]
    return float(-0.25 * x1 * ((a + b) * u[1] - (a - b) * u[0]))


def assemble(mesh: Mesh, model: BlackScholesModel, t: float, scheme=SchemeKind.FITTED_TPFA,
             convection: str = UPWIND) -> TridiagonalOperator:
    """Tridiagonal operator of the bilinear form with coefficients frozen at ``t``."""
    scheme = SchemeKind.parse(scheme)
    if convection not in (UPWIND, DOWNWIND):
        raise ValueError(f"unknown convection treatment {convection!r}")
    a, b, c = _coeffs(model, t)
    tau = face_transmissibilities(mesh, model.market, t)
    sub, main, sup, left, right = _kernels.assemble_rows(
        tau, np.ascontiguousarray(mesh.midpoints), np.ascontiguousarray(mesh.dual_lengths[1:-1]),
        float(mesh.nodes[1]), a, b, c, scheme is SchemeKind.FITTED_TPFA, convection == UPWIND)
    return TridiagonalOperator(sub, main, sup, (float(left), float(right)), scheme)


def bilinear_value(operator: TridiagonalOperator, u, v) -> float:
    """``v^T A u`` for interior vectors ``u``, ``v`` (zero boundary values)."""
    return float(np.dot(np.asarray(v, dtype=float), operator.apply(u)))
