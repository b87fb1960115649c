"""Mass-lumped theta-Euler time stepping in the transformed variable."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .flux import UPWIND, SchemeKind, assemble, unit_transmissibilities
from .mesh import Mesh
from .model import BlackScholesModel

FULL_HISTORY_LIMIT = 10_000_000


class SolverError(RuntimeError):
    """A linear solve failed during time stepping."""

    def __init__(self, message: str, step: int | None = None, row: int | None = None):
        super().__init__(message)
        self.step = step
        self.row = row


class SingularPivotError(SolverError):
    pass


@dataclass(frozen=True, eq=False)
class TimeGrid:
    times: np.ndarray

    def __post_init__(self):
        t = np.array(self.times, dtype=float)
        if t.ndim != 1 or t.size < 1:
            raise ValueError("time grid needs at least one instant")
        if t[0] != 0.0:
            raise ValueError("time grid must start at 0")
        if np.any(np.diff(t) <= 0):
            raise ValueError("time grid must be strictly increasing")
        t.setflags(write=False)
        object.__setattr__(self, "times", t)

    @classmethod
    def uniform(cls, maturity: float, n_steps: int) -> "TimeGrid":
        if n_steps < 0:
            raise ValueError("n_steps must be nonnegative")
        t = np.linspace(0.0, maturity, int(n_steps) + 1)
        return cls(t)

    @property
    def steps(self) -> np.ndarray:
        return np.diff(self.times)

    @property
    def n_steps(self) -> int:
        return self.times.size - 1

    @property
    def dt(self) -> float:
        return float(self.steps.max()) if self.n_steps else 0.0


@dataclass(frozen=True)
class StepConfig:
    theta: float = 0.5
    scheme: SchemeKind = SchemeKind.FITTED_TPFA
    convection: str = UPWIND

    def __post_init__(self):
        object.__setattr__(self, "scheme", SchemeKind.parse(self.scheme))
        if not 0.0 <= self.theta <= 1.0:
            raise ValueError(f"theta must lie in [0, 1], got {self.theta!r}")
        if self.theta < 0.5:
            warnings.warn(f"theta={self.theta} < 1/2 is outside the unconditional stability range",
                          stacklevel=3)

    @property
    def outside_theory(self) -> bool:
        return self.theta < 0.5


@dataclass(frozen=True, eq=False)
class SolutionGrid:
    """Transformed states on the interior nodes.

    ``states`` has one row per stored time in ``times``; with final-only
    storage it holds the initial and final rows and ``times`` is ``(0, T)``.
    """

    mesh: Mesh
    times: np.ndarray
    states: np.ndarray

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def full_state(self, index: int = -1) -> np.ndarray:
        """State with the (zero) boundary entries attached."""
        return np.concatenate(([0.0], self.states[index], [0.0]))


def thomas_solve(sub, main, sup, rhs) -> np.ndarray:
    """Solve a tridiagonal system by forward elimination and back substitution."""
    main = np.ascontiguousarray(main, dtype=float)
    n = main.size
    sub = np.ascontiguousarray(sub, dtype=float)
    sup = np.ascontiguousarray(sup, dtype=float)
    rhs = np.ascontiguousarray(rhs, dtype=float)
    if sub.size != n - 1 or sup.size != n - 1 or rhs.size != n:
        raise ValueError("diagonals must have lengths n-1, n, n-1 and rhs length n")
    x, bad = _kernels.thomas(sub, main, sup, rhs)
    if bad >= 0:
        raise SingularPivotError(f"pivot magnitude below {_kernels.PIVOT_FLOOR:g} at row {bad}", row=int(bad))
    return x


def step_matrix(mesh: Mesh, model: BlackScholesModel, t_m: float, dt_m: float, config: StepConfig):
    """Left/right matrices of one step: ``(M/dt + theta A, A)`` at ``t_{m+theta}``."""
    t_theta = t_m + config.theta * dt_m
    op = assemble(mesh, model, t_theta, config.scheme, config.convection)
    mass = mesh.dual_lengths[1:-1] / dt_m
    lhs = (config.theta * op.sub, mass + config.theta * op.main, config.theta * op.sup)
    return lhs, op


def theta_step(u_m, mesh: Mesh, model: BlackScholesModel, t_m: float, dt_m: float,
               config: StepConfig = StepConfig()) -> np.ndarray:
    """Advance the interior state from ``t_m`` to ``t_m + dt_m``."""
    if not dt_m > 0:
        raise ValueError("time step must be positive")
    u_m = np.asarray(u_m, dtype=float)
    (sub, main, sup), op = step_matrix(mesh, model, t_m, dt_m, config)
    x = mesh.interior
    l = mesh.dual_lengths[1:-1]
    th = config.theta
    f = th * model.source(x, t_m + dt_m) + (1.0 - th) * model.source(x, t_m)
    rhs = l / dt_m * u_m - (1.0 - th) * op.apply(u_m) + l * f
    return thomas_solve(sub, main, sup, rhs)


def march(initial, mesh: Mesh, model: BlackScholesModel, grid: TimeGrid,
          config: StepConfig = StepConfig(), store_all: bool | None = None) -> SolutionGrid:
    """Apply ``theta_step`` over the whole time grid.

    ``initial`` is the homogenized interior state (``None`` uses the payoff).
    ``store_all=None`` keeps the full history while it stays under
    ``FULL_HISTORY_LIMIT`` entries.
    """
    x = mesh.interior
    u0 = model.initial_state(x) if initial is None else np.asarray(initial, dtype=float)
    if u0.shape != x.shape:
        raise ValueError(f"initial state must have {x.size} entries")
    times = grid.times
    if store_all is None:
        store_all = times.size * x.size <= FULL_HISTORY_LIMIT
    if grid.n_steps == 0:
        return SolutionGrid(mesh, times.copy(), u0[None, :].copy())

    dts = np.ascontiguousarray(grid.steps)
    t_theta = times[:-1] + config.theta * dts
    a, b, c = model.coefficients(t_theta)
    sig2 = np.ascontiguousarray(np.broadcast_to(2.0 * a, dts.shape), dtype=float)
    bs = np.ascontiguousarray(np.broadcast_to(b, dts.shape), dtype=float)
    cs = np.ascontiguousarray(np.broadcast_to(c, dts.shape), dtype=float)
    src_const, src_slope = model.source_coefficients(times)
    src_const = np.ascontiguousarray(np.broadcast_to(src_const, times.shape), dtype=float)
    src_slope = np.ascontiguousarray(np.broadcast_to(src_slope, times.shape), dtype=float)

    hist, failed = _kernels.march(
        np.ascontiguousarray(u0), np.ascontiguousarray(x),
        np.ascontiguousarray(mesh.dual_lengths[1:-1]), unit_transmissibilities(mesh),
        np.ascontiguousarray(mesh.midpoints), float(mesh.nodes[1]),
        sig2, bs, cs, dts, src_const, src_slope, float(config.theta),
        config.scheme is SchemeKind.FITTED_TPFA, config.convection == UPWIND, bool(store_all))
    if failed >= 0:
        raise SingularPivotError(f"singular pivot in step {failed}", step=int(failed))
    if store_all:
        return SolutionGrid(mesh, times.copy(), hist)
    return SolutionGrid(mesh, times[[0, -1]].copy(), np.vstack((u0, hist[0])))


def extract_prices(solution: SolutionGrid, model: BlackScholesModel) -> np.ndarray:
    """Option prices on all nodes (boundaries included), one row per stored time."""
    mesh = solution.mesh
    out = np.empty((solution.times.size, mesh.nodes.size))
    for m, t in enumerate(solution.times):
        out[m] = model.to_price(solution.full_state(m), mesh.nodes, t)
        # boundary columns are the boundary data exactly
        out[m, 0] = model.boundary.left(t)
        out[m, -1] = model.boundary.right(t)
    return out
