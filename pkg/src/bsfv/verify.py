"""Property checks shared by the ``self-test`` CLI command.

Each check returns a :class:`Check`; none of them raise on failure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .flux import (SchemeKind, assemble, bilinear_value, discrete_flux_fitted, discrete_flux_tpfa,
                   face_transmissibilities)
from .mesh import Mesh, build_geometric, build_uniform
from .model import BlackScholesModel, MarketData, european_call
from .stepper import StepConfig, theta_step, thomas_solve
from .analytics import observed_order


@dataclass
class Check:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail}"


def _model(r: float, sigma: float = 0.5) -> BlackScholesModel:
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return european_call(MarketData.constant(r, sigma, 100.0, 1.0, 300.0))


def coercivity_margin(mesh: Mesh, model: BlackScholesModel, scheme, u, t: float = 0.5) -> float:
    """``a_h(u,u) - (|u|_{0,w}^2 + c |u|_{0,h}^2)`` scaled by ``|a_h(u,u)|``."""
    op = assemble(mesh, model, t, scheme)
    tau = face_transmissibilities(mesh, model.market, t)
    _, _, c = model.coefficients(t)
    l = mesh.dual_lengths[1:-1]
    jumps = np.diff(np.append(u, 0.0))
    lower = float(np.sum(tau[1:] * jumps**2) + c * np.sum(l * u * u))
    form = bilinear_value(op, u, u)
    return (form - lower) / max(abs(form), 1e-300)


def check_coercivity(n_vectors: int = 1000, n_interior: int = 40, seed: int = 0) -> Check:
    rng = np.random.default_rng(seed)
    meshes = {"uniform": build_uniform(n_interior, 300.0),
              "geometric": build_geometric(n_interior, 300.0, 1.2)}
    worst = math.inf
    for mname, mesh in meshes.items():
        for r in (0.1, 0.0):
            model = _model(r)
            for scheme in SchemeKind:
                for _ in range(n_vectors):
                    u = rng.standard_normal(mesh.n_interior)
                    worst = min(worst, coercivity_margin(mesh, model, scheme, u))
    return Check("coercivity", worst >= -1e-10, f"worst relative margin {worst:.3e}")


def smooth_profile(x, x_max):
    return x * x * (x_max - x) ** 2


def smooth_profile_slope(x, x_max):
    return 2.0 * x * (x_max - x) * (x_max - 2.0 * x)


def flux_consistency_errors(model: BlackScholesModel, scheme, sizes=(50, 100, 200, 400), t: float = 0.5):
    """Max face error between the exact flux of a smooth profile and the discrete flux."""
    xm = model.x_max
    a, b, _ = model.coefficients(t)
    flux_fn = discrete_flux_fitted if SchemeKind.parse(scheme) is SchemeKind.FITTED_TPFA else discrete_flux_tpfa
    errs, hs = [], []
    for n in sizes:
        mesh = build_uniform(n, xm)
        tau = face_transmissibilities(mesh, model.market, t)
        w = smooth_profile(mesh.nodes, xm)
        xf = mesh.midpoints
        exact = -a * xf**2 * smooth_profile_slope(xf, xm) - b * xf * smooth_profile(xf, xm)
        approx = np.array([flux_fn(mesh, model, t, w, i, tau=tau) for i in range(n + 1)])
        errs.append(float(np.max(np.abs(exact - approx))))
        hs.append(mesh.h)
    return np.array(errs), np.array(hs)


def check_flux_consistency() -> Check:
    model = _model(0.1)
    worst = math.inf
    for scheme in SchemeKind:
        errs, hs = flux_consistency_errors(model, scheme)
        worst = min(worst, float(observed_order(errs, hs).min()))
    return Check("flux consistency", worst >= 0.9, f"min observed order {worst:.3f}")


def check_thomas(n_systems: int = 100, size: int = 50, seed: int = 1) -> Check:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_systems):
        sub = rng.uniform(-1, 1, size - 1)
        sup = rng.uniform(-1, 1, size - 1)
        main = np.abs(np.append(sub, 0)) + np.abs(np.append(0, sup)) + rng.uniform(0.5, 2.0, size)
        main *= rng.choice([-1.0, 1.0], size)
        rhs = rng.standard_normal(size)
        dense = np.diag(main) + np.diag(sub, -1) + np.diag(sup, 1)
        ref = np.linalg.solve(dense, rhs)
        got = thomas_solve(sub, main, sup, rhs)
        worst = max(worst, float(np.max(np.abs(got - ref)) / np.max(np.abs(ref))))
    return Check("thomas vs dense", worst <= 1e-12, f"worst relative deviation {worst:.2e}")


def check_energy_decay(n_states: int = 100, seed: int = 2) -> Check:
    rng = np.random.default_rng(seed)
    market = MarketData.constant(0.1, 0.5, 100.0, 1.0, 300.0)
    from .model import BoundaryData, BlackScholesModel as Model

    zero = lambda t: np.zeros_like(np.asarray(t, dtype=float))
    homogeneous = Model(market, BoundaryData(zero, zero, zero, 300.0, kind="zero"))
    mesh = build_uniform(30, 300.0)
    l = mesh.dual_lengths[1:-1]
    ok = True
    for theta in (0.5, 0.75, 1.0):
        for scheme in SchemeKind:
            cfg = StepConfig(theta, scheme)
            for _ in range(n_states // 2 or 1):
                u = rng.standard_normal(mesh.n_interior)
                nxt = theta_step(u, mesh, homogeneous, 0.0, 0.5, cfg)
                if np.sum(l * nxt**2) > np.sum(l * u**2) * (1 + 1e-12):
                    ok = False
    return Check("energy decay", ok, "theta in {0.5, 0.75, 1}, both schemes")


def check_structure() -> Check:
    model = _model(0.1)
    worst = 0.0
    for mesh in (build_uniform(25, 300.0), build_geometric(25, 300.0, 1.2)):
        a = assemble(mesh, model, 0.5, SchemeKind.TPFA).to_dense()
        b = assemble(mesh, model, 0.5, SchemeKind.FITTED_TPFA).to_dense()
        diff = np.abs(a - b)[1:] / np.maximum(np.abs(a[1:]), 1e-300)
        worst = max(worst, float(diff.max()))
    return Check("schemes differ only in row 1", worst <= 1e-15, f"max relative deviation {worst:.1e}")


def run_all() -> list[Check]:
    return [check_coercivity(200), check_flux_consistency(), check_thomas(), check_energy_decay(),
            check_structure()]
