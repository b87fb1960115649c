"""Experiment runner: configuration, single solves and convergence sweeps.

Every run writes CSV with ``,`` delimiters, LF line endings and floats
printed to 17 significant digits, so identical configurations give
byte-identical files.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import analytics
from .analytics import NormKind, bs_call_price, error_vs_exact, observed_order
from .mesh import Mesh, build_geometric, build_uniform
from .model import BlackScholesModel, MarketData, european_call
from .stepper import StepConfig, TimeGrid, extract_prices, march

log = logging.getLogger(__name__)

THREADS_ENV = "BSFV_THREADS"
SCHEMES = ("tpfa", "fitted")
MESH_FAMILIES = ("uniform", "geometric")
NORM_COLUMNS = (("err_l2", NormKind.DISCRETE_L2), ("err_rel", NormKind.RELATIVE_L2),
                ("err_max", NormKind.MAX_ABS))


class ConfigError(ValueError):
    """Invalid run configuration; ``fields`` names the offending entries."""

    def __init__(self, problems: dict[str, str]):
        self.fields = tuple(problems)
        super().__init__("; ".join(f"{k}: {v}" for k, v in problems.items()))


def fmt(value) -> str:
    """CSV cell text: ints verbatim, floats to 17 significant digits."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(buf.getvalue())
    return path


# --------------------------------------------------------------------------
# configuration


@dataclass
class RunConfig:
    """One solve; the defaults are the European call benchmark setup."""

    scheme: str = "fitted"
    n_interior: int = 100
    m_steps: int = 100
    theta: float = 0.5
    r: float = 0.1
    sigma: float = 0.5
    strike: float = 100.0
    maturity: float = 1.0
    x_max: float = 300.0
    mesh: str = "uniform"
    ratio: float = 1.2
    norms: tuple[str, ...] = ("l2", "rel", "max")
    out: str = "."
    boundary: str = "exact"
    error_variable: str = "transformed"

    def validate(self) -> "RunConfig":
        bad = {}
        if self.scheme not in SCHEMES:
            bad["scheme"] = f"expected one of {SCHEMES}, got {self.scheme!r}"
        if not (isinstance(self.n_interior, (int, np.integer)) and self.n_interior >= 2):
            bad["n_interior"] = f"must be an integer >= 2, got {self.n_interior!r}"
        if not (isinstance(self.m_steps, (int, np.integer)) and self.m_steps >= 1):
            bad["m_steps"] = f"must be a positive integer, got {self.m_steps!r}"
        if not (0.0 <= self.theta <= 1.0):
            bad["theta"] = f"must lie in [0, 1], got {self.theta!r}"
        for name in ("sigma", "strike", "maturity", "x_max"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                bad[name] = f"must be positive, got {v!r}"
        if not math.isfinite(self.r):
            bad["r"] = f"must be finite, got {self.r!r}"
        if self.mesh not in MESH_FAMILIES:
            bad["mesh"] = f"expected one of {MESH_FAMILIES}, got {self.mesh!r}"
        if self.mesh == "geometric" and not (math.isfinite(self.ratio) and self.ratio > 0):
            bad["ratio"] = f"must be positive, got {self.ratio!r}"
        known = {k.value for k in NormKind}
        unknown = [n for n in self.norms if n not in known]
        if unknown or not self.norms:
            bad["norms"] = f"expected a non-empty subset of {sorted(known)}, got {list(self.norms)}"
        if self.boundary not in ("exact", "intrinsic"):
            bad["boundary"] = f"expected 'exact' or 'intrinsic', got {self.boundary!r}"
        if self.error_variable not in ("transformed", "price"):
            bad["error_variable"] = f"expected 'transformed' or 'price', got {self.error_variable!r}"
        if bad:
            raise ConfigError(bad)
        return self

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)

    def market(self) -> MarketData:
        return MarketData.constant(self.r, self.sigma, self.strike, self.maturity, self.x_max)

    def build_mesh(self) -> Mesh:
        if self.mesh == "geometric":
            return build_geometric(self.n_interior, self.x_max, self.ratio)
        return build_uniform(self.n_interior, self.x_max)

    def build_model(self) -> BlackScholesModel:
        return european_call(self.market(), boundary=self.boundary)

    def norm_kinds(self) -> list[NormKind]:
        return [NormKind(n) for n in self.norms]

    # -- flat key=value text ------------------------------------------------

    def to_text(self) -> str:
        lines = []
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            text = ",".join(v) if isinstance(v, tuple) else fmt(v)
            lines.append(f"{f.name}={text}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, base: "RunConfig | None" = None) -> "RunConfig":
        """Parse ``key=value`` lines; blank lines and ``#`` comments are skipped."""
        base = base or cls()
        types = {f.name: f.type for f in dataclasses.fields(cls)}
        values = {}
        bad = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, val = line.partition("=")
            key, val = key.strip(), val.strip()
            if not sep:
                bad[f"line {lineno}"] = f"expected key=value, got {raw!r}"
            elif key not in types:
                bad[key] = "unknown key"
            else:
                try:
                    values[key] = _coerce(getattr(base, key), val)
                except ValueError as exc:
                    bad[key] = str(exc)
        if bad:
            raise ConfigError(bad)
        return base.replace(**values)

    @classmethod
    def load(cls, path, base: "RunConfig | None" = None) -> "RunConfig":
        return cls.from_text(Path(path).read_text(encoding="utf-8"), base)


def _coerce(template, text: str):
    if isinstance(template, tuple):
        return tuple(p.strip() for p in text.split(",") if p.strip())
    if isinstance(template, bool):
        return text.lower() in ("1", "true", "yes", "on")
    if isinstance(template, int):
        try:
            return int(text)
        except ValueError:
            raise ValueError(f"expected an integer, got {text!r}") from None
    if isinstance(template, float):
        try:
            return float(text)
        except ValueError:
            raise ValueError(f"expected a number, got {text!r}") from None
    return text


@dataclass(frozen=True)
class StudySpec:
    """Refinement sweep over ``n`` (space) or ``m`` (time).

    ``fixed`` is the held step: ``dt`` for a space sweep, ``h`` for a time
    sweep.  ``None`` keeps the count already in the base config.
    """

    sweep: str
    values: tuple[int, ...]
    fixed: float | None = None
    schemes: tuple[str, ...] = SCHEMES

    def __post_init__(self):
        if self.sweep not in ("space", "time"):
            raise ConfigError({"sweep": f"expected 'space' or 'time', got {self.sweep!r}"})
        vals = tuple(int(v) for v in self.values)
        if len(vals) < 2:
            raise ConfigError({"values": "a sweep needs at least 2 entries to estimate an order"})
        if any(v < 1 for v in vals) or any(b <= a for a, b in zip(vals, vals[1:])):
            raise ConfigError({"values": f"must be positive and strictly increasing, got {list(vals)}"})
        bad = [s for s in self.schemes if s not in SCHEMES]
        if bad or not self.schemes:
            raise ConfigError({"schemes": f"expected a non-empty subset of {SCHEMES}, got {list(self.schemes)}"})
        if self.fixed is not None and not self.fixed > 0:
            raise ConfigError({"fixed": f"must be positive, got {self.fixed!r}"})
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "schemes", tuple(self.schemes))


def interior_count_for_step(x_max: float, h: float) -> int:
    """``round(x_max / h) - 1`` interior nodes for a uniform step ``h``."""
    return int(round(x_max / h)) - 1


def steps_for_dt(maturity: float, dt: float) -> int:
    return max(1, int(round(maturity / dt)))


def thread_count(n_tasks: int) -> int:
    """Worker count capped by ``BSFV_THREADS`` (default: CPU count)."""
    raw = os.environ.get(THREADS_ENV, "").strip()
    cap = os.cpu_count() or 1
    if raw:
        try:
            cap = int(raw)
        except ValueError:
            raise ConfigError({THREADS_ENV: f"expected a positive integer, got {raw!r}"}) from None
        if cap < 1:
            raise ConfigError({THREADS_ENV: f"expected a positive integer, got {raw!r}"})
    return max(1, min(cap, n_tasks))


# --------------------------------------------------------------------------
# runs


@dataclass
class RunResult:
    config: RunConfig
    mesh: Mesh
    nodes: np.ndarray
    numeric: np.ndarray
    exact: np.ndarray
    errors: dict[NormKind, float]
    runtime: float
    path: Path | None = None

    def summary(self) -> str:
        c = self.config
        parts = [f"scheme={c.scheme}", f"n={c.n_interior}", f"m={c.m_steps}"]
        parts += [f"{k.value}={v:.6e}" for k, v in self.errors.items()]
        parts.append(f"runtime={self.runtime:.3f}s")
        return " ".join(parts)


def solve(config: RunConfig, self_test: bool = False) -> RunResult:
    """Run one solve and compare the final slice with the closed form.

    ``self_test`` substitutes the closed-form values for the numerical
    slice, which must produce zero errors everywhere.
    """
    config.validate()
    model = config.build_model()
    mesh = config.build_mesh()
    grid = TimeGrid.uniform(config.maturity, config.m_steps)
    t0 = time.perf_counter()
    sol = march(None, mesh, model, grid, StepConfig(config.theta, config.scheme), store_all=False)
    runtime = time.perf_counter() - t0

    T = config.maturity
    exact = np.asarray(bs_call_price(mesh.nodes, model.market, T), dtype=float)
    if self_test:
        interior_exact = model.to_transformed(exact[1:-1], mesh.interior, T)
        sol = type(sol)(mesh, sol.times, np.vstack((sol.states[0], interior_exact)))
    numeric = extract_prices(sol, model)[-1]
    if self_test:
        numeric = exact.copy()
    errors = {k: error_vs_exact(sol, model, k, config.error_variable) for k in config.norm_kinds()}
    return RunResult(config, mesh, mesh.nodes.copy(), numeric, exact, errors, runtime)


def run_single(config: RunConfig, self_test: bool = False, filename: str = "solution.csv") -> RunResult:
    """Solve once and write ``solution.csv`` (one row per node, boundaries included)."""
    res = solve(config, self_test)
    rows = zip(res.nodes, res.numeric, res.exact, np.abs(res.numeric - res.exact))
    res.path = write_csv(Path(config.out) / filename, ("x", "V_numeric", "V_exact", "abs_error"), rows)
    log.info("%s", res.summary())
    return res


@dataclass
class StudyResult:
    spec: StudySpec
    header: tuple[str, ...]
    rows: list[tuple]
    reports: dict[str, analytics.ErrorReport] = field(default_factory=dict)
    path: Path | None = None

    def errors(self, scheme: str, kind: NormKind = NormKind.RELATIVE_L2) -> np.ndarray:
        return np.array(self.reports[scheme].errors[kind])

    def plateau_spread(self, scheme: str, kind: NormKind = NormKind.RELATIVE_L2) -> float:
        """``(max - min) / max`` of the errors across the sweep."""
        e = self.errors(scheme, kind)
        return float((e.max() - e.min()) / e.max())


def _study_configs(spec: StudySpec, base: RunConfig) -> list[RunConfig]:
    configs = []
    for scheme in spec.schemes:
        for v in spec.values:
            if spec.sweep == "space":
                m = base.m_steps if spec.fixed is None else steps_for_dt(base.maturity, spec.fixed)
                cfg = base.replace(scheme=scheme, n_interior=v, m_steps=m)
            else:
                n = base.n_interior if spec.fixed is None else interior_count_for_step(base.x_max, spec.fixed)
                cfg = base.replace(scheme=scheme, n_interior=n, m_steps=v)
            configs.append(cfg.validate())
    return configs


def run_study(spec: StudySpec, base: RunConfig | None = None, write: bool = True) -> StudyResult:
    """Solve every sweep point (concurrently) and tabulate errors and orders.

    The order column uses the discrete L2 error against the swept step.
    """
    base = (base or RunConfig()).replace(norms=tuple(k.value for _, k in NORM_COLUMNS))
    base.validate()
    configs = _study_configs(spec, base)
    with ThreadPoolExecutor(max_workers=thread_count(len(configs))) as pool:
        results = list(pool.map(solve, configs))

    space = spec.sweep == "space"
    header = ("scheme", "n", "h", *(c for c, _ in NORM_COLUMNS), "order_vs_prev") if space else \
        ("scheme", "m", "dt", *(c for c, _ in NORM_COLUMNS), "order_vs_prev")
    rows = []
    reports = {}
    for scheme in spec.schemes:
        mine = [r for r in results if r.config.scheme == scheme]
        report = analytics.ErrorReport("space" if space else "time")
        for r in mine:
            step = r.mesh.h if space else r.config.maturity / r.config.m_steps
            count = r.config.n_interior if space else r.config.m_steps
            report.add(count, step, {k: r.errors[k] for _, k in NORM_COLUMNS})
        try:
            orders = [None, *report.orders(NormKind.DISCRETE_L2)]
        except analytics.SaturationError:
            orders = [None] * len(mine)
        for i, r in enumerate(mine):
            rows.append((scheme, report.counts[i], report.steps[i],
                         *(r.errors[k] for _, k in NORM_COLUMNS), orders[i]))
        reports[scheme] = report
    out = StudyResult(spec, header, rows, reports)
    if write:
        name = "space_errors.csv" if space else "time_errors.csv"
        out.path = write_csv(Path(base.out) / name, header, rows)
    return out


def run_space_study(spec: StudySpec, base: RunConfig | None = None, write: bool = True) -> StudyResult:
    if spec.sweep != "space":
        raise ConfigError({"sweep": "run_space_study needs a space sweep"})
    return run_study(spec, base, write)


def run_time_study(spec: StudySpec, base: RunConfig | None = None, write: bool = True) -> StudyResult:
    if spec.sweep != "time":
        raise ConfigError({"sweep": "run_time_study needs a time sweep"})
    return run_study(spec, base, write)


def run_price(spot, config: RunConfig | None = None):
    """Closed-form call price at time to maturity ``config.maturity``."""
    config = (config or RunConfig()).validate()
    return bs_call_price(spot, config.market(), config.maturity)


def joint_refinement(base: RunConfig, levels=((99, 25), (199, 50), (399, 100)),
                     kind: NormKind = NormKind.DISCRETE_L2):
    """Errors and orders when ``h`` and ``dt`` are refined together."""
    configs = [base.replace(n_interior=n, m_steps=m, norms=(kind.value,)).validate() for n, m in levels]
    with ThreadPoolExecutor(max_workers=thread_count(len(configs))) as pool:
        results = list(pool.map(solve, configs))
    errs = np.array([r.errors[kind] for r in results])
    steps = np.array([r.mesh.h for r in results])
    return errs, observed_order(errs, steps)
