"""Closed-form call price, discrete norms, errors and observed orders."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

SQRT2 = math.sqrt(2.0)


class NormKind(enum.Enum):
    DISCRETE_L2 = "l2"
    WEIGHTED_SEMI = "semi"
    COMBINED = "combined"
    MAX_ABS = "max"
    RELATIVE_L2 = "rel"


class SaturationError(ValueError):
    """Raised when an error sequence contains non-positive entries."""


def std_normal_cdf(z):
    """Standard normal distribution function via the complementary error function."""
    return (0.5 * special.erfc(-np.asarray(z, dtype=float) / SQRT2))[()]


def std_normal_pdf(z):
    z = np.asarray(z, dtype=float)
    return (np.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi))[()]


def _d1_d2(x, K, r, sigma, t):
    vol = sigma * np.sqrt(t)
    with np.errstate(divide="ignore"):
        d1 = (np.log(x / K) + (r + 0.5 * sigma * sigma) * t) / vol
    return d1, d1 - vol


def _broadcast(x, t):
    x, t = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(t, dtype=float))
    return x.ravel(), t.ravel()


def call_value(x, K: float, r: float, sigma: float, t):
    """European call value for spot ``x`` and time to maturity ``t``.

    ``t == 0`` returns the payoff and ``x == 0`` returns 0.
    """
    shape = np.broadcast_shapes(np.shape(x), np.shape(t))
    x, t = _broadcast(x, t)
    out = np.maximum(x - K, 0.0)
    live = (t > 0) & (x > 0)
    if np.any(live):
        xs, ts = x[live], t[live]
        d1, d2 = _d1_d2(xs, K, r, sigma, ts)
        out[live] = xs * std_normal_cdf(d1) - K * np.exp(-r * ts) * std_normal_cdf(d2)
    out[x <= 0] = 0.0
    return out.reshape(shape)[()]


def call_time_derivative(x, K: float, r: float, sigma: float, t):
    """``dC/dt`` with ``t`` the time to maturity (minus the usual theta)."""
    shape = np.broadcast_shapes(np.shape(x), np.shape(t))
    x, t = _broadcast(x, t)
    # limit t -> 0+: r K for x > K, 0 for x < K
    out = np.where(x > K, r * K, 0.0)
    live = (t > 0) & (x > 0)
    if np.any(live):
        xs, ts = x[live], t[live]
        d1, d2 = _d1_d2(xs, K, r, sigma, ts)
        out[live] = (xs * sigma * std_normal_pdf(d1) / (2.0 * np.sqrt(ts))
                     + r * K * np.exp(-r * ts) * std_normal_cdf(d2))
    return out.reshape(shape)[()]


def bs_call_price(spot, market, t):
    """Closed-form call price under ``market`` (constant rate and volatility only)."""
    if not market.is_constant:
        raise ValueError("closed-form price requires constant rate and volatility")
    if np.any(np.asarray(t) <= 0):
        raise ValueError("time to maturity must be positive; use the payoff at t = 0")
    if np.any(np.asarray(spot) < 0):
        raise ValueError("spot must be nonnegative")
    r = float(market.rate(0.0))
    sigma = float(market.volatility(0.0))
    return call_value(spot, market.strike, r, sigma, t)


# --------------------------------------------------------------------------
# discrete norms


def _semi_sq(values, tau):
    if tau is None:
        raise ValueError("weighted semi-norm needs face transmissibilities")
    tau = np.asarray(tau, dtype=float)
    n = values.size
    if tau.size != n + 1:
        raise ValueError(f"expected {n + 1} face transmissibilities, got {tau.size}")
    jumps = np.diff(np.append(values, 0.0))
    # faces x_{3/2} .. x_{N+1/2}; the degenerate face x_{1/2} is not part of the norm
    return float(np.sum(tau[1:] * jumps * jumps))


def discrete_norm(values, mesh, kind: NormKind, tau=None, reference=None) -> float:
    """Norm of an interior vector (boundary entries are zero).

    Parameters
    ----------
    values : array_like, shape (N,)
    mesh : Mesh
    kind : NormKind
    tau : array_like, shape (N+1,), optional
        Transmissibilities of all faces; required for ``WEIGHTED_SEMI`` and
        ``COMBINED``.
    reference : array_like, shape (N,), optional
        Denominator vector for ``RELATIVE_L2``.
    """
    v = np.asarray(values, dtype=float)
    l = mesh.dual_lengths[1:-1]
    if v.shape != l.shape:
        raise ValueError(f"expected {l.size} interior values, got shape {v.shape}")
    if kind is NormKind.DISCRETE_L2:
        return math.sqrt(float(np.sum(l * v * v)))
    if kind is NormKind.WEIGHTED_SEMI:
        return math.sqrt(_semi_sq(v, tau))
    if kind is NormKind.COMBINED:
        return math.sqrt(float(np.sum(l * v * v)) + _semi_sq(v, tau))
    if kind is NormKind.MAX_ABS:
        return float(np.max(np.abs(v)))
    if kind is NormKind.RELATIVE_L2:
        if reference is None:
            raise ValueError("relative norm needs a reference vector")
        ref = math.sqrt(float(np.sum(l * np.asarray(reference, dtype=float) ** 2)))
        return math.sqrt(float(np.sum(l * v * v))) / ref
    raise ValueError(f"unknown norm kind {kind!r}")


def exact_slice(solution, model, variable: str = "transformed"):
    """Closed-form values at the interior nodes at the final time of ``solution``."""
    x = solution.mesh.interior
    t = solution.times[-1]
    prices = bs_call_price(x, model.market, t)
    if variable == "price":
        return prices
    if variable == "transformed":
        return model.to_transformed(prices, x, t)
    raise ValueError(f"unknown error variable {variable!r}")


def numeric_slice(solution, model, variable: str = "transformed"):
    u = solution.final
    if variable == "price":
        return model.to_price(u, solution.mesh.interior, solution.times[-1])
    if variable == "transformed":
        return u
    raise ValueError(f"unknown error variable {variable!r}")


def error_vs_exact(solution, model, kind: NormKind = NormKind.DISCRETE_L2,
                   variable: str = "transformed", exact=None) -> float:
    """Error of the final slice against the closed-form price.

    ``variable="transformed"`` measures ``u = exp(-beta T)(V - V0)`` (the quantity
    covered by the O(h + dt) error bound); ``variable="price"`` measures ``V``.
    ``exact`` overrides the oracle slice (used for self-comparison).
    """
    ref = exact_slice(solution, model, variable) if exact is None else np.asarray(exact)
    diff = numeric_slice(solution, model, variable) - ref
    tau = None
    if kind in (NormKind.WEIGHTED_SEMI, NormKind.COMBINED):
        from .flux import face_transmissibilities

        tau = face_transmissibilities(solution.mesh, model.market, solution.times[-1])
    return discrete_norm(diff, solution.mesh, kind, tau=tau, reference=ref)


def observed_order(errors, steps) -> np.ndarray:
    """``p_k = ln(e_k / e_{k+1}) / ln(s_k / s_{k+1})`` for consecutive pairs."""
    e = np.asarray(errors, dtype=float)
    s = np.asarray(steps, dtype=float)
    if e.shape != s.shape or e.ndim != 1 or e.size < 2:
        raise ValueError("need matching error and step sequences of length >= 2")
    if np.any(e <= 0):
        raise SaturationError("errors must be strictly positive to estimate an order")
    if np.any(s <= 0):
        raise ValueError("steps must be strictly positive")
    return np.log(e[:-1] / e[1:]) / np.log(s[:-1] / s[1:])


@dataclass
class ErrorReport:
    """Errors of a refinement sweep, one record per resolution."""

    sweep: str
    counts: list[int] = field(default_factory=list)
    steps: list[float] = field(default_factory=list)
    errors: dict[NormKind, list[float]] = field(default_factory=dict)

    def add(self, count: int, step: float, errs: dict[NormKind, float]) -> None:
        self.counts.append(int(count))
        self.steps.append(float(step))
        for kind, value in errs.items():
            self.errors.setdefault(kind, []).append(float(value))

    def orders(self, kind: NormKind) -> np.ndarray:
        return observed_order(self.errors[kind], self.steps)
