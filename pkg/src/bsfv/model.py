"""Market data, divergence-form coefficients and the homogenizing lift.

Time ``t`` is time to maturity throughout: the payoff is the initial
condition and the march runs forward from ``t = 0`` to ``t = T``.

With ``V0(x, t) = g2(t) + x / x_max * (g3(t) - g2(t))`` and
``u = exp(-beta t) (V - V0)`` the pricing equation becomes

    u_t - d/dx [a x^2 u_x + b x u] + c u = f,   u(0, t) = u(x_max, t) = 0,

with ``a = sigma^2/2``, ``b = r - sigma^2``, ``c = 2r + beta - sigma^2`` and
``f = -exp(-beta t) L V0``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate

from . import analytics

DEFAULT_BETA_SAMPLES = 10_000


class ModelError(ValueError):
    """Raised when market data violate the standing assumptions."""


# --------------------------------------------------------------------------
# time-dependent coefficient curves


class Curve:
    """A scalar function of time with its running integral and bounds."""

    is_constant = False

    def __call__(self, t):
        raise NotImplementedError

    def integral(self, t):
        """``int_0^t curve(s) ds``."""
        raise NotImplementedError

    def bounds(self, horizon: float, n_samples: int = DEFAULT_BETA_SAMPLES) -> tuple[float, float]:
        ts = np.linspace(0.0, horizon, n_samples + 1)
        vals = np.asarray(self(ts), dtype=float)
        return float(vals.min()), float(vals.max())


@dataclass(frozen=True)
class Constant(Curve):
    value: float
    is_constant = True

    def __call__(self, t):
        return np.full_like(np.asarray(t, dtype=float), self.value)[()]

    def integral(self, t):
        return self.value * np.asarray(t, dtype=float)

    def bounds(self, horizon, n_samples=DEFAULT_BETA_SAMPLES):
        return float(self.value), float(self.value)


@dataclass(frozen=True)
class Linear(Curve):
    start: float
    slope: float

    def __call__(self, t):
        return self.start + self.slope * np.asarray(t, dtype=float)

    def integral(self, t):
        t = np.asarray(t, dtype=float)
        return self.start * t + 0.5 * self.slope * t * t

    def bounds(self, horizon, n_samples=DEFAULT_BETA_SAMPLES):
        ends = (self.start, self.start + self.slope * horizon)
        return float(min(ends)), float(max(ends))


@dataclass(frozen=True)
class PiecewiseConstant(Curve):
    """``values[k]`` on ``[breaks[k-1], breaks[k])`` with ``breaks[-1] = 0``."""

    breaks: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        if len(self.values) != len(self.breaks) + 1:
            raise ModelError("piecewise curve needs len(values) == len(breaks) + 1")
        if any(b1 <= b0 for b0, b1 in zip(self.breaks, self.breaks[1:])):
            raise ModelError("breaks must be strictly increasing")

    def __call__(self, t):
        idx = np.searchsorted(self.breaks, np.asarray(t, dtype=float), side="right")
        return np.asarray(self.values, dtype=float)[idx]

    def integral(self, t):
        t = np.asarray(t, dtype=float)
        knots = np.concatenate(([0.0], self.breaks))
        vals = np.asarray(self.values, dtype=float)
        out = np.zeros_like(t)
        for k, start in enumerate(knots):
            stop = knots[k + 1] if k + 1 < knots.size else np.inf
            out = out + vals[k] * np.clip(np.minimum(t, stop) - start, 0.0, None)
        return out[()]

    def bounds(self, horizon, n_samples=DEFAULT_BETA_SAMPLES):
        active = [v for k, v in enumerate(self.values) if k == 0 or self.breaks[k - 1] <= horizon]
        return float(min(active)), float(max(active))


@dataclass(frozen=True)
class FunctionCurve(Curve):
    """Arbitrary callable; integrals by adaptive quadrature, bounds by sampling."""

    func: Callable[[float], float]

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return np.vectorize(lambda s: float(self.func(s)), otypes=[float])(t)[()]

    def integral(self, t):
        t = np.asarray(t, dtype=float)
        one = lambda s: integrate.quad(self.func, 0.0, s)[0]
        return np.vectorize(one, otypes=[float])(t)[()]


def as_curve(obj) -> Curve:
    if isinstance(obj, Curve):
        return obj
    if callable(obj):
        return FunctionCurve(obj)
    return Constant(float(obj))


# --------------------------------------------------------------------------
# market data and coefficients


@dataclass(frozen=True)
class MarketData:
    """Rate, volatility, contract and truncation data.

    ``rate`` and ``volatility`` accept floats, :class:`Curve` instances or
    plain callables of time.
    """

    rate: Curve
    volatility: Curve
    strike: float
    maturity: float
    x_max: float
    n_samples: int = DEFAULT_BETA_SAMPLES

    def __post_init__(self):
        object.__setattr__(self, "rate", as_curve(self.rate))
        object.__setattr__(self, "volatility", as_curve(self.volatility))
        if not self.strike > 0:
            raise ModelError(f"strike must be positive, got {self.strike!r}")
        if not self.maturity > 0:
            raise ModelError(f"maturity must be positive, got {self.maturity!r}")
        if not self.x_max > self.strike:
            raise ModelError(f"x_max ({self.x_max!r}) must exceed the strike ({self.strike!r})")
        r_lo, _ = self.rate.bounds(self.maturity, self.n_samples)
        if r_lo < 0:
            raise ModelError(f"rate must be nonnegative on [0, T], found {r_lo!r}")
        s_lo, _ = self.volatility.bounds(self.maturity, self.n_samples)
        if not s_lo > 0:
            raise ModelError(f"volatility must stay positive on [0, T], found {s_lo!r}")

    @classmethod
    def constant(cls, r: float, sigma: float, strike: float, maturity: float, x_max: float):
        return cls(Constant(float(r)), Constant(float(sigma)), float(strike), float(maturity), float(x_max))

    @property
    def is_constant(self) -> bool:
        return self.rate.is_constant and self.volatility.is_constant

    @property
    def rate_upper(self) -> float:
        return self.rate.bounds(self.maturity, self.n_samples)[1]

    @property
    def vol_lower(self) -> float:
        return self.volatility.bounds(self.maturity, self.n_samples)[0]

    @property
    def vol_upper(self) -> float:
        return self.volatility.bounds(self.maturity, self.n_samples)[1]

    def discount(self, t):
        return np.exp(-self.rate.integral(t))


def beta_of(market: MarketData, n_samples: int = DEFAULT_BETA_SAMPLES) -> float:
    """Largest ``sigma(t)^2`` over ``n_samples + 1`` uniform samples of ``[0, T]``."""
    if n_samples < 1:
        raise ModelError("n_samples must be >= 1")
    if market.volatility.is_constant:
        return float(market.volatility(0.0)) ** 2
    ts = np.linspace(0.0, market.maturity, n_samples + 1)
    return float(np.max(np.asarray(market.volatility(ts)) ** 2))


def coefficients_at(market: MarketData, beta: float, t):
    """``(a, b, c)`` of the divergence form at time ``t`` (scalars or arrays)."""
    r = market.rate(t)
    s2 = market.volatility(t) ** 2
    return 0.5 * s2, r - s2, 2.0 * r + beta - s2


@dataclass(frozen=True)
class DivergenceCoefficients:
    market: MarketData
    beta: float

    def a_of_t(self, t):
        return coefficients_at(self.market, self.beta, t)[0]

    def b_of_t(self, t):
        return coefficients_at(self.market, self.beta, t)[1]

    def c_of_t(self, t):
        return coefficients_at(self.market, self.beta, t)[2]


# --------------------------------------------------------------------------
# boundary data and lift


def _zero(t):
    return np.zeros_like(np.asarray(t, dtype=float))[()]


@dataclass(frozen=True)
class BoundaryData:
    """Payoff ``g1(x)``, boundary values ``g2(t)``, ``g3(t)`` and their time derivatives."""

    payoff: Callable
    left: Callable
    right: Callable
    x_max: float
    d_left: Callable = _zero
    d_right: Callable = _zero
    kind: str = "custom"


def european_call_boundary(market: MarketData) -> BoundaryData:
    """Call data with the discounted forward intrinsic value at ``x_max``."""
    K, xm = market.strike, market.x_max

    def payoff(x):
        return np.maximum(np.asarray(x, dtype=float) - K, 0.0)

    def right(t):
        return xm - K * market.discount(t)

    def d_right(t):
        return market.rate(t) * K * market.discount(t)

    return BoundaryData(payoff, _zero, right, xm, _zero, d_right, kind="intrinsic")


def european_call_exact_boundary(market: MarketData) -> BoundaryData:
    """Call data whose right boundary is the closed-form price at ``x_max``.

    Removes the domain-truncation error so that discretization error alone is
    measured.  Only available for constant ``r`` and ``sigma``.
    """
    if not market.is_constant:
        raise ModelError("closed-form boundary needs constant rate and volatility")
    K, xm = market.strike, market.x_max
    r = float(market.rate(0.0))
    sigma = float(market.volatility(0.0))

    def payoff(x):
        return np.maximum(np.asarray(x, dtype=float) - K, 0.0)

    def right(t):
        return analytics.call_value(xm, K, r, sigma, t)

    def d_right(t):
        return analytics.call_time_derivative(xm, K, r, sigma, t)

    return BoundaryData(payoff, _zero, right, xm, _zero, d_right, kind="exact")


def lift_value(boundary: BoundaryData, x, t):
    """Linear interpolation of the boundary values, ``V0(x, t)``."""
    x = np.asarray(x, dtype=float)
    g2 = boundary.left(t)
    return (g2 + x / boundary.x_max * (boundary.right(t) - g2))[()]


def transform_forward(V, V0, beta: float, t):
    return np.exp(-beta * np.asarray(t, dtype=float)) * (np.asarray(V) - V0)


def transform_back(u, V0, beta: float, t):
    return np.exp(beta * np.asarray(t, dtype=float)) * np.asarray(u) + V0


@dataclass(frozen=True)
class BlackScholesModel:
    """Market data, boundary data and the exponential shift ``beta``."""

    market: MarketData
    boundary: BoundaryData
    beta: float = field(default=None)

    def __post_init__(self):
        sampled = beta_of(self.market, self.market.n_samples)
        if self.beta is None:
            object.__setattr__(self, "beta", sampled)
        elif self.beta < sampled * (1.0 - 1e-12):
            raise ModelError(f"beta={self.beta!r} is below sup sigma^2 = {sampled!r}")
        if self.market.rate.bounds(self.market.maturity, self.market.n_samples)[0] == 0.0:
            warnings.warn(
                "zero interest rate: the reaction coefficient c may vanish and only the"
                " semi-norm part of coercivity is guaranteed",
                stacklevel=2,
            )

    @property
    def x_max(self) -> float:
        return self.market.x_max

    def coefficients(self, t):
        return coefficients_at(self.market, self.beta, t)

    def lift(self, x, t):
        return lift_value(self.boundary, x, t)

    def source_coefficients(self, t):
        """``(const, slope)`` with ``f(x, t) = const + slope * x``.

        For the linear lift ``L V0 = g2' + x/x_max (g3' - g2') + r g2`` because
        the ``x V0_x`` and ``V0`` terms cancel except for ``g2``.
        """
        t = np.asarray(t, dtype=float)
        scale = -np.exp(-self.beta * t)
        g2 = self.boundary.left(t)
        dg2 = self.boundary.d_left(t)
        dg3 = self.boundary.d_right(t)
        const = scale * (dg2 + self.market.rate(t) * g2)
        slope = scale * (dg3 - dg2) / self.x_max
        return const, slope

    def source(self, x, t):
        const, slope = self.source_coefficients(t)
        return (const + slope * np.asarray(x, dtype=float))[()]

    def initial_state(self, x):
        """Homogenized payoff ``g1(x) - V0(x, 0)``."""
        return np.asarray(self.boundary.payoff(x)) - self.lift(x, 0.0)

    def to_transformed(self, V, x, t):
        return transform_forward(V, self.lift(x, t), self.beta, t)

    def to_price(self, u, x, t):
        return transform_back(u, self.lift(x, t), self.beta, t)


def source_value(model: BlackScholesModel, x, t):
    return model.source(x, t)


def european_call(market: MarketData, boundary: str = "exact", beta: float | None = None) -> BlackScholesModel:
    """European call model; ``boundary`` is ``"exact"`` or ``"intrinsic"``."""
    if boundary == "exact":
        data = european_call_exact_boundary(market)
    elif boundary == "intrinsic":
        data = european_call_boundary(market)
    else:
        raise ModelError(f"unknown boundary kind {boundary!r}")
    return BlackScholesModel(market, data, beta)


def default_market() -> MarketData:
    return MarketData.constant(r=0.1, sigma=0.5, strike=100.0, maturity=1.0, x_max=300.0)


__all__ = [
    "BlackScholesModel", "BoundaryData", "Constant", "Curve", "DivergenceCoefficients",
    "FunctionCurve", "Linear", "MarketData", "ModelError", "PiecewiseConstant", "as_curve",
    "beta_of", "coefficients_at", "default_market", "european_call", "european_call_boundary",
    "european_call_exact_boundary", "lift_value", "source_value", "transform_back",
    "transform_forward",
]
