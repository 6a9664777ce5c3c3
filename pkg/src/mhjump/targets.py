"""Gibbs targets, the coordinate Gaussian proposal, and acceptance factors.

A target is mu(dx) proportional to exp(-U(x)/T) dx on R^d; the normalizing
constant is never computed. Moves are single-coordinate: pick i uniformly,
propose y = x + z e_i with z ~ N(0, eps). Two acceptance factors attach to a
move, written here through dU = U(y) - U(x):

    s1 = exp(-max(dU, 0)/T)      classical dynamics, rates <= proposal
    s2 = exp(max(-dU, 0)/T)      accelerated dynamics, rates >= proposal

plus the linearized surrogate s2_hat = exp(max(-z * dU_i(x), 0)/T) whose gap
to s2 is second order in z. Everything downstream carries log s, not s;
exponentiation happens at the last moment so that the eps -> 0 regime does
not lose the tiny dU to rounding.

Potentials declare a per-coordinate gradient bound (grad_bound) used by the
dominating kernel; the quadratic is unbounded and therefore carries a domain
box with the bound valid inside it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError


@dataclass(frozen=True)
class GaussianProposal:
    """Single-coordinate displacement law N(0, epsilon)."""

    epsilon: float

    def __post_init__(self):
        if not (self.epsilon > 0.0 and math.isfinite(self.epsilon)):
            raise ConfigurationError(f"proposal epsilon must be positive, got {self.epsilon}")

    @property
    def sigma(self) -> float:
        return math.sqrt(self.epsilon)

    def logpdf(self, z):
        z = np.asarray(z, dtype=float)
        return -0.5 * z * z / self.epsilon - 0.5 * math.log(2.0 * math.pi * self.epsilon)


class TargetPotential:
    """Gibbs target exp(-U/T): potential values, gradient, declared bounds.

    Subclasses implement u(x) and grad(x) vectorized over leading axes of x
    with shape (..., d_star). grad_bound is a true bound on sup_x |dU_i(x)|,
    valid on the whole space or, when box is not None, on the centered cube
    of half-width box.
    """

    name = "target"

    def __init__(self, d_star, T, grad_bound, box=None, params=None):
        if d_star < 1 or int(d_star) != d_star:
            raise ConfigurationError(f"d_star must be a positive integer, got {d_star}")
        if not (T > 0.0 and math.isfinite(T)):
            raise ConfigurationError(f"temperature must be positive, got {T}")
        if not (grad_bound >= 0.0 and math.isfinite(grad_bound)):
            raise ConfigurationError(f"grad_bound must be finite, got {grad_bound}")
        self.d_star = int(d_star)
        self.T = float(T)
        self.grad_bound = float(grad_bound)
        self.box = None if box is None else float(box)
        self.params = dict(params or {})

    def u(self, x):
        raise NotImplementedError

    def grad(self, x):
        raise NotImplementedError

    def delta_u_move(self, x, i, z):
        """U(x + z e_i) - U(x); generic fallback via two full evaluations."""
        x = np.asarray(x, dtype=float)
        y = x.copy()
        y[..., i] = y[..., i] + z
        return self.u(y) - self.u(x)

    def grad_coord(self, x, i):
        return self.grad(x)[..., i]

    def in_box(self, x):
        if self.box is None:
            return np.ones(np.shape(x)[:-1], dtype=bool) if np.ndim(x) > 1 else True
        return np.all(np.abs(np.asarray(x, dtype=float)) <= self.box, axis=-1)

    def check_gradient(self, x):
        """Max abs gap between grad and scale-aware central differences."""
        x = np.asarray(x, dtype=float)
        g = self.grad(x)
        worst = 0.0
        for i in range(self.d_star):
            h = 1e-6 * (1.0 + abs(float(x[..., i])))
            xp = x.copy()
            xm = x.copy()
            xp[..., i] += h
            xm[..., i] -= h
            fd = (self.u(xp) - self.u(xm)) / (2.0 * h)
            worst = max(worst, float(np.max(np.abs(fd - g[..., i]))))
        return worst


class SeparableTargetPotential(TargetPotential):
    """U(x) = sum_i u1(x_i); per-coordinate formulas enable exact dU on moves."""

    def u1(self, v):
        raise NotImplementedError

    def du1(self, v):
        raise NotImplementedError

    def u(self, x):
        return np.sum(self.u1(np.asarray(x, dtype=float)), axis=-1)

    def grad(self, x):
        return self.du1(np.asarray(x, dtype=float))

    def delta_u_move(self, x, i, z):
        xi = np.asarray(x, dtype=float)[..., i]
        return self.u1(xi + z) - self.u1(xi)

    def delta_u1(self, xi, z):
        """u1(xi + z) - u1(xi) on raw coordinate arrays (simulator fast path)."""
        return self.u1(xi + z) - self.u1(xi)


class BoxedQuadratic(SeparableTargetPotential):
    """U(x) = |x|^2 / 2 on a declared box; grad_bound equals the half-width."""

    name = "quadratic"

    def __init__(self, d_star=1, T=1.0, box=10.0):
        if not (box > 0.0):
            raise ConfigurationError("quadratic needs a positive domain box")
        super().__init__(d_star, T, grad_bound=box, box=box, params={"box": box})

    def u1(self, v):
        v = np.asarray(v, dtype=float)
        return 0.5 * v * v

    def du1(self, v):
        return np.asarray(v, dtype=float)


class LogCoshWell(SeparableTargetPotential):
    """U(x) = sum_i log cosh(x_i) - c x_i; globally bounded gradient 1 + |c|."""

    name = "logcosh"

    def __init__(self, d_star=1, T=1.0, c=0.0):
        super().__init__(d_star, T, grad_bound=1.0 + abs(float(c)), params={"c": float(c)})
        self.c = float(c)

    def u1(self, v):
        v = np.asarray(v, dtype=float)
        # log cosh v = |v| + log1p(exp(-2|v|)) - log 2, stable for large |v|
        a = np.abs(v)
        return a + np.log1p(np.exp(-2.0 * a)) - math.log(2.0) - self.c * v

    def du1(self, v):
        return np.tanh(np.asarray(v, dtype=float)) - self.c


class SmoothedDoubleWell(SeparableTargetPotential):
    """U(x) = sum_i sqrt(1 + x_i^2) w(x_i) with a Gaussian-dimple shaping w.

    w(v) = 1 - b (exp(-(v-a)^2 / 2 sigma^2) + exp(-(v+a)^2 / 2 sigma^2)).
    Defaults give exactly two minima near +-1.49, one interior maximum at 0
    (barrier ~0.51) and sup |u1'| = 2.3062; grad_bound is declared 2.5, a
    true bound with a safety margin so thinning domination cannot fail.
    """

    name = "doublewell"

    def __init__(self, d_star=1, T=1.0, a=1.5, b=1.0, sigma=0.9, grad_bound=2.5):
        if not (sigma > 0.0):
            raise ConfigurationError("doublewell sigma must be positive")
        super().__init__(
            d_star,
            T,
            grad_bound=float(grad_bound),
            params={"a": float(a), "b": float(b), "sigma": float(sigma)},
        )
        self.a = float(a)
        self.b = float(b)
        self.sigma = float(sigma)

    def _w(self, v):
        s2 = 2.0 * self.sigma * self.sigma
        return 1.0 - self.b * (np.exp(-((v - self.a) ** 2) / s2) + np.exp(-((v + self.a) ** 2) / s2))

    def _dw(self, v):
        s2 = self.sigma * self.sigma
        return self.b * (
            (v - self.a) / s2 * np.exp(-((v - self.a) ** 2) / (2.0 * s2))
            + (v + self.a) / s2 * np.exp(-((v + self.a) ** 2) / (2.0 * s2))
        )

    def u1(self, v):
        v = np.asarray(v, dtype=float)
        return np.sqrt(1.0 + v * v) * self._w(v)

    def du1(self, v):
        v = np.asarray(v, dtype=float)
        r = np.sqrt(1.0 + v * v)
        return v / r * self._w(v) + r * self._dw(v)

    def well_minima(self):
        """The two symmetric minima (-m, m), solved from du1 = 0."""
        from scipy.optimize import brentq

        m = brentq(lambda v: float(self.du1(v)), 0.5 * self.a, self.a + 4.0 * self.sigma)
        return (-m, m)


_POTENTIALS = {
    BoxedQuadratic.name: BoxedQuadratic,
    LogCoshWell.name: LogCoshWell,
    SmoothedDoubleWell.name: SmoothedDoubleWell,
}


def potential_names():
    return sorted(_POTENTIALS)


def make_potential(name, d_star=1, T=1.0, **params):
    """Build a built-in potential by name ('quadratic', 'logcosh', 'doublewell')."""
    try:
        cls = _POTENTIALS[name]
    except KeyError:
        raise ConfigurationError(f"unknown potential {name!r}; known: {potential_names()}") from None
    try:
        return cls(d_star=d_star, T=T, **params)
    except TypeError as exc:
        raise ConfigurationError(f"bad parameters for potential {name!r}: {exc}") from None


# acceptance factors, all in log space; du = U(y) - U(x), broadcasting welcome


def log_s_m1(du, T):
    du = np.asarray(du, dtype=float)
    return -np.maximum(du, 0.0) / T


def log_s_m2(du, T):
    du = np.asarray(du, dtype=float)
    return np.maximum(-du, 0.0) / T


def log_s_mix(du, T, alpha):
    """log(alpha s1 + (1-alpha) s2), reducing exactly at alpha in {0, 1}."""
    if alpha == 1.0:
        return log_s_m1(du, T)
    if alpha == 0.0:
        return log_s_m2(du, T)
    return np.logaddexp(math.log(alpha) + log_s_m1(du, T), math.log1p(-alpha) + log_s_m2(du, T))


def log_s_hat_m2(grad_i, z, T):
    """Linearized accelerated factor: exp(max(-z dU_i(x), 0)/T), in logs."""
    grad_i = np.asarray(grad_i, dtype=float)
    z = np.asarray(z, dtype=float)
    return np.maximum(-z * grad_i, 0.0) / T


def taylor_gap(du, grad_i, z, T):
    """g = [U(x) - U(y) + z dU_i(x)]/T, the first-order remainder of the move."""
    du = np.asarray(du, dtype=float)
    return (-du + np.asarray(z, dtype=float) * np.asarray(grad_i, dtype=float)) / T


# one-dimensional Gibbs quadrature oracle (density, cdf, quantiles)


def gibbs_table_1d(target, lo=-12.0, hi=12.0, n=200001):
    """Dense-grid normalized density and cdf of exp(-u1/T) on [lo, hi]."""
    if target.d_star != 1:
        raise ConfigurationError("gibbs_table_1d needs a one-dimensional target")
    grid = np.linspace(lo, hi, n)
    logw = -target.u1(grid) / target.T
    w = np.exp(logw - np.max(logw))
    dx = grid[1] - grid[0]
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (w[1:] + w[:-1]) * dx)])
    total = cdf[-1]
    return grid, w / total, cdf / total


def gibbs_quantiles_1d(target, probs, lo=-12.0, hi=12.0, n=200001):
    """Quantiles of the 1-d Gibbs law by interpolating the quadrature cdf."""
    grid, _, cdf = gibbs_table_1d(target, lo, hi, n)
    return np.interp(np.asarray(probs, dtype=float), cdf, grid)
