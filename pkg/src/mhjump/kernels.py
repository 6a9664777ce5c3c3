"""Jump-rate kernels and the exact-thinning dominating kernel.

Rate densities, for a single-coordinate move x -> y = x + z e_i:

    M(x, y) = (1/d*) s(x, y) phi_eps(z),   s = s1, s2, or alpha s1 + (1-alpha) s2

where phi_eps is the N(0, eps) density. s1 <= 1 always, so the classical
process is simulated by plain thinning of a rate-1 Poisson clock. s2 is
unbounded relative to phi_eps, but s2 <= exp(theta |z|) with
theta = grad_bound / T, which makes e^{theta|z|} phi_eps(z) a dominating
displacement density with total mass

    Lam(eps) = E exp(theta |Z|) = 2 exp(eps theta^2 / 2) Phi(theta sqrt(eps)).

Splitting e^{theta z} phi_eps(z) = e^{eps theta^2/2} phi_eps(z - eps theta)
turns the normalized dominating density into an equal-weight two-sided
mixture of shifted Gaussians restricted to half-lines, sampled exactly by a
sign flip plus one inverse-cdf draw (no rejection).

Accepted-rate algebra for the mixture family, the contract the simulator
relies on: candidates arrive at rate R = alpha + (1-alpha) Lam(eps) with
displacement density

    q(z) = [alpha phi_eps(z) + (1-alpha) e^{theta|z|} phi_eps(z)] / R,

realized by branching to the plain component with probability alpha/R and to
the tilted component otherwise. Accepting a candidate with probability

    a(z) = [alpha s1 + (1-alpha) s2] / [alpha + (1-alpha) e^{theta|z|}]

yields accepted events at rate density R q(z) a(z)
= [alpha s1 + (1-alpha) s2] phi_eps(z), exactly the mixture rate. a(z) <= 1
because s1 <= 1 and s2 <= e^{theta|z|}; alpha = 1 reduces to plain-clock
thinning with a(z) = s1 and alpha = 0 to a(z) = s2 e^{-theta|z|}. A computed
log a > 0 means the declared grad_bound was not a true bound and is raised
as a hard error rather than clipped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri

from .errors import ConfigurationError, DominationError
from .targets import log_s_mix

_KIND_TAGS = ("m1", "m2", "mix")


@dataclass(frozen=True)
class GeneratorKind:
    """Which jump dynamics: classical (m1), accelerated (m2), or a mixture."""

    tag: str
    alpha: float | None = None

    def __post_init__(self):
        if self.tag not in _KIND_TAGS:
            raise ConfigurationError(f"unknown generator kind {self.tag!r}; known: {_KIND_TAGS}")
        if self.tag == "mix":
            if self.alpha is None or not (0.0 <= self.alpha <= 1.0):
                raise ConfigurationError(f"mix needs alpha in [0, 1], got {self.alpha}")
        elif self.alpha is not None:
            raise ConfigurationError(f"kind {self.tag!r} takes no alpha")

    @property
    def alpha_eff(self) -> float:
        """Weight on the classical factor: 1 for m1, 0 for m2, alpha for mix."""
        if self.tag == "m1":
            return 1.0
        if self.tag == "m2":
            return 0.0
        return float(self.alpha)

    def label(self) -> str:
        return self.tag if self.tag != "mix" else f"mix({self.alpha:g})"

    @classmethod
    def m1(cls):
        return cls("m1")

    @classmethod
    def m2(cls):
        return cls("m2")

    @classmethod
    def mix(cls, alpha):
        return cls("mix", float(alpha))

    @classmethod
    def from_string(cls, text, alpha=None):
        text = text.strip().lower()
        if text.startswith("mix:"):
            return cls.mix(float(text.split(":", 1)[1]))
        if text == "mix":
            if alpha is None:
                raise ConfigurationError("kind 'mix' needs alpha")
            return cls.mix(alpha)
        return cls(text)


@dataclass(frozen=True)
class DominatingKernel:
    """Normalized displacement density e^{theta|z|} phi_eps(z) / Lam(eps).

    Stored as the equal-weight two-sided mixture: |z| follows N(mean_abs, eps)
    conditioned positive, the sign is symmetric. theta = 0 degrades to the
    plain N(0, eps) proposal, Lam = 1.
    """

    epsilon: float
    tilt: float
    log_total_rate: float

    def __post_init__(self):
        if self.log_total_rate < -1e-12:
            raise ConfigurationError("total dominating mass must be >= 1")

    @property
    def lam(self) -> float:
        return math.exp(self.log_total_rate)

    @property
    def mean_abs(self) -> float:
        """Mean of the shifted component on the positive side (eps * theta)."""
        return self.epsilon * self.tilt

    @property
    def weights(self):
        return (0.5, 0.5)

    @property
    def component_means(self):
        return (-self.mean_abs, self.mean_abs)

    @property
    def _trunc_lo(self) -> float:
        """P(N(mean_abs, eps) <= 0) = Phi(-theta sqrt(eps)), the cut mass."""
        return float(ndtr(-self.tilt * math.sqrt(self.epsilon)))

    def sample_abs(self, u):
        """Inverse-cdf |z| from N(mean_abs, eps) conditioned on z > 0."""
        lo = self._trunc_lo
        u = np.asarray(u, dtype=float)
        return self.mean_abs + math.sqrt(self.epsilon) * ndtri(lo + u * (1.0 - lo))

    def sample(self, u_sign, u_mag):
        sign = np.where(np.asarray(u_sign, dtype=float) < 0.5, -1.0, 1.0)
        return sign * self.sample_abs(u_mag)

    def log_density(self, z):
        z = np.asarray(z, dtype=float)
        base = -0.5 * z * z / self.epsilon - 0.5 * math.log(2.0 * math.pi * self.epsilon)
        return self.tilt * np.abs(z) + base - self.log_total_rate


def log_lam(epsilon, theta):
    """log Lam(eps) = log 2 + eps theta^2 / 2 + log Phi(theta sqrt(eps))."""
    growth = 0.5 * epsilon * theta * theta
    if growth > 700.0:
        raise ConfigurationError(
            f"dominating mass overflows: eps*theta^2/2 = {growth:.3g}; reduce eps or grad_bound"
        )
    return math.log(2.0) + growth + math.log(ndtr(theta * math.sqrt(epsilon)))


def build_dominating_kernel(target, proposal) -> DominatingKernel:
    theta = target.grad_bound / target.T
    return DominatingKernel(
        epsilon=proposal.epsilon,
        tilt=theta,
        log_total_rate=log_lam(proposal.epsilon, theta),
    )


def total_rate_bound(kind, target, proposal) -> float:
    """Uniform-in-x upper bound on the total jump rate of the kind."""
    a = kind.alpha_eff
    if a == 1.0:
        return 1.0
    lam = math.exp(log_lam(proposal.epsilon, target.grad_bound / target.T))
    return a + (1.0 - a) * lam


def log_rate_density(kind, target, proposal, x, i, y_i):
    """log M(x, y) for the move x -> x + (y_i - x_i) e_i."""
    x = np.asarray(x, dtype=float)
    z = y_i - x[..., i]
    du = target.delta_u_move(x, i, z)
    return (
        log_s_mix(du, target.T, kind.alpha_eff)
        + proposal.logpdf(z)
        - math.log(target.d_star)
    )


def rate_density(kind, target, proposal, x, i, y_i):
    return np.exp(log_rate_density(kind, target, proposal, x, i, y_i))


def accept_log_from_delta(du, abs_z, alpha_eff, theta, T):
    """log a(z) from precomputed dU and |z|; the array core of thinning.

    a(z) = [alpha s1 + (1-alpha) s2] / [alpha + (1-alpha) e^{theta|z|}].
    """
    num = log_s_mix(du, T, alpha_eff)
    if alpha_eff == 1.0:
        return num
    tilt = theta * np.asarray(abs_z, dtype=float)
    if alpha_eff == 0.0:
        return num - tilt
    den = np.logaddexp(math.log(alpha_eff), math.log1p(-alpha_eff) + tilt)
    return num - den


_ACCEPT_SLACK = 1e-9


def thinning_accept_logprob(kind, target, proposal, x, i, z, dom=None):
    """log acceptance probability for a dominating-kernel candidate move."""
    if dom is None:
        dom = build_dominating_kernel(target, proposal)
    x = np.asarray(x, dtype=float)
    du = target.delta_u_move(x, i, z)
    out = accept_log_from_delta(du, np.abs(z), kind.alpha_eff, dom.tilt, target.T)
    if np.any(out > _ACCEPT_SLACK):
        bad = float(np.max(out))
        raise DominationError(
            f"acceptance log-probability {bad:.3e} > 0 for kind {kind.label()} at "
            f"x={np.array2string(np.atleast_1d(x))}, i={i}, z={z}: declared grad_bound "
            f"{target.grad_bound} is not a true bound here"
        )
    return np.minimum(out, 0.0)
