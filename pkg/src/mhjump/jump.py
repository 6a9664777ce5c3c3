"""Event-driven simulation of the jump dynamics by exact thinning.

Clock and rescaling. Candidates of kind "mix(alpha)" arrive as a Poisson
clock of rate R = alpha + (1-alpha) Lam(eps), each candidate picks a uniform
coordinate and a displacement from the mixture dominating kernel, and is
accepted with the probability documented in the kernels module. The time
rescaling t -> t/eps is applied to the observation horizon, never to the
rates, so the rate code is identical across eps.

Determinism. Path p draws from a Philox stream keyed by
(master_seed, domain, p). Every candidate event consumes exactly one row of
six uniforms,

    [exp-clock, coordinate, branch, sign, magnitude, accept],

transformed by inverse cdfs only. The scalar reference simulator and the
vectorized block engine therefore consume identical per-path tapes and
produce bit-identical paths; block boundaries and thread scheduling cannot
change any path's values because no randomness is shared across paths. Rows
are drawn in fixed chunks of TAPE_CHUNK events; a path that ends mid-chunk
simply ignores the unused rows.

The block engine advances a block of paths in lock step, one candidate event
per iteration across the whole block, with finished paths masked out. States
are right-continuously recorded on the observation grid (the value at an
observation time is the state after the last jump at or before it).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import ndtr, ndtri

from .errors import ConfigurationError, DomainBoxError, DominationError
from .kernels import GeneratorKind, accept_log_from_delta, total_rate_bound
from .targets import SeparableTargetPotential

TAPE_COLS = 6
COL_EXP, COL_COORD, COL_BRANCH, COL_SIGN, COL_MAG, COL_ACC = range(TAPE_COLS)
TAPE_CHUNK = 1024
BLOCK_PATHS = 512

DOMAIN_JUMP = 0
DOMAIN_LANGEVIN = 1
DOMAIN_DIRECT = 2

_ACCEPT_SLACK = 1e-9
_BOX_POLICIES = ("abort", "continue")


def path_stream(master_seed, domain, index):
    """Counter-based stream for one path, independent of execution order."""
    ss = np.random.SeedSequence(int(master_seed), spawn_key=(int(domain), int(index)))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True, eq=False)
class JumpPath:
    """One trajectory: strictly increasing jump times and post-jump states."""

    initial_state: np.ndarray
    jump_times: np.ndarray
    states: np.ndarray
    horizon: float
    n_box_exits: int = 0

    def __post_init__(self):
        t = np.asarray(self.jump_times, dtype=float)
        if t.size and (np.any(np.diff(t) <= 0.0) or t[-1] > self.horizon or t[0] <= 0.0):
            raise ConfigurationError("jump times must be strictly increasing within (0, horizon]")
        if len(self.states) != t.size:
            raise ConfigurationError("one state per jump time")

    def state_at(self, t):
        """Right-continuous evaluation: state after the last jump <= t."""
        k = int(np.searchsorted(self.jump_times, t, side="right"))
        return self.initial_state if k == 0 else self.states[k - 1]


@dataclass(frozen=True, eq=False)
class ObservedEnsemble:
    """States of many independent paths on a shared observation grid.

    samples[p, k, :] is path p at obs_grid[k]; for rescaled runs the grid is
    macroscopic time t and the path runs to process time t/epsilon. epsilon
    holds the proposal variance for jump ensembles and the step size for the
    reference integrator (kind "langevin").
    """

    obs_grid: np.ndarray
    samples: np.ndarray
    epsilon: float
    kind: str
    seed: int
    alpha: Optional[float] = None

    def __post_init__(self):
        grid = np.asarray(self.obs_grid, dtype=float)
        samples = np.asarray(self.samples, dtype=float)
        if samples.ndim != 3 or samples.shape[1] != grid.size:
            raise ConfigurationError("samples must have shape (paths, grid, d)")
        object.__setattr__(self, "obs_grid", grid)
        object.__setattr__(self, "samples", samples)

    @property
    def n_paths(self):
        return self.samples.shape[0]

    @property
    def d_star(self):
        return self.samples.shape[2]

    def marginal(self, k, coord=0):
        return self.samples[:, k, coord]


@dataclass(frozen=True)
class _EventParams:
    """Constants of the per-event transform for one (kind, target, proposal)."""

    d_star: int
    T: float
    alpha: float
    theta: float
    epsilon: float
    sqrt_eps: float
    rate_total: float
    p_plain: float
    mean_tilt: float
    trunc_tilt: float
    box: Optional[float]


def _event_params(kind, target, proposal, rate_scale=1.0):
    alpha = kind.alpha_eff
    theta = target.grad_bound / target.T
    r0 = total_rate_bound(kind, target, proposal)
    eps = proposal.epsilon
    return _EventParams(
        d_star=target.d_star,
        T=target.T,
        alpha=alpha,
        theta=theta,
        epsilon=eps,
        sqrt_eps=math.sqrt(eps),
        rate_total=r0 * rate_scale,
        p_plain=alpha / r0,
        mean_tilt=eps * theta,
        trunc_tilt=float(ndtr(-theta * math.sqrt(eps))),
        box=target.box,
    )


def _decode_events(p, rows):
    """Tape rows (..., 6) -> (dt, coordinate, z, |z|, accept-uniform)."""
    dt = -np.log1p(-rows[..., COL_EXP]) / p.rate_total
    i = np.minimum((rows[..., COL_COORD] * p.d_star).astype(np.int64), p.d_star - 1)
    tilted = rows[..., COL_BRANCH] >= p.p_plain
    mean = np.where(tilted, p.mean_tilt, 0.0)
    lo = np.where(tilted, p.trunc_tilt, 0.5)
    abs_z = mean + p.sqrt_eps * ndtri(lo + rows[..., COL_MAG] * (1.0 - lo))
    z = np.where(rows[..., COL_SIGN] < 0.5, -abs_z, abs_z)
    return dt, i, z, abs_z, rows[..., COL_ACC]


def _delta_u_rows(target, state, i, z):
    """dU for one coordinate move per row of a (B, d) state block."""
    if isinstance(target, SeparableTargetPotential):
        xi = state[np.arange(state.shape[0]), i]
        return target.delta_u1(xi, z)
    y = state.copy()
    y[np.arange(state.shape[0]), i] += z
    return target.u(y) - target.u(state)


def _check_domination(la, kind, target, where):
    if np.any(la > _ACCEPT_SLACK):
        k = int(np.argmax(la))
        raise DominationError(
            f"acceptance log-probability {float(np.max(la)):.3e} > 0 for kind "
            f"{kind.label()} at {where(k)}: declared grad_bound {target.grad_bound} "
            "is not a true bound along this move"
        )


def _validate_x0(target, x0):
    x0 = np.asarray(x0, dtype=float)
    if x0.shape[-1] != target.d_star:
        raise ConfigurationError(f"x0 must have {target.d_star} coordinates, got shape {x0.shape}")
    if target.box is not None and np.any(np.abs(x0) > target.box):
        raise ConfigurationError(f"x0 outside the declared domain box +-{target.box}")
    return x0


def simulate_path(kind, target, proposal, x0, horizon, stream, *, rate_scale=1.0, box_policy="abort"):
    """Reference per-event simulator; one path, full jump log.

    stream is a numpy Generator (use path_stream to match ensemble rows) or
    an integer master seed, which selects path 0 of the jump domain.
    rate_scale multiplies the candidate clock rate; simulating at rate
    R/eps over horizon h is statistically the same as rate R over h/eps.
    """
    if horizon <= 0.0:
        raise ConfigurationError(f"horizon must be positive, got {horizon}")
    if box_policy not in _BOX_POLICIES:
        raise ConfigurationError(f"box_policy must be one of {_BOX_POLICIES}")
    rng = stream if isinstance(stream, np.random.Generator) else path_stream(stream, DOMAIN_JUMP, 0)
    x = _validate_x0(target, x0).copy()
    if x.ndim != 1:
        raise ConfigurationError("simulate_path takes a single initial state")
    p = _event_params(kind, target, proposal, rate_scale)
    separable = isinstance(target, SeparableTargetPotential)
    times, states = [], []
    n_exits = 0
    t = 0.0
    while True:
        tape = rng.random((TAPE_CHUNK, TAPE_COLS))
        for k in range(TAPE_CHUNK):
            dt, i, z, abs_z, u_acc = _decode_events(p, tape[k])
            t += dt
            if t > horizon:
                return JumpPath(
                    initial_state=np.asarray(x0, dtype=float).copy(),
                    jump_times=np.array(times),
                    states=np.array(states).reshape(len(times), target.d_star),
                    horizon=float(horizon),
                    n_box_exits=n_exits,
                )
            i = int(i)
            if separable:
                du = target.delta_u1(x[i], z)
            else:
                du = target.delta_u_move(x, i, z)
            la = accept_log_from_delta(du, abs_z, p.alpha, p.theta, p.T)
            _check_domination(np.atleast_1d(la), kind, target, lambda _: f"x={x!r}, i={i}, z={z!r}")
            with np.errstate(divide="ignore"):
                accept = np.log(u_acc) < la
            if accept:
                x[i] += z
                if p.box is not None and abs(x[i]) > p.box:
                    n_exits += 1
                    if box_policy == "abort":
                        raise DomainBoxError(
                            f"state left the domain box +-{p.box} at t={t:.6g}: x={x!r}"
                        )
                times.append(t)
                states.append(x.copy())


def _run_block(kind, target, proposal, p, x0_block, horizon, streams, obs_proc, box_policy, path_offset):
    b, d = x0_block.shape
    n_obs = obs_proc.size
    state = x0_block.copy()
    t = np.zeros(b)
    ptr = np.zeros(b, dtype=np.int64)
    samples = np.empty((b, n_obs, d))
    n_acc = np.zeros(b, dtype=np.int64)
    n_exits = np.zeros(b, dtype=np.int64)
    rows_idx = np.arange(b)
    tapes = None
    k = TAPE_CHUNK
    while np.any(t <= horizon):
        if k == TAPE_CHUNK:
            tapes = np.stack([s.random((TAPE_CHUNK, TAPE_COLS)) for s in streams])
            k = 0
        dt, i, z, abs_z, u_acc = _decode_events(p, tapes[:, k, :])
        k += 1
        t = t + dt
        while True:
            pending = (ptr < n_obs) & (obs_proc[np.minimum(ptr, n_obs - 1)] < t)
            if not pending.any():
                break
            sel = rows_idx[pending]
            samples[sel, ptr[sel], :] = state[sel]
            ptr[pending] += 1
        du = _delta_u_rows(target, state, i, z)
        la = accept_log_from_delta(du, abs_z, p.alpha, p.theta, p.T)
        _check_domination(
            la, kind, target,
            lambda j: f"path {path_offset + j}, x={state[j]!r}, i={int(i[j])}, z={float(z[j])!r}",
        )
        with np.errstate(divide="ignore"):
            acc = (t <= horizon) & (np.log(u_acc) < la)
        if acc.any():
            sel = rows_idx[acc]
            moved = state[sel, i[sel]] + z[sel]
            state[sel, i[sel]] = moved
            n_acc[sel] += 1
            if p.box is not None:
                out = np.abs(moved) > p.box
                if out.any():
                    n_exits[sel] += out
                    if box_policy == "abort":
                        j = int(sel[out][0])
                        raise DomainBoxError(
                            f"path {path_offset + j} left the domain box +-{p.box}: x={state[j]!r}"
                        )
    remaining = ptr < n_obs
    for j in rows_idx[remaining]:
        samples[j, ptr[j]:, :] = state[j]
    return samples, n_acc, n_exits


def simulate_ensemble(
    kind,
    target,
    proposal,
    x0,
    obs_grid,
    n_paths,
    master_seed,
    *,
    rescaled=True,
    threads=1,
    block_paths=BLOCK_PATHS,
    box_policy="abort",
    return_counts=False,
):
    """Independent paths recorded on obs_grid; deterministic in master_seed.

    With rescaled=True (the default) obs_grid is macroscopic time and each
    path runs to process time max(obs_grid)/epsilon; with rescaled=False the
    grid is raw process time (diagnostic runs).
    """
    if n_paths < 1:
        raise ConfigurationError("n_paths must be >= 1")
    if box_policy not in _BOX_POLICIES:
        raise ConfigurationError(f"box_policy must be one of {_BOX_POLICIES}")
    obs = np.asarray(obs_grid, dtype=float)
    if obs.ndim != 1 or obs.size == 0 or np.any(obs < 0.0) or np.any(np.diff(obs) <= 0.0):
        raise ConfigurationError("obs_grid must be nonnegative and strictly increasing")
    x0 = _validate_x0(target, x0)
    if x0.ndim == 1:
        starts = np.broadcast_to(x0, (n_paths, target.d_star))
    elif x0.shape == (n_paths, target.d_star):
        starts = x0
    else:
        raise ConfigurationError("x0 must be one state or one per path")
    scale = proposal.epsilon if rescaled else 1.0
    obs_proc = obs / scale
    horizon = float(obs_proc[-1])
    p = _event_params(kind, target, proposal)
    samples = np.empty((n_paths, obs.size, target.d_star))
    counts = np.zeros(n_paths, dtype=np.int64)
    exits = np.zeros(n_paths, dtype=np.int64)
    spans = [(lo, min(lo + block_paths, n_paths)) for lo in range(0, n_paths, block_paths)]

    def run_span(span):
        lo, hi = span
        streams = [path_stream(master_seed, DOMAIN_JUMP, q) for q in range(lo, hi)]
        s, c, e = _run_block(
            kind, target, proposal, p, np.array(starts[lo:hi], dtype=float),
            horizon, streams, obs_proc, box_policy, lo,
        )
        samples[lo:hi] = s
        counts[lo:hi] = c
        exits[lo:hi] = e

    if threads <= 1:
        for span in spans:
            run_span(span)
    else:
        with ThreadPoolExecutor(max_workers=int(threads)) as pool:
            list(pool.map(run_span, spans))
    ens = ObservedEnsemble(
        obs_grid=obs,
        samples=samples,
        epsilon=proposal.epsilon,
        kind=kind.tag,
        seed=int(master_seed),
        alpha=kind.alpha,
    )
    if return_counts:
        return ens, counts
    return ens


def first_jump_displacements(kind, target, proposal, x, n_samples, master_seed, batch=1 << 18):
    """Displacements (and coordinates) of first accepted jumps from a fixed x.

    Rejected candidates do not move the state, so first accepted displacements
    are iid draws from M(x, .) normalized. This is a direct sampler on a
    single stream (domain DOMAIN_DIRECT), not a path tape.
    """
    x = _validate_x0(target, x)
    if x.ndim != 1:
        raise ConfigurationError("first_jump_displacements takes a single state")
    rng = path_stream(master_seed, DOMAIN_DIRECT, 0)
    p = _event_params(kind, target, proposal)
    separable = isinstance(target, SeparableTargetPotential)
    out_z = np.empty(n_samples)
    out_i = np.empty(n_samples, dtype=np.int64)
    filled = 0
    while filled < n_samples:
        rows = rng.random((batch, TAPE_COLS))
        _, i, z, abs_z, u_acc = _decode_events(p, rows)
        if separable:
            du = target.delta_u1(x[i], z)
        else:
            tiled = np.broadcast_to(x, (batch, x.size)).copy()
            tiled[np.arange(batch), i] += z
            du = target.u(tiled) - target.u(np.broadcast_to(x, (batch, x.size)))
        la = accept_log_from_delta(du, abs_z, p.alpha, p.theta, p.T)
        _check_domination(la, kind, target, lambda j: f"x={x!r}, i={int(i[j])}, z={float(z[j])!r}")
        with np.errstate(divide="ignore"):
            acc = np.log(u_acc) < la
        za, ia = z[acc], i[acc]
        take = min(n_samples - filled, za.size)
        out_z[filled:filled + take] = za[:take]
        out_i[filled:filled + take] = ia[:take]
        filled += take
    return out_z, out_i
