"""Event-driven simulator: tape determinism, clocks, observation semantics."""

import math

import numpy as np
import pytest

from mhjump import (
    ConfigurationError,
    DomainBoxError,
    GaussianProposal,
    GeneratorKind,
    LogCoshWell,
    SmoothedDoubleWell,
    BoxedQuadratic,
    first_jump_displacements,
    path_stream,
    simulate_ensemble,
    simulate_path,
)
from mhjump.jump import DOMAIN_JUMP, JumpPath, ObservedEnsemble

DW = SmoothedDoubleWell(d_star=2)
MIX = GeneratorKind.mix(0.5)


def test_path_stream_reproducible_and_split():
    a = path_stream(7, 0, 3).random(5)
    b = path_stream(7, 0, 3).random(5)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, path_stream(7, 0, 4).random(5))
    assert not np.array_equal(a, path_stream(7, 1, 3).random(5))
    assert not np.array_equal(a, path_stream(8, 0, 3).random(5))


def test_jump_path_contract():
    p = JumpPath(
        initial_state=np.array([1.0]),
        jump_times=np.array([0.5, 1.5]),
        states=np.array([[2.0], [3.0]]),
        horizon=2.0,
    )
    assert np.array_equal(p.state_at(0.0), [1.0])
    assert np.array_equal(p.state_at(0.49), [1.0])
    assert np.array_equal(p.state_at(0.5), [2.0])  # right continuity at a jump
    assert np.array_equal(p.state_at(1.7), [3.0])
    with pytest.raises(ConfigurationError):
        JumpPath(np.array([1.0]), np.array([1.0, 0.5]), np.array([[0.0], [0.0]]), 2.0)
    with pytest.raises(ConfigurationError):
        JumpPath(np.array([1.0]), np.array([0.5]), np.array([[0.0], [0.0]]), 2.0)


def test_simulate_path_invariants():
    path = simulate_path(
        GeneratorKind.m2(), DW, GaussianProposal(0.04), np.array([1.2, -0.4]), 30.0,
        path_stream(3, DOMAIN_JUMP, 0),
    )
    t = path.jump_times
    assert t.size > 10
    assert np.all(np.diff(t) > 0.0)
    assert t[-1] <= 30.0 and t[0] > 0.0
    assert path.states.shape == (t.size, 2)
    assert path.n_box_exits == 0


def test_scalar_and_block_engines_agree_exactly():
    # the same per-path tape must give bit-identical states on the obs grid
    eps = 0.04
    prop = GaussianProposal(eps)
    obs = np.array([0.3, 0.7, 1.1])
    ens, counts = simulate_ensemble(
        MIX, DW, prop, np.array([1.0, -1.0]), obs, 6, 2024, return_counts=True
    )
    obs_proc = obs / eps
    for q in range(6):
        path = simulate_path(
            MIX, DW, prop, np.array([1.0, -1.0]), float(obs_proc[-1]),
            path_stream(2024, DOMAIN_JUMP, q),
        )
        assert counts[q] == path.jump_times.size
        for k, tp in enumerate(obs_proc):
            assert np.array_equal(ens.samples[q, k], path.state_at(tp))


def test_ensemble_invariant_to_blocks_and_threads():
    prop = GaussianProposal(0.09)
    obs = [0.25, 0.5]
    base = simulate_ensemble(MIX, DW, prop, np.zeros(2), obs, 40, 5, block_paths=512)
    for block in (3, 17):
        other = simulate_ensemble(MIX, DW, prop, np.zeros(2), obs, 40, 5, block_paths=block)
        assert np.array_equal(base.samples, other.samples)
    threaded = simulate_ensemble(
        MIX, DW, prop, np.zeros(2), obs, 40, 5, block_paths=7, threads=4
    )
    assert np.array_equal(base.samples, threaded.samples)


def test_rescaled_grid_is_horizon_division():
    # macroscopic obs t with variance eps equals raw process obs t/eps
    prop = GaussianProposal(0.25)
    a = simulate_ensemble(GeneratorKind.m2(), DW, prop, np.zeros(2), [0.5, 1.0], 12, 9)
    b = simulate_ensemble(
        GeneratorKind.m2(), DW, prop, np.zeros(2), [2.0, 4.0], 12, 9, rescaled=False
    )
    assert np.array_equal(a.samples, b.samples)
    assert a.epsilon == 0.25 and a.kind == "m2" and a.alpha is None
    assert np.array_equal(a.obs_grid, [0.5, 1.0])


def test_per_path_initial_states():
    starts = np.array([[0.5, -0.5], [1.5, 0.0], [-1.0, 2.0]])
    ens = simulate_ensemble(
        GeneratorKind.m1(), DW, GaussianProposal(0.01), starts, [0.0, 0.1], 3, 1
    )
    assert np.array_equal(ens.samples[:, 0, :], starts)  # obs at t = 0 is the start


def test_clock_equivalence_three_sigma():
    # rate r over horizon h has the law of rate 1 over horizon r h
    target = LogCoshWell(d_star=1)
    kind = GeneratorKind.m2()
    prop = GaussianProposal(0.25)
    n = 1500
    fast = np.empty(n)
    slow = np.empty(n)
    for q in range(n):
        pf = simulate_path(kind, target, prop, np.array([2.0]), 5.0,
                           path_stream(11, DOMAIN_JUMP, q), rate_scale=4.0)
        ps = simulate_path(kind, target, prop, np.array([2.0]), 20.0,
                           path_stream(12, DOMAIN_JUMP, q))
        fast[q] = pf.state_at(5.0)[0]
        slow[q] = ps.state_at(20.0)[0]
    se_mean = math.sqrt(fast.var(ddof=1) / n + slow.var(ddof=1) / n)
    assert abs(fast.mean() - slow.mean()) <= 3.0 * se_mean
    va, vb = fast.var(ddof=1), slow.var(ddof=1)
    se_var = math.sqrt(
        (np.mean((fast - fast.mean()) ** 4) - va * va) / n
        + (np.mean((slow - slow.mean()) ** 4) - vb * vb) / n
    )
    assert abs(va - vb) <= 3.0 * se_var


def test_box_abort_and_continue():
    # a tight declared box on a globally bounded potential isolates the policy
    target = LogCoshWell(d_star=1)
    target.box = 0.9
    prop = GaussianProposal(0.36)
    with pytest.raises(DomainBoxError, match="path"):
        simulate_ensemble(GeneratorKind.m2(), target, prop, np.zeros(1), [4.0], 8, 3,
                          rescaled=False)
    with pytest.raises(DomainBoxError):
        simulate_path(GeneratorKind.m2(), target, prop, np.zeros(1), 4.0, 3)
    path = simulate_path(GeneratorKind.m2(), target, prop, np.zeros(1), 4.0, 3,
                         box_policy="continue")
    assert path.n_box_exits >= 1
    ens = simulate_ensemble(GeneratorKind.m2(), target, prop, np.zeros(1), [4.0], 8, 3,
                            rescaled=False, box_policy="continue")
    assert ens.samples.shape == (8, 1, 1)


def test_first_jump_displacements_contract():
    target = SmoothedDoubleWell(d_star=3)
    prop = GaussianProposal(0.01)
    z, i = first_jump_displacements(GeneratorKind.m2(), target, prop, np.zeros(3), 30000, 21)
    z2, i2 = first_jump_displacements(GeneratorKind.m2(), target, prop, np.zeros(3), 30000, 21,
                                      batch=4096)
    # accepted rows are a tape-order subsequence, so batching cannot matter
    assert np.array_equal(z, z2) and np.array_equal(i, i2)
    counts = np.bincount(i, minlength=3)
    assert np.max(np.abs(counts - 10000)) < 500  # ~5 sigma for uniform thirds
    assert abs(z.mean()) < 5.0 * z.std() / math.sqrt(z.size)  # symmetric at the saddle


def test_validation_errors():
    prop = GaussianProposal(0.04)
    with pytest.raises(ConfigurationError):
        simulate_path(MIX, DW, prop, np.zeros(2), -1.0, 0)
    with pytest.raises(ConfigurationError):
        simulate_path(MIX, DW, prop, np.zeros(3), 1.0, 0)
    with pytest.raises(ConfigurationError):
        simulate_path(MIX, DW, prop, np.zeros(2), 1.0, 0, box_policy="bounce")
    with pytest.raises(ConfigurationError):
        simulate_ensemble(MIX, DW, prop, np.zeros(2), [0.5, 0.25], 4, 0)
    with pytest.raises(ConfigurationError):
        simulate_ensemble(MIX, DW, prop, np.zeros(2), [-0.5, 0.25], 4, 0)
    with pytest.raises(ConfigurationError):
        simulate_ensemble(MIX, DW, prop, np.zeros(2), [0.5], 0, 0)
    with pytest.raises(ConfigurationError):
        simulate_ensemble(MIX, DW, prop, np.zeros((3, 2)), [0.5], 4, 0)
    boxed = BoxedQuadratic(d_star=1, box=2.0)
    with pytest.raises(ConfigurationError):
        simulate_path(GeneratorKind.m1(), boxed, prop, np.array([2.5]), 1.0, 0)


def test_observed_ensemble_accessors():
    ens = ObservedEnsemble(
        obs_grid=np.array([0.1, 0.2]),
        samples=np.zeros((5, 2, 3)),
        epsilon=0.01,
        kind="m1",
        seed=0,
    )
    assert ens.n_paths == 5 and ens.d_star == 3
    assert ens.marginal(1, coord=2).shape == (5,)
    with pytest.raises(ConfigurationError):
        ObservedEnsemble(np.array([0.1, 0.2]), np.zeros((5, 3, 3)), 0.01, "m1", 0)
