"""Brute-force and exact-flow oracle tests."""

import math
from itertools import combinations

import numpy as np
import pytest

from gflowss.errors import NonPositiveReward, TooLarge
from gflowss.linear_reward import gen_instance, subset_det
from gflowss.mdp import MdpSpec, state_from_indices, state_from_mask
from gflowss.oracles import (brute_force_best, exact_flow_dp,
                             flow_balance_residuals, level_states,
                             simulate_terminal_counts)


def test_brute_force_counts_and_order():
    spec = MdpSpec(m=4, k=2)
    seen = []
    res = brute_force_best(spec, lambda x: seen.append(x.indices()) or 1.0)
    assert len(res.table) == 6
    assert seen == sorted(seen)  # lexicographic enumeration


def test_brute_force_constant_reward_tie_break():
    spec = MdpSpec(m=5, k=2)
    res = brute_force_best(spec, lambda x: 7.0)
    assert res.best == state_from_indices([0, 1], 5)


def test_brute_force_sigmoid_and_det_agree():
    inst = gen_instance(8, 3, seed=2)
    spec = MdpSpec(m=8, k=3)
    det_best = brute_force_best(spec, lambda x: subset_det(inst, x)).best
    sig_best = brute_force_best(
        spec, lambda x: 1000.0 / (1.0 + math.exp(-0.01 * subset_det(inst, x)))).best
    assert det_best == sig_best


def test_brute_force_too_large():
    with pytest.raises(TooLarge):
        brute_force_best(MdpSpec(m=40, k=20), lambda x: 1.0)


def test_exact_flow_root_is_reward_sum():
    spec = MdpSpec(m=3, k=2)
    rewards = {(0, 1): 1.0, (0, 2): 2.0, (1, 2): 3.0}
    flows = exact_flow_dp(spec, lambda x: rewards[x.indices()])
    assert flows.root_flow == 6.0
    assert flows.state_flow[0] == pytest.approx(6.0)


def test_exact_flow_uniform_rewards():
    spec = MdpSpec(m=5, k=2)
    flows = exact_flow_dp(spec, lambda x: 0.25)
    assert flows.root_flow == pytest.approx(10 * 0.25)
    root_policy = flows.sampling_policy_at(state_from_mask(0, 5))
    assert all(p == pytest.approx(0.2) for p in root_policy.values())


def test_exact_flow_rejects_nonpositive():
    spec = MdpSpec(m=3, k=2)
    with pytest.raises(NonPositiveReward):
        exact_flow_dp(spec, lambda x: 0.0)


def test_exact_flow_balance_small_grid():
    rng = np.random.default_rng(3)
    for m, k in ((4, 2), (6, 3), (8, 5)):
        spec = MdpSpec(m=m, k=k)
        rewards = {x.mask: float(rng.uniform(0.5, 2.0)) for x in level_states(spec, k)}

        def reward_fn(x, rewards=rewards):
            return rewards[x.mask]

        flows = exact_flow_dp(spec, reward_fn)
        res = flow_balance_residuals(
            flows, lambda s: rewards[s.mask] if s.ones == k else 0.0)
        assert max(res.values()) < 1e-12


def test_exact_flow_terminal_flow_equals_reward():
    spec = MdpSpec(m=6, k=2)
    rng = np.random.default_rng(9)
    rewards = {x.mask: float(rng.uniform(0.1, 5.0)) for x in level_states(spec, 2)}
    flows = exact_flow_dp(spec, lambda x: rewards[x.mask])
    for mask, r in rewards.items():
        assert flows.state_flow[mask] == r


def test_backward_split_is_uniform():
    # edge into s' carries F(s') / ones(s') for every parent edge
    spec = MdpSpec(m=5, k=3)
    flows = exact_flow_dp(spec, lambda x: float(sum(x.indices()) + 1))
    for ones in range(1, 4):
        for s in level_states(spec, ones):
            shares = [flows.edge_flow[(s.mask & ~(1 << i), i)]
                      for i in range(5) if s.mask >> i & 1]
            target = flows.state_flow[s.mask] / ones
            assert all(abs(v - target) < 1e-12 for v in shares)


def test_proportional_sampling_monte_carlo():
    spec = MdpSpec(m=4, k=2)
    rng = np.random.default_rng(14)
    rewards = {x.mask: float(rng.uniform(0.2, 3.0)) for x in level_states(spec, 2)}
    flows = exact_flow_dp(spec, lambda x: rewards[x.mask])
    n = 10**6
    counts = simulate_terminal_counts(flows, n, seed=1)
    assert sum(counts.values()) == n
    total = sum(rewards.values())
    for mask, r in rewards.items():
        p = r / total
        se = math.sqrt(n * p * (1 - p))
        assert abs(counts.get(mask, 0) - n * p) <= 3 * se


def test_simulation_matches_all_paths():
    # every terminal of m=4,k=2 is reachable and sampled
    spec = MdpSpec(m=4, k=2)
    flows = exact_flow_dp(spec, lambda x: 1.0)
    counts = simulate_terminal_counts(flows, 60000, seed=1)
    assert set(counts) == {sum(1 << i for i in c) for c in combinations(range(4), 2)}
