"""Exact desk-scale oracles: exhaustive subset search and exact DAG flows.

Both enumerate the whole MDP, so they only run at sizes where
sum_j binom(m, j) is small; every stochastic trainer in the package is
tested against them.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import comb
from typing import Callable, Iterator

import numpy as np

from .errors import NonPositiveReward, TooLarge
from .mdp import Action, MdpSpec, SubsetState, state_from_indices

BRUTE_FORCE_LIMIT = 10**6
DP_STATE_LIMIT = 2 * 10**6

RewardFn = Callable[[SubsetState], float]


def level_states(spec: MdpSpec, ones: int) -> Iterator[SubsetState]:
    """All states with the given popcount, in lexicographic index order."""
    for idx in combinations(range(spec.m), ones):
        yield state_from_indices(idx, spec.m)


@dataclass
class BruteForceResult:
    best: SubsetState
    best_value: float
    table: list[tuple[SubsetState, float]]  # lexicographic subset order


def brute_force_best(spec: MdpSpec, reward_fn: RewardFn) -> BruteForceResult:
    """Evaluate every k-subset; argmax ties resolve to the lexicographically
    first subset. Returns the full reward table for downstream checks."""
    if spec.terminal_count > BRUTE_FORCE_LIMIT:
        raise TooLarge(f"{spec.terminal_count} subsets exceed the enumeration limit")
    table: list[tuple[SubsetState, float]] = []
    best: SubsetState | None = None
    best_value = -np.inf
    for x in level_states(spec, spec.k):
        value = float(reward_fn(x))
        table.append((x, value))
        if value > best_value:
            best, best_value = x, value
    assert best is not None
    return BruteForceResult(best=best, best_value=best_value, table=table)


@dataclass
class ExactFlows:
    """Balanced flows on the full subset DAG.

    Edge flows use the uniform-parent-split decomposition: each state
    hands its flow to its parents in equal shares, which is the unique
    flow consistent with the uniform backward policy. root_flow is the
    literal lexicographic-order sum of terminal rewards.
    """

    spec: MdpSpec
    state_flow: dict[int, float]  # mask -> F(s)
    edge_flow: dict[tuple[int, Action], float]  # (parent mask, action) -> F(s, a)
    root_flow: float

    def state(self, s: SubsetState) -> float:
        return self.state_flow[s.mask]

    def edge(self, s: SubsetState, a: Action) -> float:
        return self.edge_flow[(s.mask, a)]

    def edge_flows_at(self, s: SubsetState) -> dict[Action, float]:
        """Outgoing edge flows of s keyed by action, ascending."""
        out: dict[Action, float] = {}
        for a in range(self.spec.m):
            key = (s.mask, a)
            if key in self.edge_flow:
                out[a] = self.edge_flow[key]
        return out

    def sampling_policy_at(self, s: SubsetState) -> dict[Action, float]:
        flows = self.edge_flows_at(s)
        total = self.state_flow[s.mask]
        return {a: f / total for a, f in flows.items()}


def exact_flow_dp(spec: MdpSpec, reward_fn: RewardFn) -> ExactFlows:
    """Backward pass over the graded DAG.

    Terminals carry flow equal to their reward; every other node's flow is
    the sum of its outgoing edge flows, where each child distributes its
    flow equally over its `ones` parents.
    """
    n_states = sum(comb(spec.m, j) for j in range(spec.k + 1))
    if n_states > DP_STATE_LIMIT:
        raise TooLarge(f"{n_states} states exceed the DP limit")

    state_flow: dict[int, float] = {}
    edge_flow: dict[tuple[int, Action], float] = {}

    rewards: list[float] = []
    for x in level_states(spec, spec.k):
        r = float(reward_fn(x))
        if r <= 0.0:
            raise NonPositiveReward(f"terminal {x.indices()} has reward {r}")
        state_flow[x.mask] = r
        rewards.append(r)
    root_flow = 0.0
    for r in rewards:  # lexicographic order, plain left fold
        root_flow += r

    for ones in range(spec.k - 1, -1, -1):
        for s in level_states(spec, ones):
            total = 0.0
            for a in range(spec.m):
                if s.mask >> a & 1:
                    continue
                child_mask = s.mask | 1 << a
                f = state_flow[child_mask] / (ones + 1)
                edge_flow[(s.mask, a)] = f
                total += f
            state_flow[s.mask] = total

    return ExactFlows(spec=spec, state_flow=state_flow, edge_flow=edge_flow,
                      root_flow=root_flow)


def flow_balance_residuals(flows: ExactFlows, reward_fn: RewardFn) -> dict[int, float]:
    """Relative in-minus-out mismatch at every non-root node."""
    spec = flows.spec
    residuals: dict[int, float] = {}
    for ones in range(1, spec.k + 1):
        for s in level_states(spec, ones):
            inflow = 0.0
            for i in range(spec.m):
                if s.mask >> i & 1:
                    inflow += flows.edge_flow[(s.mask & ~(1 << i), i)]
            reward = float(reward_fn(s)) if ones == spec.k else 0.0
            outflow = 0.0 if ones == spec.k else sum(flows.edge_flows_at(s).values())
            scale = max(abs(inflow), 1.0)
            residuals[s.mask] = abs(inflow - reward - outflow) / scale
    return residuals


def simulate_terminal_counts(flows: ExactFlows, n_samples: int, seed: int) -> dict[int, int]:
    """Sample n_samples root-to-leaf trajectories under pi = edge/state flow.

    Trajectories are independent, so they are advanced level-synchronously:
    all walkers sitting in the same state draw their next action from one
    multinomial. Returns terminal-mask visit counts.
    """
    rng = np.random.default_rng(seed)
    spec = flows.spec
    counts: dict[int, int] = {0: n_samples}
    for _ in range(spec.k):
        nxt: dict[int, int] = {}
        for mask, cnt in sorted(counts.items()):
            s = SubsetState(mask=mask, m=spec.m, ones=mask.bit_count())
            policy = flows.sampling_policy_at(s)
            actions = list(policy.keys())
            probs = np.array([policy[a] for a in actions])
            draw = rng.multinomial(cnt, probs / probs.sum())
            for a, c in zip(actions, draw):
                if c:
                    child = mask | 1 << a
                    nxt[child] = nxt.get(child, 0) + int(c)
        counts = nxt
    return counts
