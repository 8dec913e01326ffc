"""MOGFLOW-SS: preference-conditioned trajectory-balance training.

Two networks share one objective: a forward-policy network over (state
mask, preference scalar n) and a log-partition network over n alone. The
backward policy is fixed uniform over parents, so the squared log ratio
log Z + sum log P_F - log R - sum log P_B has a unique optimum at the
flow that samples terminals proportionally to the conditioned reward.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import nn
from .errors import NonPositiveReward, RankOutOfRange, RootState, TerminalState
from .mdp import (Action, MdpSpec, SubsetState, Trajectory, allowed_actions,
                  apply_action, is_terminal, root)

ConditionedRewardFn = Callable[[SubsetState, float], float]


@dataclass(frozen=True)
class Preference:
    """Scalar n in (0, 1); the induced weights are [n, 1 - n]."""

    n: float

    def __post_init__(self) -> None:
        if not 0.0 < self.n < 1.0:
            raise ValueError(f"preference must lie strictly inside (0, 1), got {self.n}")

    @property
    def beta(self) -> tuple[float, float]:
        return (self.n, 1.0 - self.n)


@dataclass
class TbModel:
    """Forward-policy net on (mask, n) and log-partition net on n."""

    forward_net: nn.NetworkParams  # input m + 1, output m (action logits)
    logz_net: nn.NetworkParams  # input 1, output 1 (log Z)
    spec: MdpSpec


@dataclass(frozen=True)
class TbTrainConfig:
    episodes: int
    zeta: float = 0.05
    eta: float = 1e-5
    beta_dictionary: tuple[float, ...] = (0.1, 0.5, 0.9)
    n_wir: int = 50  # inner beamformer ascent steps, consumed by reward builders
    seed: int = 0
    hidden_widths: tuple[int, ...] = (150, 150)
    fourier_std_forward: float = 0.1
    fourier_std_logz: float = 0.001

    def __post_init__(self) -> None:
        if not self.beta_dictionary:
            raise ValueError("beta dictionary must be non-empty")
        if any(not 0.0 < n < 1.0 for n in self.beta_dictionary):
            raise ValueError("dictionary entries must lie in (0, 1)")
        if not 0.0 <= self.zeta <= 1.0:
            raise ValueError("zeta must be in [0, 1]")
        if self.episodes < 0:
            raise ValueError("episodes must be >= 0")


def init_tb_model(spec: MdpSpec, cfg: TbTrainConfig, fw_seed: int, z_seed: int) -> TbModel:
    fw_cfg = nn.NetworkConfig(
        input_dim=spec.m + 1,
        hidden_widths=cfg.hidden_widths,
        output_dim=spec.m,
        fourier_std=cfg.fourier_std_forward,
        seed=fw_seed,
    )
    z_cfg = nn.NetworkConfig(
        input_dim=1,
        hidden_widths=cfg.hidden_widths,
        output_dim=1,
        fourier_std=cfg.fourier_std_logz,
        seed=z_seed,
    )
    return TbModel(forward_net=nn.init_network(fw_cfg),
                   logz_net=nn.init_network(z_cfg), spec=spec)


def _conditioned_input(s: SubsetState, pref: Preference) -> np.ndarray:
    return np.concatenate([s.as_float_vector(), [pref.n]])


def forward_policy(model: TbModel, s: SubsetState, pref: Preference) -> dict[Action, float]:
    """Softmax over the legal-action logits of the conditioned forward net."""
    legal = allowed_actions(s, model.spec)
    if not legal:
        raise TerminalState("state has no outgoing edges")
    logits = nn.forward(model.forward_net, _conditioned_input(s, pref))[legal]
    w = np.exp(logits - logits.max())
    w /= w.sum()
    return {a: float(p) for a, p in zip(legal, w)}


def backward_policy(s_prime: SubsetState) -> float:
    """Uniform parent probability 1/popcount; independent of the preference
    and of any learned parameter."""
    if s_prime.ones == 0:
        raise RootState("the root has no parents")
    return 1.0 / s_prime.ones


def log_partition(model: TbModel, pref: Preference) -> float:
    return float(nn.forward(model.logz_net, np.array([pref.n]))[0])


def tb_loss_from_logs(log_z: float, log_pf_sum: float, log_reward: float,
                      log_pb_sum: float) -> float:
    """Squared trajectory-balance log ratio; fully in log space."""
    delta = log_z + log_pf_sum - log_reward - log_pb_sum
    return delta * delta


def tb_loss(model: TbModel, tau: Trajectory, reward: float, pref: Preference):
    """Trajectory-balance loss and its gradients for both networks.

    Returns (loss, forward_net gradients, logz_net gradients). Z and the
    reward are never exponentiated.
    """
    if reward <= 0.0:
        raise NonPositiveReward(f"trajectory reward must be positive, got {reward}")
    spec = model.spec
    steps = len(tau.actions)

    inputs = np.stack([_conditioned_input(s, pref) for s in tau.states[:-1]])
    logits, fw_cache = nn.forward_with_cache(model.forward_net, inputs)

    log_pf_sum = 0.0
    grad_logits = np.zeros_like(logits)
    softmaxes = []
    for t in range(steps):
        legal = allowed_actions(tau.states[t], spec)
        row = logits[t, legal]
        row = row - row.max()
        p = np.exp(row)
        p /= p.sum()
        softmaxes.append((legal, p))
        a_pos = legal.index(tau.actions[t])
        log_pf_sum += float(np.log(p[a_pos]))

    log_pb_sum = 0.0
    for t in range(1, steps + 1):
        log_pb_sum += math.log(backward_policy(tau.states[t]))

    z_in = np.array([pref.n])
    log_z_out, z_cache = nn.forward_with_cache(model.logz_net, z_in)
    log_z = float(log_z_out[0])

    delta = log_z + log_pf_sum - math.log(reward) - log_pb_sum
    loss = delta * delta

    # d log P_F / d logits = onehot(action) - softmax, on legal slots
    for t, (legal, p) in enumerate(softmaxes):
        grad_logits[t, legal] = -2.0 * delta * p
        grad_logits[t, tau.actions[t]] += 2.0 * delta
    fw_grads, _ = nn.backward_from_cache(model.forward_net, fw_cache, grad_logits)
    z_grads, _ = nn.backward_from_cache(model.logz_net, z_cache,
                                        np.array([2.0 * delta]))
    return loss, fw_grads, z_grads


@dataclass
class TbTrainResult:
    model: TbModel
    losses: np.ndarray  # per episode
    prefs: np.ndarray  # n sampled per episode
    logz_trace: np.ndarray  # (episodes, len(dictionary)) log Z per dictionary n
    dictionary: tuple[float, ...]


def train_mogflow_ss(spec: MdpSpec, conditioned_reward_fn: ConditionedRewardFn,
                     cfg: TbTrainConfig) -> TbTrainResult:
    """Per episode: draw n uniformly from the dictionary, roll out one
    trajectory (zeta-probability uniform exploration, otherwise sample the
    forward policy), evaluate the conditioned reward at the leaf, then one
    joint Adam step on the trajectory-balance loss for both networks."""
    seeds = np.random.SeedSequence(cfg.seed).generate_state(3)
    model = init_tb_model(spec, cfg, int(seeds[0]), int(seeds[1]))
    rng = np.random.default_rng(int(seeds[2]))
    adam_fw = nn.init_adam(model.forward_net, cfg.eta)
    adam_z = nn.init_adam(model.logz_net, cfg.eta)

    d = len(cfg.beta_dictionary)
    losses = np.empty(cfg.episodes)
    prefs_drawn = np.empty(cfg.episodes)
    logz_trace = np.empty((cfg.episodes, d))

    for ep in range(cfg.episodes):
        n = cfg.beta_dictionary[rng.integers(d)]
        pref = Preference(n)
        s = root(spec)
        states = [s]
        actions: list[Action] = []
        while not is_terminal(s, spec):
            legal = allowed_actions(s, spec)
            if rng.random() < cfg.zeta:
                a = legal[rng.integers(len(legal))]
            else:
                policy = forward_policy(model, s, pref)
                acts = list(policy.keys())
                probs = np.array([policy[x] for x in acts])
                cum = probs.cumsum()
                a = acts[int((cum / cum[-1] < rng.random()).sum())]
            s = apply_action(s, a, spec)
            states.append(s)
            actions.append(a)
        tau = Trajectory(states=tuple(states), actions=tuple(actions))
        reward = conditioned_reward_fn(tau.terminal, n)
        loss, fw_grads, z_grads = tb_loss(model, tau, reward, pref)
        nn.adam_step(model.forward_net, fw_grads, adam_fw)
        nn.adam_step(model.logz_net, z_grads, adam_z)
        losses[ep] = loss
        prefs_drawn[ep] = n
        for i, nd in enumerate(cfg.beta_dictionary):
            logz_trace[ep, i] = log_partition(model, Preference(nd))

    return TbTrainResult(model=model, losses=losses, prefs=prefs_drawn,
                         logz_trace=logz_trace, dictionary=cfg.beta_dictionary)


def rollout_conditioned(model: TbModel, pref: Preference, j: int) -> Trajectory:
    """Deterministic rollout taking the j-th most probable forward-policy
    action at every state; ties break to the lower index."""
    spec = model.spec
    s = root(spec)
    states = [s]
    actions: list[Action] = []
    while not is_terminal(s, spec):
        policy = forward_policy(model, s, pref)
        legal = list(policy.keys())
        if j < 1 or j > len(legal):
            raise RankOutOfRange(f"rank {j} with {len(legal)} legal actions")
        order = sorted(range(len(legal)), key=lambda i: (-policy[legal[i]], legal[i]))
        a = legal[order[j - 1]]
        s = apply_action(s, a, spec)
        states.append(s)
        actions.append(a)
    return Trajectory(states=tuple(states), actions=tuple(actions))


def terminal_distribution(model: TbModel, pref: Preference) -> dict[int, float]:
    """Exact terminal-mask law of the forward policy, by level-by-level
    probability propagation (enumerable specs only)."""
    spec = model.spec
    layer: dict[int, float] = {0: 1.0}
    for _ in range(spec.k):
        nxt: dict[int, float] = {}
        for mask, prob in layer.items():
            s = SubsetState(mask=mask, m=spec.m, ones=mask.bit_count())
            for a, p in forward_policy(model, s, pref).items():
                child = mask | 1 << a
                nxt[child] = nxt.get(child, 0.0) + prob * p
        layer = nxt
    return layer
