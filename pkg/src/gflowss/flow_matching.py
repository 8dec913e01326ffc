"""GFLOW-SS: flow-matching training over the subset MDP.

A single network maps the state mask to one log edge flow per sensor
slot; illegal slots are ignored by every consumer. Training samples
root-to-leaf trajectories on-policy (argmax flow with zeta-probability
uniform exploration) and, after every transition, takes one Adam step on
the squared in-minus-reward-minus-out mismatch at the new state.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

from . import nn
from .errors import RankOutOfRange, RootState, TerminalState
from .mdp import (Action, MdpSpec, SubsetState, Trajectory, allowed_actions,
                  apply_action, is_terminal, parents, root)

RewardFn = Callable[[SubsetState], float]


@dataclass
class FlowModel:
    """Network predicting log F(s, a) for every slot a, plus the MDP size."""

    net: nn.NetworkParams
    spec: MdpSpec


@dataclass(frozen=True)
class FmTrainConfig:
    episodes: int
    zeta: float = 0.1  # exploration probability per transition
    eta: float = 2e-4  # Adam learning rate
    seed: int = 0
    hidden_widths: tuple[int, ...] = (150, 150)
    fourier_std: float = 0.1

    def __post_init__(self) -> None:
        if not 0.0 <= self.zeta <= 1.0:
            raise ValueError("zeta must be in [0, 1]")
        if self.episodes < 0:
            raise ValueError("episodes must be >= 0")
        if self.eta <= 0:
            raise ValueError("eta must be positive")


def init_flow_model(spec: MdpSpec, cfg: FmTrainConfig, net_seed: int) -> FlowModel:
    net_cfg = nn.NetworkConfig(
        input_dim=spec.m,
        hidden_widths=cfg.hidden_widths,
        output_dim=spec.m,
        fourier_std=cfg.fourier_std,
        seed=net_seed,
    )
    return FlowModel(net=nn.init_network(net_cfg), spec=spec)


def _legal_log_flows(model: FlowModel, s: SubsetState) -> tuple[list[Action], np.ndarray]:
    legal = allowed_actions(s, model.spec)
    if not legal:
        raise TerminalState("state has no outgoing edges")
    out = nn.forward(model.net, s.as_float_vector())
    return legal, out[legal]


def edge_flows(model: FlowModel, s: SubsetState) -> dict[Action, float]:
    """exp of the network output at legal slots; strictly positive."""
    legal, logs = _legal_log_flows(model, s)
    return {a: float(np.exp(v)) for a, v in zip(legal, logs)}


def sampling_policy(model: FlowModel, s: SubsetState) -> dict[Action, float]:
    """Edge flows normalized to a distribution over legal actions."""
    legal, logs = _legal_log_flows(model, s)
    w = np.exp(logs - logs.max())
    w /= w.sum()
    return {a: float(p) for a, p in zip(legal, w)}


def fm_loss_from_flows(flow_fn: Callable[[SubsetState], Mapping[Action, float]],
                       s_prime: SubsetState, reward: float, spec: MdpSpec) -> float:
    """Squared flow mismatch at s_prime for any edge-flow source.

    flow_fn(s) must map legal actions of s to positive flows; the oracle
    flows plug in here unchanged.
    """
    if s_prime.ones == 0:
        raise RootState("the root has no in-flow")
    inflow = 0.0
    for parent, a in parents(s_prime):
        inflow += float(flow_fn(parent)[a])
    outflow = 0.0
    if not is_terminal(s_prime, spec):
        outflow = float(sum(flow_fn(s_prime).values()))
    residual = inflow - float(reward) - outflow
    return residual * residual


def fm_loss(model: FlowModel, s_prime: SubsetState, reward: float):
    """Flow-matching loss at s_prime and its gradient w.r.t. the network.

    The mismatch is computed in linear flow space from the exponentiated
    log-domain outputs; gradient contributions flow into every parent
    evaluation and (at non-terminals) the child evaluation.
    """
    if s_prime.ones == 0:
        raise RootState("the root has no in-flow")
    spec = model.spec

    par = parents(s_prime)
    parent_x = np.stack([p.as_float_vector() for p, _ in par])
    parent_out, parent_cache = nn.forward_with_cache(model.net, parent_x)
    parent_actions = [a for _, a in par]
    parent_flows = np.exp(parent_out[np.arange(len(par)), parent_actions])
    inflow = float(parent_flows.sum())

    terminal = is_terminal(s_prime, spec)
    if terminal:
        outflow = 0.0
    else:
        legal = allowed_actions(s_prime, spec)
        child_out, child_cache = nn.forward_with_cache(model.net, s_prime.as_float_vector())
        child_flows = np.exp(child_out[legal])
        outflow = float(child_flows.sum())

    residual = inflow - float(reward) - outflow
    loss = residual * residual

    # d loss / d logF = 2 r * F at parent slots, -2 r * F at child slots
    parent_grad_out = np.zeros_like(parent_out)
    parent_grad_out[np.arange(len(par)), parent_actions] = 2.0 * residual * parent_flows
    grads, _ = nn.backward_from_cache(model.net, parent_cache, parent_grad_out)
    if not terminal:
        child_grad_out = np.zeros_like(child_out)
        child_grad_out[legal] = -2.0 * residual * child_flows
        child_grads, _ = nn.backward_from_cache(model.net, child_cache, child_grad_out)
        nn.accumulate(grads, child_grads)
    return loss, grads


@dataclass
class FmTrainResult:
    model: FlowModel
    losses: np.ndarray  # one entry per gradient step (episodes * k)


def train_gflow_ss(spec: MdpSpec, reward_fn: RewardFn, cfg: FmTrainConfig) -> FmTrainResult:
    """Run cfg.episodes root-to-leaf episodes of flow-matching training.

    Per transition: with probability zeta take a uniformly random legal
    action, otherwise the argmax-flow action (ties to the lowest index);
    then one Adam step on the loss at the new state, with reward 0 at
    intermediates and reward_fn(x) at the terminal.
    """
    net_seed, explore_seed = (int(s) for s in np.random.SeedSequence(cfg.seed).generate_state(2))
    model = init_flow_model(spec, cfg, net_seed)
    rng = np.random.default_rng(explore_seed)
    adam = nn.init_adam(model.net, cfg.eta)

    losses = np.empty(cfg.episodes * spec.k)
    step = 0
    for _ in range(cfg.episodes):
        s = root(spec)
        for _ in range(spec.k):
            legal = allowed_actions(s, spec)
            if rng.random() < cfg.zeta:
                a = legal[rng.integers(len(legal))]
            else:
                out = nn.forward(model.net, s.as_float_vector())
                a = legal[int(np.argmax(out[legal]))]
            s = apply_action(s, a, spec)
            reward = reward_fn(s) if is_terminal(s, spec) else 0.0
            loss, grads = fm_loss(model, s, reward)
            nn.adam_step(model.net, grads, adam)
            losses[step] = loss
            step += 1
    return FmTrainResult(model=model, losses=losses)


def _rank_action(values: np.ndarray, legal: list[Action], j: int) -> Action:
    """Action with the j-th largest value; ties break to the lower index."""
    if j < 1 or j > len(legal):
        raise RankOutOfRange(f"rank {j} with {len(legal)} legal actions")
    order = sorted(range(len(legal)), key=lambda i: (-values[i], legal[i]))
    return legal[order[j - 1]]


def rollout_rank(model: FlowModel, j: int) -> Trajectory:
    """Deterministic rollout taking the j-th best flow action at every state."""
    spec = model.spec
    s = root(spec)
    states = [s]
    actions: list[Action] = []
    while not is_terminal(s, spec):
        legal, logs = _legal_log_flows(model, s)
        a = _rank_action(logs, legal, j)
        s = apply_action(s, a, spec)
        states.append(s)
        actions.append(a)
    return Trajectory(states=tuple(states), actions=tuple(actions))


def sample_terminal_masks(model: FlowModel, n_samples: int, seed: int,
                          chunk: int = 20000) -> np.ndarray:
    """Sample terminal masks under the flow-proportional sampling policy.

    Vectorized: all rollouts advance one level at a time with batched
    network evaluation. Returns an int64 array of n_samples masks.
    """
    spec = model.spec
    rng = np.random.default_rng(seed)
    masks = np.zeros(n_samples, dtype=np.int64)
    slot = np.arange(spec.m, dtype=np.int64)
    for _ in range(spec.k):
        for lo in range(0, n_samples, chunk):
            part = masks[lo:lo + chunk]
            bits = ((part[:, None] >> slot[None, :]) & 1).astype(np.float64)
            logits = nn.forward(model.net, bits)
            logits = np.where(bits > 0.5, -np.inf, logits)
            logits -= logits.max(axis=1, keepdims=True)
            probs = np.exp(logits)
            cum = probs.cumsum(axis=1)
            cum /= cum[:, -1:]  # exact 1.0 tail so every draw lands on a legal slot
            u = rng.random(len(part))
            choice = (cum < u[:, None]).sum(axis=1)
            masks[lo:lo + chunk] = part | (np.int64(1) << choice)
    return masks
