"""Published analytical baselines for the log-det selection problem:
greedy submodular selection, and the convex relaxation solved by
projected gradient ascent with top-k rounding."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SingularMatrix
from .linear_reward import LinearInstance
from .mdp import SubsetState, state_from_indices

PROJECTION_TOL = 1e-10


@dataclass(frozen=True)
class GreedyConfig:
    """Diagonal regularizer keeping the greedy objective monotone submodular."""

    epsilon: float = 1e-12

    def __post_init__(self) -> None:
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")


def greedy_select(inst: LinearInstance, k: int, cfg: GreedyConfig = GreedyConfig()) -> SubsetState:
    """k rounds of adding the index that maximizes logdet(sum + eps*I);
    ties break to the lowest index."""
    if not 1 <= k < inst.m:
        raise ValueError(f"need 1 <= k < m, got k={k}")
    chosen: list[int] = []
    mat = cfg.epsilon * np.eye(inst.n)
    remaining = list(range(inst.m))
    for _ in range(k):
        best_i, best_val = -1, -np.inf
        for i in remaining:
            a = inst.vectors[i]
            sign, logdet = np.linalg.slogdet(mat + np.outer(a, a))
            val = logdet if sign > 0 else -np.inf
            if val > best_val:
                best_i, best_val = i, val
        chosen.append(best_i)
        a = inst.vectors[best_i]
        mat = mat + np.outer(a, a)
        remaining.remove(best_i)
    return state_from_indices(chosen, inst.m)


def project_capped_simplex(v: np.ndarray, k: int) -> np.ndarray:
    """Euclidean projection onto {x : sum x = k, 0 <= x <= 1}.

    Bisection on the shift lambda in x_i = clip(v_i - lambda, 0, 1); the
    returned point meets both constraints to 1e-10.
    """
    v = np.asarray(v, dtype=np.float64)
    m = v.size
    if k > m:
        raise ValueError(f"k={k} exceeds dimension {m}")
    if k == m:
        return np.ones(m)
    lo = float(v.min()) - 1.0  # all entries clip to 1: sum = m >= k
    hi = float(v.max())  # all entries clip to 0: sum = 0 <= k
    for _ in range(200):
        mid = (lo + hi) / 2.0
        s = float(np.clip(v - mid, 0.0, 1.0).sum())
        if abs(s - k) <= PROJECTION_TOL:
            lo = hi = mid
            break
        if s > k:
            lo = mid
        else:
            hi = mid
    return np.clip(v - (lo + hi) / 2.0, 0.0, 1.0)


def relaxed_objective(inst: LinearInstance, x: np.ndarray, epsilon: float = 1e-12) -> float:
    """logdet(sum_i x_i a_i a_i^T + eps*I)."""
    mat = (inst.vectors.T * x) @ inst.vectors + epsilon * np.eye(inst.n)
    sign, logdet = np.linalg.slogdet(mat)
    if sign <= 0:
        raise SingularMatrix("regularized information matrix is singular")
    return float(logdet)


def relaxed_gradient(inst: LinearInstance, x: np.ndarray, epsilon: float = 1e-12) -> np.ndarray:
    """Gradient component i is a_i^T M^{-1} a_i with M the regularized sum."""
    mat = (inst.vectors.T * x) @ inst.vectors + epsilon * np.eye(inst.n)
    try:
        sol = np.linalg.solve(mat, inst.vectors.T)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrix("regularized information matrix is singular") from exc
    return np.einsum("ij,ji->i", inst.vectors, sol)


def relaxed_logdet_solve(inst: LinearInstance, k: int, iters: int = 1500,
                         step: float = 0.05, epsilon: float = 1e-12) -> np.ndarray:
    """Projected gradient ascent on the relaxed problem from the uniform
    start x = (k/m) * 1; returns the best iterate by objective."""
    if not 1 <= k < inst.m:
        raise ValueError(f"need 1 <= k < m, got k={k}")
    x = np.full(inst.m, k / inst.m)
    best_x = x.copy()
    best_val = relaxed_objective(inst, x, epsilon)
    for _ in range(iters):
        x = project_capped_simplex(x + step * relaxed_gradient(inst, x, epsilon), k)
        val = relaxed_objective(inst, x, epsilon)
        if val > best_val:
            best_val, best_x = val, x.copy()
    return best_x


def round_topk(x: np.ndarray, k: int) -> SubsetState:
    """Mask with 1s at the k largest entries; ties take the lower index."""
    x = np.asarray(x, dtype=np.float64)
    if k > x.size:
        raise ValueError(f"k={k} exceeds dimension {x.size}")
    order = np.argsort(-x, kind="stable")
    return state_from_indices(sorted(int(i) for i in order[:k]), x.size)
