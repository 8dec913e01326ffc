"""Log-determinant objective for linear-measurement sensor selection.

An instance is m measurement vectors in R^n; the value of a subset is the
determinant of the sum of outer products of the selected vectors. Rewards
compress that determinant through a scaled sigmoid so they stay positive
and bounded.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import SingularSubset
from .mdp import SubsetState

# Determinants below DET_TOL * (largest diagonal)^n count as rank-deficient.
DET_TOL = 1e-12


@dataclass(frozen=True)
class LinearInstance:
    """m measurement vectors, one per sensor slot, each in R^n."""

    vectors: np.ndarray  # shape (m, n)
    m: int
    n: int
    seed: int = 0

    def __post_init__(self) -> None:
        if self.vectors.shape != (self.m, self.n):
            raise ValueError(f"vectors shape {self.vectors.shape} != ({self.m}, {self.n})")
        if self.m < 2 or self.n < 1:
            raise ValueError("need m >= 2 and n >= 1")
        if not np.isfinite(self.vectors).all():
            raise ValueError("measurement vectors must be finite")


@dataclass(frozen=True)
class RewardConfig:
    """Sigmoid reward scaling: reward = c * sigmoid(pre_scale * det).

    pre_scale defaults to 1 (the faithful form); desk-scale experiments
    may shrink it so the sigmoid does not saturate on large determinants.
    """

    c: float = 1000.0
    pre_scale: float = 1.0

    def __post_init__(self) -> None:
        if self.c <= 0:
            raise ValueError("reward scale c must be positive")
        if self.pre_scale <= 0:
            raise ValueError("pre_scale must be positive")


def gen_instance(m: int, n: int, seed: int) -> LinearInstance:
    """i.i.d. standard-normal measurement vectors, reproducible per seed."""
    if m < 2 or n < 1:
        raise ValueError("need m >= 2 and n >= 1")
    rng = np.random.default_rng(seed)
    return LinearInstance(vectors=rng.standard_normal((m, n)), m=m, n=n, seed=seed)


def information_matrix(inst: LinearInstance, x: SubsetState) -> np.ndarray:
    """Sum of outer products a_i a_i^T over the selected slots."""
    rows = inst.vectors[list(x.indices())]
    mat = rows.T @ rows
    return (mat + mat.T) / 2.0


def subset_det(inst: LinearInstance, x: SubsetState) -> float:
    """Determinant of the selected information matrix; exactly 0 when the
    matrix is numerically rank-deficient."""
    if x.ones < 1:
        raise ValueError("need at least one selected sensor")
    mat = information_matrix(inst, x)
    det = float(np.linalg.det(mat))
    largest_diag = float(np.max(np.diag(mat)))
    if largest_diag <= 0.0:
        return 0.0
    if det < DET_TOL * largest_diag**inst.n:
        return 0.0
    return det


def sigmoid_reward(d: float, cfg: RewardConfig) -> float:
    """c * sigmoid(d), strictly increasing in d and bounded in (0, c)."""
    if d >= 0:
        return cfg.c / (1.0 + math.exp(-d))
    e = math.exp(d)
    return cfg.c * e / (1.0 + e)


def logdet_objective(inst: LinearInstance, x: SubsetState) -> float:
    """Natural log of subset_det; the axis the comparisons are plotted on."""
    det = subset_det(inst, x)
    if det <= 0.0:
        raise SingularSubset(f"subset {x.indices()} has rank-deficient information matrix")
    return math.log(det)


def make_sigmoid_det_reward(inst: LinearInstance, cfg: RewardConfig) -> Callable[[SubsetState], float]:
    """Terminal reward function c * sigmoid(pre_scale * det(x))."""

    def reward(x: SubsetState) -> float:
        return sigmoid_reward(cfg.pre_scale * subset_det(inst, x), cfg)

    return reward


def calibrate_pre_scale(inst: LinearInstance, k: int, seed: int, samples: int = 64,
                        target: float = 2.0) -> float:
    """Pick pre_scale so the median random-subset determinant maps to
    sigmoid(target); keeps desk-scale rewards off the sigmoid plateau."""
    rng = np.random.default_rng(seed)
    dets = []
    for _ in range(samples):
        idx = rng.choice(inst.m, size=k, replace=False)
        mask = 0
        for i in idx:
            mask |= 1 << int(i)
        dets.append(subset_det(inst, SubsetState(mask=mask, m=inst.m, ones=k)))
    med = float(np.median(dets))
    if med <= 0.0:
        return 1.0
    return target / med


def save_instance(inst: LinearInstance, path: str | Path) -> None:
    payload = {
        "kind": "linear",
        "m": inst.m,
        "n": inst.n,
        "seed": inst.seed,
        "vectors": inst.vectors.ravel().tolist(),  # row-major
    }
    Path(path).write_text(json.dumps(payload))


def load_instance(path: str | Path) -> LinearInstance:
    d = json.loads(Path(path).read_text())
    if d.get("kind") != "linear":
        raise ValueError(f"not a linear instance file: kind={d.get('kind')!r}")
    m, n = int(d["m"]), int(d["n"])
    vectors = np.array(d["vectors"], dtype=np.float64).reshape(m, n)
    return LinearInstance(vectors=vectors, m=m, n=n, seed=int(d["seed"]))
