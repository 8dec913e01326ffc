"""ISAC antenna-selection objective: CRB, communication rate, and the
preference-weighted reward with an inner beamformer optimization.

The channel is complex Gaussian; a selection matrix picks N_s of N_t
transmit antennas; the beamformer F is optimized per (subset, preference)
by ascent along the conjugate Wirtinger gradient, renormalized to unit
Frobenius norm after every step. All complex work is numpy complex128.
"""

from __future__ import annotations

import json
import math
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import SingularGram, WrongCardinality
from .mdp import SubsetState
from .trajectory_balance import Preference

COND_LIMIT = 1e14
HERM_TOL = 1e-10


@dataclass(frozen=True)
class IsacInstance:
    """Complex N_s x N_t channel plus the array dimensions."""

    H: np.ndarray
    n_t: int
    n_r: int
    n_s: int
    L: int
    seed: int = 0

    def __post_init__(self) -> None:
        if self.H.shape != (self.n_s, self.n_t):
            raise ValueError(f"channel shape {self.H.shape} != ({self.n_s}, {self.n_t})")
        if self.n_s > self.n_t:
            raise ValueError("need n_s <= n_t")
        if self.L < 1:
            raise ValueError("need L >= 1")
        if not np.isfinite(self.H.view(np.float64)).all():
            raise ValueError("channel entries must be finite")


@dataclass(frozen=True)
class SelectionMatrix:
    """Ordered distinct selected indices; row i has its 1 at rows[i]."""

    rows: tuple[int, ...]
    n_t: int

    def __post_init__(self) -> None:
        if len(set(self.rows)) != len(self.rows):
            raise ValueError("selected indices must be distinct")
        if any(not 0 <= r < self.n_t for r in self.rows):
            raise ValueError("selected index out of range")

    def as_matrix(self) -> np.ndarray:
        s = np.zeros((len(self.rows), self.n_t))
        for i, r in enumerate(self.rows):
            s[i, r] = 1.0
        return s

    def mask(self) -> int:
        out = 0
        for r in self.rows:
            out |= 1 << r
        return out


@dataclass(frozen=True)
class Beamformer:
    """Complex N_t x N_s precoder, unit Frobenius norm after projection."""

    F: np.ndarray


@dataclass(frozen=True)
class IsacRewardConfig:
    c_scale: float = 20000.0
    n_wir: int = 50
    inner_lr: float = 0.1

    def __post_init__(self) -> None:
        if self.c_scale <= 0:
            raise ValueError("c_scale must be positive")
        if self.n_wir < 0:
            raise ValueError("n_wir must be >= 0")
        if self.inner_lr <= 0:
            raise ValueError("inner_lr must be positive")


def gen_channel(n_t: int, n_r: int, n_s: int, L: int, seed: int) -> IsacInstance:
    """Standard complex normal channel: real and imaginary parts each
    Normal(0, 1/2) so E|H_ij|^2 = 1. Deterministic per seed."""
    rng = np.random.default_rng(seed)
    h = (rng.standard_normal((n_s, n_t)) + 1j * rng.standard_normal((n_s, n_t)))
    return IsacInstance(H=h / math.sqrt(2.0), n_t=n_t, n_r=n_r, n_s=n_s, L=L, seed=seed)


def state_to_selection(x: SubsetState, inst: IsacInstance) -> SelectionMatrix:
    """Selection matrix of a terminal state; indices ascend."""
    if x.ones != inst.n_s:
        raise WrongCardinality(f"state holds {x.ones} antennas, need {inst.n_s}")
    return SelectionMatrix(rows=x.indices(), n_t=inst.n_t)


def _selected(F: np.ndarray, S: SelectionMatrix) -> np.ndarray:
    """S F: the selected rows of F, in selection order."""
    return F[list(S.rows), :]


def _herm_inverse(g: np.ndarray) -> np.ndarray:
    """Inverse of a Hermitian PSD matrix via Cholesky, with condition
    monitoring through the Hermitian eigenvalues."""
    g = (g + g.conj().T) / 2.0
    ev = np.linalg.eigvalsh(g)
    if ev[0] <= 0.0 or ev[-1] / ev[0] > COND_LIMIT:
        raise SingularGram(f"eigenvalue range [{ev[0]:.3e}, {ev[-1]:.3e}]")
    try:
        chol = np.linalg.cholesky(g)
    except np.linalg.LinAlgError as exc:
        raise SingularGram("Cholesky factorization failed") from exc
    inv_chol = np.linalg.solve(chol, np.eye(g.shape[0], dtype=complex))
    return inv_chol.conj().T @ inv_chol


def crb(S: SelectionMatrix, F: Beamformer, inst: IsacInstance) -> float:
    """(N_r / L) trace of the inverse selected-beam Gram matrix."""
    u = _selected(F.F, S)
    gram = u @ u.conj().T
    asym = np.abs(gram - gram.conj().T).max()
    if asym > HERM_TOL:
        raise SingularGram(f"Gram Hermitian asymmetry {asym:.3e}")
    g_inv = _herm_inverse(gram)
    value = (inst.n_r / inst.L) * g_inv.trace()
    return float(value.real)


def comm_rate(S: SelectionMatrix, F: Beamformer, inst: IsacInstance) -> float:
    """Base-2 log det of I + (1/N_s) (H P F)(H P F)^H with P the diagonal
    0/1 selector; the determinant is taken over the N_s x N_s identity."""
    b = inst.H[:, list(S.rows)] @ _selected(F.F, S)
    mat = np.eye(inst.n_s, dtype=complex) + b @ b.conj().T / inst.n_s
    mat = (mat + mat.conj().T) / 2.0
    sign, logdet = np.linalg.slogdet(mat)
    return float(logdet / math.log(2.0))


def dfrc_objective(S: SelectionMatrix, F: Beamformer, pref: Preference,
                   inst: IsacInstance, cfg: IsacRewardConfig) -> float:
    """n * c_scale / CRB + (1 - n) * rate."""
    return (pref.n * cfg.c_scale / crb(S, F, inst)
            + (1.0 - pref.n) * comm_rate(S, F, inst))


def wirtinger_gradient(S: SelectionMatrix, F: Beamformer, pref: Preference,
                       inst: IsacInstance, cfg: IsacRewardConfig) -> np.ndarray:
    """Gradient of the objective with respect to conj(F), shape (N_t, N_s).

    Rows outside the selection are zero: both objective terms see F only
    through its selected rows.
    """
    rows = list(S.rows)
    u = _selected(F.F, S)  # S F
    gram = u @ u.conj().T
    g_inv = _herm_inverse(gram)
    crb_val = (inst.n_r / inst.L) * g_inv.trace().real

    grad = np.zeros_like(F.F)
    # d(1/CRB)/dF* = (N_r / L) / CRB^2 * S^H G^{-2} S F
    coeff = pref.n * cfg.c_scale * (inst.n_r / inst.L) / crb_val**2
    grad[rows, :] += coeff * (g_inv @ g_inv @ u)

    # d rate / dF* = P H^H M^{-1} (H P F) / (N_s ln 2)
    h_sel = inst.H[:, rows]
    b = h_sel @ u
    m = np.eye(inst.n_s, dtype=complex) + b @ b.conj().T / inst.n_s
    m_inv = _herm_inverse(m)
    grad[rows, :] += ((1.0 - pref.n) / (inst.n_s * math.log(2.0))) * (
        h_sel.conj().T @ m_inv @ b)
    return grad


def _seeded_beamformer(inst: IsacInstance, S: SelectionMatrix, retry: int) -> Beamformer:
    entropy = [inst.seed, retry, *S.rows]
    rng = np.random.default_rng(np.random.SeedSequence(entropy))
    f = rng.standard_normal((inst.n_t, inst.n_s)) + 1j * rng.standard_normal(
        (inst.n_t, inst.n_s))
    return Beamformer(F=f / np.linalg.norm(f))


def wirtinger_ascent(S: SelectionMatrix, inst: IsacInstance, pref: Preference,
                     cfg: IsacRewardConfig) -> tuple[Beamformer, np.ndarray]:
    """Maximize the objective over unit-Frobenius-norm beamformers.

    Starts from a seeded complex Gaussian init (seed derived from the
    instance seed and the selected rows), takes cfg.n_wir steps along the
    unit-norm conjugate Wirtinger gradient, renormalizes after each step,
    and returns the best iterate with the best-so-far objective trace.
    Retries a singular start up to 3 times with fresh seeds.
    """
    last_exc: SingularGram | None = None
    for retry in range(4):
        f = _seeded_beamformer(inst, S, retry)
        try:
            best_val = dfrc_objective(S, f, pref, inst, cfg)
        except SingularGram as exc:
            last_exc = exc
            continue
        best_f = f
        trace = [best_val]
        try:
            cur = f
            for _ in range(cfg.n_wir):
                g = wirtinger_gradient(S, cur, pref, inst, cfg)
                g_norm = np.linalg.norm(g)
                if g_norm == 0.0:
                    trace.append(best_val)
                    continue
                nxt = cur.F + cfg.inner_lr * g / g_norm
                nxt = nxt / np.linalg.norm(nxt)
                cur = Beamformer(F=nxt)
                val = dfrc_objective(S, cur, pref, inst, cfg)
                if val > best_val:
                    best_val, best_f = val, cur
                trace.append(best_val)
        except SingularGram as exc:
            last_exc = exc
            continue
        return best_f, np.array(trace)
    raise SingularGram(f"ascent failed after retries: {last_exc}")


def isac_reward(x: SubsetState, pref: Preference, inst: IsacInstance,
                cfg: IsacRewardConfig) -> float:
    """Objective at the ascent optimum F*; positive and reproducible."""
    S = state_to_selection(x, inst)
    f_star, _ = wirtinger_ascent(S, inst, pref, cfg)
    return dfrc_objective(S, f_star, pref, inst, cfg)


@dataclass
class RewardBreakdown:
    crb: float
    rate: float
    reward: float


@dataclass
class IsacRewardCache:
    """Reward memo keyed by (mask, n); safe for concurrent readers with
    exclusive insertion."""

    entries: dict[tuple[int, float], RewardBreakdown] = field(default_factory=dict)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def dump_csv(self, path: str | Path) -> None:
        lines = ["mask,n,crb,rate,reward"]
        for (mask, n), e in sorted(self.entries.items()):
            lines.append(f"{mask},{n!r},{e.crb!r},{e.rate!r},{e.reward!r}")
        Path(path).write_text("\n".join(lines) + "\n")


def make_isac_reward(inst: IsacInstance, cfg: IsacRewardConfig
                     ) -> tuple[Callable[[SubsetState, float], float], IsacRewardCache]:
    """Conditioned reward function with a (mask, n)-keyed cache; the inner
    ascent for a revisited terminal never reruns."""
    cache = IsacRewardCache()

    def reward(x: SubsetState, n: float) -> float:
        key = (x.mask, n)
        hit = cache.entries.get(key)
        if hit is not None:
            return hit.reward
        pref = Preference(n)
        S = state_to_selection(x, inst)
        f_star, _ = wirtinger_ascent(S, inst, pref, cfg)
        breakdown = RewardBreakdown(
            crb=crb(S, f_star, inst),
            rate=comm_rate(S, f_star, inst),
            reward=dfrc_objective(S, f_star, pref, inst, cfg),
        )
        with cache._lock:
            cache.entries[key] = breakdown
        return breakdown.reward

    return reward, cache


def save_instance(inst: IsacInstance, path: str | Path) -> None:
    interleaved = np.empty(2 * inst.n_s * inst.n_t)
    interleaved[0::2] = inst.H.real.ravel()
    interleaved[1::2] = inst.H.imag.ravel()
    payload = {
        "kind": "isac",
        "n_t": inst.n_t,
        "n_r": inst.n_r,
        "n_s": inst.n_s,
        "L": inst.L,
        "seed": inst.seed,
        "channel": interleaved.tolist(),  # row-major, re/im interleaved
    }
    Path(path).write_text(json.dumps(payload))


def load_instance(path: str | Path) -> IsacInstance:
    d = json.loads(Path(path).read_text())
    if d.get("kind") != "isac":
        raise ValueError(f"not an ISAC instance file: kind={d.get('kind')!r}")
    n_t, n_s = int(d["n_t"]), int(d["n_s"])
    flat = np.array(d["channel"], dtype=np.float64)
    h = (flat[0::2] + 1j * flat[1::2]).reshape(n_s, n_t)
    return IsacInstance(H=h, n_t=n_t, n_r=int(d["n_r"]), n_s=n_s,
                        L=int(d["L"]), seed=int(d["seed"]))
