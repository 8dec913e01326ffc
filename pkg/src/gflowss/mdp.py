"""Deterministic subset-construction MDP.

States are bit masks over m sensor slots; each action activates one
inactive slot. The reachable graph is a graded DAG rooted at the empty
mask whose terminal states are exactly the k-element subsets. State
identity is the mask alone, so action orderings that build the same
subset merge into one node.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .errors import AlreadyActive, AtTerminal

# A sensor slot index in [0, m).
Action = int


@dataclass(frozen=True)
class MdpSpec:
    """Problem size: activate k of m sensor slots."""

    m: int
    k: int

    def __post_init__(self) -> None:
        if self.m < 2:
            raise ValueError(f"need at least 2 sensor slots, got m={self.m}")
        if not 1 <= self.k < self.m:
            raise ValueError(f"need 1 <= k < m, got k={self.k}, m={self.m}")

    @property
    def terminal_count(self) -> int:
        return comb(self.m, self.k)


@dataclass(frozen=True)
class SubsetState:
    """Bit mask over sensor slots (bit i set means slot i active).

    `ones` caches the popcount; it is validated on construction so a
    state can never carry an inconsistent count.
    """

    mask: int
    m: int
    ones: int

    def __post_init__(self) -> None:
        if self.mask < 0 or self.mask >> self.m:
            raise ValueError(f"mask {self.mask:#x} does not fit in {self.m} slots")
        if self.ones != self.mask.bit_count():
            raise ValueError("cached popcount disagrees with mask")

    def indices(self) -> tuple[int, ...]:
        """Active slot indices in ascending order."""
        return tuple(i for i in range(self.m) if self.mask >> i & 1)

    def as_float_vector(self) -> np.ndarray:
        """0/1 incidence vector (float64, length m) for network input."""
        return np.array([(self.mask >> i) & 1 for i in range(self.m)], dtype=np.float64)


def state_from_mask(mask: int, m: int) -> SubsetState:
    return SubsetState(mask=mask, m=m, ones=mask.bit_count())


def state_from_indices(indices, m: int) -> SubsetState:
    mask = 0
    for i in indices:
        mask |= 1 << i
    return state_from_mask(mask, m)


def root(spec: MdpSpec) -> SubsetState:
    """The all-inactive state every trajectory starts from."""
    return SubsetState(mask=0, m=spec.m, ones=0)


def is_terminal(s: SubsetState, spec: MdpSpec) -> bool:
    return s.ones == spec.k


def apply_action(s: SubsetState, a: Action, spec: MdpSpec) -> SubsetState:
    """Activate slot `a`, producing the successor state."""
    if s.ones >= spec.k:
        raise AtTerminal(f"state already holds k={spec.k} sensors")
    if not 0 <= a < spec.m:
        raise ValueError(f"action {a} outside [0, {spec.m})")
    if s.mask >> a & 1:
        raise AlreadyActive(f"slot {a} already active")
    return SubsetState(mask=s.mask | 1 << a, m=s.m, ones=s.ones + 1)


def allowed_actions(s: SubsetState, spec: MdpSpec) -> list[Action]:
    """Inactive slot indices, ascending; empty at terminal states."""
    if s.ones >= spec.k:
        return []
    return [i for i in range(spec.m) if not s.mask >> i & 1]


def parents(s: SubsetState) -> list[tuple[SubsetState, Action]]:
    """All (parent, action) pairs whose transition produces `s`.

    One parent per active bit: clearing that bit gives the parent and
    the bit index is the action. Emitted in ascending action order.
    """
    out = []
    for i in range(s.m):
        if s.mask >> i & 1:
            out.append((SubsetState(mask=s.mask & ~(1 << i), m=s.m, ones=s.ones - 1), i))
    return out


@dataclass(frozen=True)
class Trajectory:
    """A root-to-leaf path: k+1 states linked by k activate-slot actions."""

    states: tuple[SubsetState, ...]
    actions: tuple[Action, ...]

    def __post_init__(self) -> None:
        if len(self.states) != len(self.actions) + 1:
            raise ValueError("need exactly one more state than actions")
        if self.states[0].ones != 0:
            raise ValueError("trajectory must start at the root")
        for t, a in enumerate(self.actions):
            prev, nxt = self.states[t], self.states[t + 1]
            if nxt.mask != prev.mask | 1 << a or prev.mask >> a & 1:
                raise ValueError(f"transition {t} does not apply action {a}")

    @property
    def terminal(self) -> SubsetState:
        return self.states[-1]


def to_bits(s: SubsetState) -> str:
    """0/1 string of length m, slot 0 first (the log serialization)."""
    return "".join("1" if s.mask >> i & 1 else "0" for i in range(s.m))


def from_bits(bits: str) -> SubsetState:
    mask = 0
    for i, ch in enumerate(bits):
        if ch == "1":
            mask |= 1 << i
        elif ch != "0":
            raise ValueError(f"bit string must be 0/1, got {ch!r}")
    return state_from_mask(mask, len(bits))
