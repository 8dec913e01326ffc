"""Subset-MDP state, transition, and enumeration tests."""

from math import comb

import pytest
from hypothesis import given
from hypothesis import strategies as st

from gflowss.errors import AlreadyActive, AtTerminal
from gflowss.mdp import (MdpSpec, SubsetState, Trajectory, allowed_actions,
                         apply_action, from_bits, is_terminal, parents, root,
                         state_from_indices, state_from_mask, to_bits)


def test_root_is_all_zero():
    spec = MdpSpec(m=3, k=2)
    r = root(spec)
    assert r.mask == 0 and r.ones == 0
    assert parents(r) == []


def test_root_large():
    r = root(MdpSpec(m=100, k=15))
    assert r.ones == 0 and r.m == 100
    assert to_bits(r) == "0" * 100


def test_apply_action_sets_single_bit():
    spec = MdpSpec(m=4, k=3)
    s = apply_action(root(spec), 2, spec)
    assert to_bits(s) == "0010"
    s2 = apply_action(state_from_indices([0, 2], 4), 3, spec)
    assert to_bits(s2) == "1011"


def test_apply_action_errors():
    spec = MdpSpec(m=4, k=2)
    s = state_from_indices([0, 2], 4)
    with pytest.raises(AtTerminal):
        apply_action(s, 1, spec)
    spec3 = MdpSpec(m=4, k=3)
    with pytest.raises(AlreadyActive):
        apply_action(s, 0, spec3)


def test_allowed_actions():
    spec = MdpSpec(m=3, k=2)
    assert allowed_actions(state_from_indices([0], 3), spec) == [1, 2]
    assert allowed_actions(state_from_indices([0, 1], 3), spec) == []
    assert allowed_actions(root(spec), spec) == [0, 1, 2]


def test_parents_examples():
    got = parents(state_from_indices([0, 1], 3))
    assert got == [(state_from_indices([1], 3), 0), (state_from_indices([0], 3), 1)]
    assert parents(state_from_indices([0], 3)) == [(state_from_mask(0, 3), 0)]


def test_is_terminal():
    spec = MdpSpec(m=3, k=2)
    assert is_terminal(state_from_indices([0, 1], 3), spec)
    assert not is_terminal(state_from_indices([0], 3), spec)
    assert not is_terminal(root(spec), spec)


def test_state_identity_is_mask_only():
    a = apply_action(apply_action(root(MdpSpec(m=4, k=2)), 0, MdpSpec(m=4, k=2)), 3, MdpSpec(m=4, k=2))
    b = apply_action(apply_action(root(MdpSpec(m=4, k=2)), 3, MdpSpec(m=4, k=2)), 0, MdpSpec(m=4, k=2))
    assert a == b and hash(a) == hash(b)


def test_state_validates_cached_count():
    with pytest.raises(ValueError):
        SubsetState(mask=0b11, m=4, ones=1)
    with pytest.raises(ValueError):
        SubsetState(mask=0b10000, m=4, ones=1)


@given(st.integers(min_value=2, max_value=12), st.data())
def test_parent_child_round_trip(m, data):
    k = data.draw(st.integers(min_value=1, max_value=m - 1))
    spec = MdpSpec(m=m, k=k)
    mask = data.draw(st.integers(min_value=0, max_value=2**m - 1))
    s = state_from_mask(mask, m)
    if s.ones == 0 or s.ones > k:
        return
    ps = parents(s)
    assert len(ps) == s.ones
    for parent, a in ps:
        assert apply_action(parent, a, spec) == s


@given(st.integers(min_value=2, max_value=12), st.data())
def test_allowed_action_count(m, data):
    k = data.draw(st.integers(min_value=1, max_value=m - 1))
    spec = MdpSpec(m=m, k=k)
    mask = data.draw(st.integers(min_value=0, max_value=2**m - 1))
    s = state_from_mask(mask, m)
    if s.ones >= k:
        return
    acts = allowed_actions(s, spec)
    assert len(acts) == m - s.ones
    assert acts == sorted(acts)


def test_reachable_state_counts():
    for m, k in ((5, 2), (6, 3), (8, 4), (12, 3)):
        spec = MdpSpec(m=m, k=k)
        seen = {0}
        frontier = [root(spec)]
        while frontier:
            nxt = []
            for s in frontier:
                for a in allowed_actions(s, spec):
                    child = apply_action(s, a, spec)
                    if child.mask not in seen:
                        seen.add(child.mask)
                        nxt.append(child)
            frontier = nxt
        assert len(seen) == sum(comb(m, j) for j in range(k + 1))
        terminals = [mask for mask in seen if mask.bit_count() == k]
        assert len(terminals) == comb(m, k) == spec.terminal_count


def test_graded_paths():
    spec = MdpSpec(m=5, k=3)
    s = root(spec)
    steps = 0
    while not is_terminal(s, spec):
        s = apply_action(s, allowed_actions(s, spec)[0], spec)
        steps += 1
    assert steps == spec.k


def test_trajectory_validation():
    spec = MdpSpec(m=3, k=2)
    s0 = root(spec)
    s1 = apply_action(s0, 1, spec)
    s2 = apply_action(s1, 2, spec)
    t = Trajectory(states=(s0, s1, s2), actions=(1, 2))
    assert t.terminal == s2
    with pytest.raises(ValueError):
        Trajectory(states=(s0, s1, s2), actions=(2, 1))
    with pytest.raises(ValueError):
        Trajectory(states=(s1, s2), actions=(2,))


def test_bits_round_trip():
    s = state_from_indices([0, 3, 4], 6)
    assert to_bits(s) == "100110"
    assert from_bits("100110") == s
    with pytest.raises(ValueError):
        from_bits("102")


def test_spec_validation():
    with pytest.raises(ValueError):
        MdpSpec(m=1, k=0)
    with pytest.raises(ValueError):
        MdpSpec(m=5, k=5)
    with pytest.raises(ValueError):
        MdpSpec(m=5, k=0)
