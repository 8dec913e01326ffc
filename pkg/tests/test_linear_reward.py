"""Measurement-instance generation, determinant, and sigmoid reward tests."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gflowss.errors import SingularSubset
from gflowss.linear_reward import (LinearInstance, RewardConfig, gen_instance,
                                   load_instance, logdet_objective,
                                   make_sigmoid_det_reward, save_instance,
                                   sigmoid_reward, subset_det)
from gflowss.mdp import MdpSpec, state_from_indices
from gflowss.oracles import brute_force_best, level_states


def test_gen_instance_reproducible():
    a = gen_instance(100, 5, seed=1)
    b = gen_instance(100, 5, seed=1)
    assert a.vectors.shape == (100, 5)
    assert np.array_equal(a.vectors, b.vectors)


def test_gen_instance_seeds_differ():
    a = gen_instance(10, 3, seed=1)
    b = gen_instance(10, 3, seed=2)
    assert not np.array_equal(a.vectors, b.vectors)


def test_gen_instance_mean_near_zero():
    inst = gen_instance(2000, 5, seed=0)
    assert abs(inst.vectors.mean()) < 0.05


def test_subset_det_identity_case():
    vectors = np.array([[1.0, 0.0], [0.0, 1.0], [2.0, 0.0]])
    inst = LinearInstance(vectors=vectors, m=3, n=2)
    assert subset_det(inst, state_from_indices([0, 1], 3)) == pytest.approx(1.0)


def test_subset_det_rank_deficient_is_zero():
    vectors = np.array([[1.0, 0.0], [2.0, 0.0], [0.0, 1.0]])
    inst = LinearInstance(vectors=vectors, m=3, n=2)
    assert subset_det(inst, state_from_indices([0, 1], 3)) == 0.0


def cofactor_det(mat):
    n = mat.shape[0]
    if n == 1:
        return mat[0, 0]
    total = 0.0
    for j in range(n):
        minor = np.delete(np.delete(mat, 0, axis=0), j, axis=1)
        total += (-1) ** j * mat[0, j] * cofactor_det(minor)
    return total


def test_subset_det_matches_cofactor_expansion():
    inst = gen_instance(8, 3, seed=5)
    x = state_from_indices([1, 3, 4, 6], 8)
    rows = inst.vectors[list(x.indices())]
    want = cofactor_det(rows.T @ rows)
    assert subset_det(inst, x) == pytest.approx(want, rel=1e-9)


def test_sigmoid_reward_values():
    cfg = RewardConfig(c=1000.0)
    assert sigmoid_reward(0.0, cfg) == pytest.approx(500.0)
    assert sigmoid_reward(1.0, cfg) == pytest.approx(731.0586, abs=1e-4)
    assert sigmoid_reward(60.0, cfg) == pytest.approx(1000.0)
    assert sigmoid_reward(-800.0, cfg) == pytest.approx(0.0, abs=1e-12)


# strictness is only observable where sigmoid'(d) * gap clears float eps
@given(st.floats(min_value=-15, max_value=15),
       st.floats(min_value=1e-4, max_value=10.0))
def test_sigmoid_reward_strictly_increasing(d, gap):
    cfg = RewardConfig(c=10.0)
    assert sigmoid_reward(d, cfg) < sigmoid_reward(d + gap, cfg)


def test_logdet_objective_values():
    vectors = np.array([[1.0, 0.0], [0.0, 1.0], [math.e, 0.0]])
    inst = LinearInstance(vectors=vectors, m=3, n=2)
    assert logdet_objective(inst, state_from_indices([0, 1], 3)) == pytest.approx(0.0)
    assert logdet_objective(inst, state_from_indices([1, 2], 3)) == pytest.approx(2.0)
    with pytest.raises(SingularSubset):
        logdet_objective(inst, state_from_indices([0, 2], 3))


def test_logdet_brute_force_argmax_consistent():
    inst = gen_instance(10, 3, seed=9)
    spec = MdpSpec(m=10, k=4)
    bf_det = brute_force_best(spec, lambda x: subset_det(inst, x))
    best_by_logdet = max(
        (x for x in level_states(spec, 4)), key=lambda x: logdet_objective(inst, x)
    )
    assert bf_det.best == best_by_logdet
    assert logdet_objective(inst, bf_det.best) == pytest.approx(math.log(bf_det.best_value))


def test_argmax_reward_equals_argmax_det():
    inst = gen_instance(8, 3, seed=4)
    spec = MdpSpec(m=8, k=3)
    reward = make_sigmoid_det_reward(inst, RewardConfig(c=1000.0, pre_scale=0.05))
    bf_reward = brute_force_best(spec, reward)
    bf_det = brute_force_best(spec, lambda x: subset_det(inst, x))
    assert bf_reward.best == bf_det.best


def test_permutation_equivariance():
    rng = np.random.default_rng(8)
    inst = gen_instance(7, 3, seed=2)
    perm = rng.permutation(7)
    permuted = LinearInstance(vectors=inst.vectors[perm], m=7, n=3)
    x = state_from_indices([0, 2, 5, 6], 7)
    mapped = state_from_indices(sorted(int(np.where(perm == i)[0][0]) for i in x.indices()), 7)
    assert subset_det(inst, x) == pytest.approx(subset_det(permuted, mapped), rel=1e-9)


def shifted_logdet(inst, indices, eps=1e-12):
    rows = inst.vectors[list(indices)]
    mat = rows.T @ rows if len(indices) else np.zeros((inst.n, inst.n))
    sign, val = np.linalg.slogdet(mat + eps * np.eye(inst.n))
    return val


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=0, max_value=10**6))
def test_monotone_under_shifted_objective(seed):
    inst = gen_instance(6, 2, seed=seed)
    rng = np.random.default_rng(seed + 1)
    small = sorted(rng.choice(6, size=2, replace=False).tolist())
    extra = [i for i in range(6) if i not in small][0]
    big = sorted(small + [extra])
    assert shifted_logdet(inst, big) >= shifted_logdet(inst, small) - 1e-9


@settings(max_examples=20, deadline=None)
@given(st.integers(min_value=0, max_value=10**6))
def test_submodular_marginal_gains(seed):
    inst = gen_instance(6, 2, seed=seed)
    s = [0]
    t = [0, 1, 2]
    add = 4
    gain_small = shifted_logdet(inst, s + [add]) - shifted_logdet(inst, s)
    gain_big = shifted_logdet(inst, t + [add]) - shifted_logdet(inst, t)
    assert gain_small >= gain_big - 1e-7


def test_instance_file_round_trip(tmp_path):
    inst = gen_instance(12, 4, seed=33)
    path = tmp_path / "inst.json"
    save_instance(inst, path)
    back = load_instance(path)
    assert back.m == 12 and back.n == 4 and back.seed == 33
    assert np.array_equal(back.vectors, inst.vectors)
