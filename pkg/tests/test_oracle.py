import itertools

import numpy as np
import pytest

from conftest import unanimous_ensemble
from core.consensus import decode
from core.errors import OracleError
from core.oracle import (
    bell_number,
    brute_force_consensus,
    brute_force_qubo,
    enumerate_partitions,
    has_improving_flip,
)
from core.qubo import build_correlation, build_pairwise, eval_objective, theoretical_penalty
from core.similarity import build_similarity
from core.types import ModelKind, QuboModel
from models.schemas import BuilderConfig


def one_var_model(bias: int) -> QuboModel:
    return QuboModel(
        num_vars=1,
        biases=[bias],
        rows=[],
        cols=[],
        values=[],
        var_map=((0, 0),),
        penalty_weight=0,
        model_kind=ModelKind.BINARY,
        n_points=1,
        slots=1,
    )


# ─── Enumeration ─────────────────────────────────────────


@pytest.mark.parametrize("n, k_max, expected", [(3, None, 5), (4, None, 15), (4, 2, 8), (5, 1, 1)])
def test_enumeration_counts(n, k_max, expected):
    assert sum(1 for _ in enumerate_partitions(n, k_max)) == expected


def test_bell_numbers():
    assert [bell_number(n) for n in range(8)] == [1, 1, 2, 5, 15, 52, 203, 877]


@pytest.mark.parametrize("n", range(1, 9))
def test_enumeration_is_complete_and_duplicate_free(n):
    seen = {tuple(p.assignment.tolist()) for p in enumerate_partitions(n)}
    assert len(seen) == bell_number(n)


def test_enumeration_order_is_restricted_growth():
    strings = [tuple(p.assignment.tolist()) for p in enumerate_partitions(4)]
    assert strings == sorted(strings)
    assert strings[0] == (0, 0, 0, 0)
    assert strings[-1] == (0, 1, 2, 3)


def test_enumeration_respects_k_max():
    assert all(p.k <= 3 for p in enumerate_partitions(6, 3))


@pytest.mark.parametrize("n, k_max", [(0, None), (13, None), (4, 0)])
def test_enumeration_guards(n, k_max):
    with pytest.raises(OracleError):
        list(enumerate_partitions(n, k_max))


# ─── Consensus search ────────────────────────────────────


@pytest.mark.parametrize("kind", [ModelKind.PAIRWISE, ModelKind.CORRELATION])
def test_unanimous_ensemble_is_its_own_optimum(kind):
    sim = build_similarity(unanimous_ensemble([0, 1, 1, 0, 2]))
    partition, value = brute_force_consensus(sim, kind, 3)
    assert partition.assignment.tolist() == [0, 1, 1, 0, 2]
    assert value == 0


def test_pairwise_with_n_slots_prefers_singletons(four_point_sim):
    partition, value = brute_force_consensus(four_point_sim, ModelKind.PAIRWISE, 4)
    assert partition.k == 4
    assert value == 0


def test_four_point_correlation_matches_qubo_minimum(four_point_sim):
    partition, optimum = brute_force_consensus(four_point_sim, ModelKind.CORRELATION, 4)
    model = build_correlation(four_point_sim, BuilderConfig(k_slots=4, penalty=400))
    bits, energy = brute_force_qubo(model)
    assert energy == optimum
    decoded, violations = decode(bits, model)
    assert violations == 0
    assert eval_objective(decoded, four_point_sim, ModelKind.CORRELATION) == optimum
    assert optimum == eval_objective(partition, four_point_sim, ModelKind.CORRELATION)


def test_consensus_guard(random_ensemble):
    sim = build_similarity(random_ensemble(11, 3, seed=0))
    with pytest.raises(OracleError):
        brute_force_consensus(sim, ModelKind.CORRELATION, 3)


# ─── QUBO search ─────────────────────────────────────────


def test_single_variable_negative_bias():
    bits, energy = brute_force_qubo(one_var_model(-3))
    assert bits.tolist() == [1]
    assert energy == -3


def test_two_variable_table():
    model = QuboModel(
        num_vars=2,
        biases=[-1, -1],
        rows=[0],
        cols=[1],
        values=[3],
        var_map=((0, 0), (1, 0)),
        penalty_weight=0,
        model_kind=ModelKind.BINARY,
        n_points=2,
        slots=1,
    )
    bits, energy = brute_force_qubo(model)
    assert energy == -1
    # (0,1) and (1,0) tie; the lexicographically smaller wins
    assert bits.tolist() == [0, 1]


def test_zero_model_ties_to_all_zeros():
    bits, energy = brute_force_qubo(one_var_model(0))
    assert bits.tolist() == [0]
    assert energy == 0


def test_pairwise_minimum_is_feasible(random_ensemble):
    sim = build_similarity(random_ensemble(3, 4, seed=2))
    model = build_pairwise(sim, BuilderConfig(k_slots=2, penalty=300))
    bits, _ = brute_force_qubo(model)
    assert np.all(bits.reshape(3, 2).sum(axis=1) == 1)


def test_qubo_guard(random_ensemble):
    sim = build_similarity(random_ensemble(5, 3, seed=0))
    model = build_correlation(sim, BuilderConfig(k_slots=5, penalty=500))
    assert model.num_vars == 25
    with pytest.raises(OracleError):
        brute_force_qubo(model)


# ─── Penalty bound ───────────────────────────────────────


@pytest.mark.parametrize("n, k_slots", [(2, 2), (3, 3), (4, 4), (5, 4)])
def test_theoretical_penalty_preserves_optimum(random_ensemble, n, k_slots):
    for seed in range(3):
        sim = build_similarity(random_ensemble(n, 5, seed=seed, k_max=n))
        model = build_correlation(
            sim, BuilderConfig(k_slots=k_slots, use_theoretical_penalty=True)
        )
        assert model.penalty_weight == theoretical_penalty(n)
        bits, energy = brute_force_qubo(model)
        _, optimum = brute_force_consensus(sim, ModelKind.CORRELATION, k_slots)
        assert energy == optimum
        decoded, violations = decode(bits, model)
        assert violations == 0
        assert eval_objective(decoded, sim, ModelKind.CORRELATION) == optimum


@pytest.mark.parametrize("n", [5, 6])
def test_infeasible_states_always_have_an_improving_flip(random_ensemble, n):
    # Beyond exhaustive reach: every infeasible state can be improved by one
    # flip, so the global minimum is one-hot feasible.
    rng = np.random.default_rng(n)
    sim = build_similarity(random_ensemble(n, 7, seed=n, k_max=n))
    model = build_correlation(sim, BuilderConfig(k_slots=n, use_theoretical_penalty=True))
    checked = 0
    while checked < 2000:
        bits = rng.integers(0, 2, size=model.num_vars)
        if np.all(bits.reshape(n, n).sum(axis=1) == 1):
            continue
        assert has_improving_flip(bits, model)
        checked += 1


def test_empty_point_has_improving_flip(four_point_sim):
    model = build_correlation(four_point_sim, BuilderConfig(k_slots=4, penalty=400))
    for slots in itertools.product(range(4), repeat=3):
        bits = np.zeros(16, dtype=np.int64)
        for u, slot in enumerate(slots):
            bits[u * 4 + slot] = 1
        assert has_improving_flip(bits, model)


def test_local_minimum_has_no_improving_flip(four_point_sim):
    model = build_correlation(four_point_sim, BuilderConfig(k_slots=4, penalty=400))
    bits, _ = brute_force_qubo(model)
    assert not has_improving_flip(bits, model)
