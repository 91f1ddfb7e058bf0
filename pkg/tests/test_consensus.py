import numpy as np
import pytest

from conftest import unanimous_ensemble
from core.consensus import decode, hac, repair, run_consensus, solve_method
from core.errors import ModelError, PartitionError
from core.qubo import build_binary, build_correlation, build_pairwise, encode, eval_qubo
from core.similarity import build_similarity
from core.types import Dataset, Ensemble, ModelKind, validate_partition
from models.schemas import AnnealParams, BuilderConfig


@pytest.fixture
def correlation_model(four_point_sim):
    return build_correlation(four_point_sim, BuilderConfig(k_slots=3, penalty=400))


# ─── decode / repair ─────────────────────────────────────


def test_decode_feasible_one_hot():
    sim = build_similarity(unanimous_ensemble([0, 0, 1]))
    model = build_pairwise(sim, BuilderConfig(k_slots=2))
    bits = [1, 0, 1, 0, 0, 1]
    partition, violations = decode(bits, model)
    assert partition.assignment.tolist() == [0, 0, 1]
    assert violations == 0


def test_decode_inverts_encode(correlation_model):
    for labels in ([0, 0, 1, 1], [0, 1, 2, 0], [0, 0, 0, 0]):
        partition = validate_partition(labels)
        decoded, violations = decode(encode(partition, correlation_model), correlation_model)
        assert decoded == partition
        assert violations == 0


def test_decode_repairs_doubly_assigned_point(correlation_model):
    bits = encode(validate_partition([0, 0, 1, 1]), correlation_model).astype(np.int64)
    bits[0 * 3 + 1] = 1  # point 0 now sits in slots 0 and 1

    completions = []
    for slot in range(3):
        candidate = bits.copy()
        candidate[0:3] = 0
        candidate[slot] = 1
        completions.append(eval_qubo(candidate, correlation_model))
    best_slot = int(np.argmin(completions))

    partition, violations = decode(bits, correlation_model)
    assert violations == 1
    repaired = repair(bits, correlation_model)
    assert repaired[0:3].tolist() == [int(s == best_slot) for s in range(3)]
    assert decode(repaired, correlation_model)[0] == partition


def test_decode_binary_codes():
    sim = build_similarity(unanimous_ensemble([0, 0, 1, 2]))
    model = build_binary(sim, BuilderConfig(k_slots=3))
    assert model.slots == 2
    # codes 00, 00, 01, 11 with bit i of the code at position i
    bits = [0, 0, 0, 0, 1, 0, 1, 1]
    partition, violations = decode(bits, model)
    assert partition.assignment.tolist() == [0, 0, 1, 2]
    assert violations == 0


def test_decode_rejects_wrong_length(correlation_model):
    with pytest.raises(ModelError):
        decode(np.zeros(5), correlation_model)


def test_repair_leaves_feasible_state_alone(correlation_model):
    bits = encode(validate_partition([0, 1, 1, 2]), correlation_model)
    assert np.array_equal(repair(bits, correlation_model), bits)


def test_repair_all_zeros_breaks_ties_to_slot_zero():
    sim = build_similarity(unanimous_ensemble([0, 0]))
    model = build_pairwise(sim, BuilderConfig(k_slots=2))
    repaired = repair(np.zeros(4), model)
    assert repaired.tolist() == [1, 0, 1, 0]
    assert decode(repaired, model)[0].k == 1


def test_repair_is_idempotent(correlation_model):
    rng = np.random.default_rng(0)
    for _ in range(50):
        bits = rng.integers(0, 2, size=correlation_model.num_vars)
        once = repair(bits, correlation_model)
        assert np.array_equal(repair(once, correlation_model), once)
        assert np.all(once.reshape(4, 3).sum(axis=1) == 1)


def test_repair_picks_best_single_slot_completion(correlation_model):
    rng = np.random.default_rng(1)
    for _ in range(30):
        labels = [0] + rng.integers(0, 3, size=3).tolist()
        bits = encode(validate_partition(labels), correlation_model)
        bits[0:3] = 0
        repaired = repair(bits, correlation_model)
        options = []
        for slot in range(3):
            candidate = repaired.astype(np.int64).copy()
            candidate[0:3] = 0
            candidate[slot] = 1
            options.append(eval_qubo(candidate, correlation_model))
        assert eval_qubo(repaired, correlation_model) == min(options)


# ─── HAC ─────────────────────────────────────────────────


def test_hac_k_equals_n_gives_singletons(four_point_sim):
    assert hac(four_point_sim, 4).k == 4


def test_hac_recovers_unanimous_partition():
    labels = [0, 1, 0, 2, 1, 2, 2]
    sim = build_similarity(unanimous_ensemble(labels))
    assert hac(sim, 3) == validate_partition(labels)


def test_hac_four_point_trace(four_point_sim):
    # (0,1) and (1,2) tie at 2/3 and the smaller pair merges first; then
    # {0,1}–{2} averages 1/2 against 1/3 for everything touching 3.
    assert hac(four_point_sim, 3).assignment.tolist() == [0, 0, 1, 2]
    assert hac(four_point_sim, 2).assignment.tolist() == [0, 0, 0, 1]
    assert hac(four_point_sim, 1).k == 1


def test_hac_ignores_member_order(random_ensemble):
    ensemble = random_ensemble(10, 8, seed=5)
    shuffled = Ensemble(tuple(ensemble.members[i] for i in [3, 0, 7, 1, 6, 2, 5, 4]))
    assert hac(build_similarity(ensemble), 3) == hac(build_similarity(shuffled), 3)


@pytest.mark.parametrize("k", [0, 5])
def test_hac_rejects_bad_target(four_point_sim, k):
    with pytest.raises(PartitionError):
        hac(four_point_sim, k)


# ─── Pipeline ────────────────────────────────────────────


@pytest.mark.parametrize("method", ["da-sm", "da-cr", "hac"])
def test_run_consensus_recovers_unanimous_partition(two_clouds, method):
    ensemble = unanimous_ensemble(two_clouds.labels, m=4)
    params = AnnealParams(num_runs=8, sweeps_per_run=500, seed=0)
    report = run_consensus(two_clouds, ensemble, method, 2, params, penalty=2000)
    assert report.partition == validate_partition(two_clouds.labels)
    assert report.violations == 0


def test_run_consensus_correlation_may_leave_slots_empty(two_clouds):
    ensemble = unanimous_ensemble(two_clouds.labels, m=4)
    params = AnnealParams(num_runs=8, sweeps_per_run=500, seed=1)
    report = run_consensus(two_clouds, ensemble, "da-cr", 5, params, penalty=2000)
    assert report.partition.k == 2


def test_run_consensus_binary_reports_feasible_partition(two_clouds):
    ensemble = unanimous_ensemble(two_clouds.labels, m=4)
    params = AnnealParams(num_runs=2, sweeps_per_run=100, seed=0)
    report = run_consensus(two_clouds, ensemble, "da-bin", 4, params)
    assert report.partition.n == 20
    assert 1 <= report.partition.k <= 4
    assert report.violations == 0


def test_run_consensus_size_mismatch(two_clouds, four_point_ensemble):
    with pytest.raises(PartitionError):
        run_consensus(two_clouds, four_point_ensemble, "hac", 2, AnnealParams())


def test_solve_method_rejects_unknown_method(four_point_sim):
    with pytest.raises(ModelError):
        solve_method(four_point_sim, "kmeans", 2, AnnealParams())


def test_solve_method_hac_has_no_bits(four_point_sim):
    report = solve_method(four_point_sim, "hac", 2, AnnealParams(seed=3))
    assert report.best_bits.size == 0
    assert report.seed == 3


def test_solve_method_penalty_override(four_point_sim):
    report = solve_method(
        four_point_sim, "da-cr", 4, AnnealParams(num_runs=4, sweeps_per_run=300), penalty=400
    )
    assert report.model_kind is ModelKind.CORRELATION
    assert report.partition.k <= 4


def test_run_consensus_on_unlabeled_dataset():
    dataset = Dataset(points=np.arange(8, dtype=float).reshape(4, 2), name="tiny")
    ensemble = unanimous_ensemble([0, 0, 1, 1], m=3)
    report = run_consensus(dataset, ensemble, "da-sm", 2, AnnealParams(num_runs=2), penalty=400)
    assert report.partition.assignment.tolist() == [0, 0, 1, 1]
