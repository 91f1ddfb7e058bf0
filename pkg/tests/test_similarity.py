import numpy as np
import pytest

from core.errors import DataError, EnsembleError
from core.similarity import build_similarity, dump_quantized, quantize, similarity_from_matrix
from core.types import Ensemble, Partition


@pytest.mark.parametrize(
    "s, expected",
    [(0.0, 0), (1.0, 100), (0.375, 38), (2 / 3, 67), (1 / 3, 33), (0.005, 1)],
)
def test_quantize_rounds_half_up(s, expected):
    assert quantize(s) == expected


@pytest.mark.parametrize("count, m", [(23, 40), (29, 200), (57, 200), (1, 8), (3, 8)])
def test_quantize_agrees_with_counts_on_ties(count, m):
    expected = (200 * count + m) // (2 * m)
    assert quantize(count / m) == expected


def test_quantize_tie_values():
    assert quantize(23 / 40) == 58
    assert quantize(57 / 200) == 29


@pytest.mark.parametrize("s", [-0.01, 1.01])
def test_quantize_rejects_out_of_range(s):
    with pytest.raises(DataError):
        quantize(s)


def test_four_point_similarity(four_point_sim):
    expected_counts = np.array(
        [
            [3, 2, 1, 1],
            [2, 3, 2, 1],
            [1, 2, 3, 1],
            [1, 1, 1, 3],
        ]
    )
    assert np.array_equal(four_point_sim.counts, expected_counts)
    assert four_point_sim.quantized[0, 1] == 67
    assert four_point_sim.quantized[0, 2] == 33
    assert np.all(np.diag(four_point_sim.quantized) == 100)
    assert np.allclose(np.diag(four_point_sim.s), 1.0)
    assert np.array_equal(four_point_sim.dissimilarity, 100 - four_point_sim.quantized)


def test_quantization_matches_scalar_rule(random_ensemble):
    sim = build_similarity(random_ensemble(9, 7, seed=3))
    iu, iv = np.triu_indices(9, 1)
    for u, v in zip(iu, iv):
        assert sim.quantized[u, v] == quantize(sim.counts[u, v] / 7)


def test_matrix_and_scalar_rule_agree_on_a_tie():
    together = Partition(np.array([0, 0]), 1)
    apart = Partition(np.array([0, 1]), 2)
    sim = build_similarity(Ensemble((together,) * 23 + (apart,) * 17))
    assert sim.counts[0, 1] == 23
    assert sim.quantized[0, 1] == quantize(sim.counts[0, 1] / sim.m) == 58
    assert similarity_from_matrix(sim.s).quantized[0, 1] == 58


def test_similarity_is_symmetric_and_bounded(random_ensemble):
    sim = build_similarity(random_ensemble(12, 10, seed=1))
    assert np.array_equal(sim.s, sim.s.T)
    assert sim.s.min() >= 0.0 and sim.s.max() <= 1.0


def test_similarity_independent_of_member_order(random_ensemble):
    ensemble = random_ensemble(8, 6, seed=11)
    reversed_ensemble = Ensemble(tuple(reversed(ensemble.members)))
    assert np.array_equal(
        build_similarity(ensemble).quantized, build_similarity(reversed_ensemble).quantized
    )


def test_inconsistent_member_lengths_rejected():
    # Bypass Ensemble's own length check to reach the builder's.
    ensemble = Ensemble.__new__(Ensemble)
    members = (Partition(np.array([0, 1]), 2), Partition(np.array([0, 0, 1]), 2))
    object.__setattr__(ensemble, "members", members)
    object.__setattr__(ensemble, "generator_seed", 0)
    with pytest.raises(EnsembleError):
        build_similarity(ensemble)


def test_similarity_from_matrix_with_counts():
    sim = similarity_from_matrix(np.array([[1.0, 0.5], [0.5, 1.0]]), m=4)
    assert sim.counts[0, 1] == 2
    assert sim.quantized[0, 1] == 50


def test_similarity_from_matrix_rejects_out_of_range():
    with pytest.raises(DataError):
        similarity_from_matrix(np.array([[1.0, 1.5], [1.5, 1.0]]))


def test_dump_quantized(tmp_path, four_point_sim):
    path = tmp_path / "s.csv"
    dump_quantized(four_point_sim, str(path))
    rows = path.read_text().strip().splitlines()
    assert rows[0] == "100,67,33,33"
    assert len(rows) == 4
