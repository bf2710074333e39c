import itertools

import numpy as np
import pytest

from cohsets.model import estimate, prune_empty
from cohsets.svd import (
    Partition,
    _assign,
    _coherence_scores,
    _lloyd,
    classical_pipeline,
    degree_of_coherence,
    full_svd,
    kmeans,
    match_partitions,
    truncate,
)
from cohsets.model import CountMatrix
from cohsets.seeding import rng_for
from tests.conftest import random_counts


def relabelings_equal(a: Partition, b: Partition) -> bool:
    """True when the two partitions induce the same grouping."""
    if a.size != b.size:
        return False
    seen = {}
    for la, lb in zip(a.labels, b.labels):
        if la in seen and seen[la] != lb:
            return False
        seen[la] = lb
    return len(set(seen.values())) == len(seen)


def test_full_svd_orthonormal_reconstruction():
    rng = np.random.default_rng(0)
    for _ in range(30):
        matrix = rng.normal(size=(rng.integers(2, 12), rng.integers(2, 12)))
        fac = full_svd(matrix)
        k = fac.rank
        assert fac.left.T @ fac.left == pytest.approx(np.eye(k), abs=1e-10)
        assert fac.right.T @ fac.right == pytest.approx(np.eye(k), abs=1e-10)
        assert np.all(np.diff(fac.singular_values) <= 1e-12)
        rebuilt = (fac.left * fac.singular_values) @ fac.right.T
        assert rebuilt == pytest.approx(matrix, abs=1e-9)


def test_full_svd_drops_numerical_zeros():
    # rank-1 matrix embedded in 4x4
    u = np.array([1.0, 2.0, 3.0, 4.0])[:, None]
    fac = full_svd(u @ u.T)
    assert fac.rank == 1


def test_full_svd_identity():
    fac = full_svd(np.eye(5))
    assert fac.singular_values == pytest.approx(np.ones(5))


def test_three_example_spectrum(three_example):
    _, model, _ = three_example
    fac = full_svd(model.rescaled)
    assert fac.rank == 3
    assert fac.singular_values == pytest.approx([1.0, 1.0, 0.6], abs=1e-12)
    full = np.linalg.svd(model.rescaled, compute_uv=False)
    assert full[3:].max() < 1e-10


def test_interval_spectrum_thirty_ones(interval_example):
    _, model, _ = interval_example
    sigma = np.linalg.svd(model.rescaled, compute_uv=False)
    assert sigma[:30] == pytest.approx(np.ones(30), abs=1e-9)
    assert sigma[30:].max() < 1e-10
    assert np.sum(model.rescaled**2) == pytest.approx(30.0)


def test_truncate_full_rank_reproduces(three_example):
    _, model, _ = three_example
    fac = full_svd(model.rescaled)
    reduced_rescaled, reduced = truncate(fac, 3, model.input_dist, model.output_dist)
    assert reduced_rescaled == pytest.approx(model.rescaled, abs=1e-12)
    assert reduced == pytest.approx(model.matrix, abs=1e-12)


def test_truncate_rank_one_is_marginal_outer_product():
    rng = np.random.default_rng(5)
    counts = random_counts(rng, 6, 8)
    model = estimate(counts)
    fac = full_svd(model.rescaled)
    reduced_rescaled, _ = truncate(fac, 1, model.input_dist, model.output_dist)
    expected = np.sqrt(model.output_dist)[:, None] * np.sqrt(model.input_dist)[None, :]
    assert reduced_rescaled == pytest.approx(expected, abs=1e-9)


def test_truncate_rank_out_of_range(three_example):
    _, model, _ = three_example
    fac = full_svd(model.rescaled)
    for bad in (0, 4, -1):
        with pytest.raises(ValueError):
            truncate(fac, bad, model.input_dist, model.output_dist)


def test_truncation_error_matches_tail():
    """Squared truncation error equals the sum of squared dropped values."""
    rng = np.random.default_rng(9)
    for _ in range(20):
        matrix = rng.normal(size=(7, 9))
        sigma = np.linalg.svd(matrix, compute_uv=False)
        fac = full_svd(matrix)
        for rank in (1, 3, 5):
            red, _ = truncate(fac, rank, np.full(9, 1 / 9), np.full(7, 1 / 7))
            err = np.sum((matrix - red) ** 2)
            assert err == pytest.approx(np.sum(sigma[rank:] ** 2), abs=1e-8)


def test_coherence_maximized_by_singular_frames():
    """No orthonormal frame beats the leading singular vectors."""
    rng = np.random.default_rng(21)
    matrix = rng.normal(size=(8, 8))
    sigma = np.linalg.svd(matrix, compute_uv=False)
    r = 3
    top = sigma[:r].sum()
    assert degree_of_coherence(matrix, r) == pytest.approx(top)
    for _ in range(100):
        frame, _ = np.linalg.qr(rng.normal(size=(8, r)))
        total = np.linalg.norm(matrix @ frame, ord="nuc")
        assert total <= top + 1e-8


def test_degree_of_coherence_bounds(three_example, interval_example):
    _, model3, _ = three_example
    assert degree_of_coherence(model3.rescaled, 3) == pytest.approx(2.6, abs=1e-9)
    _, model9, _ = interval_example
    assert degree_of_coherence(model9.rescaled, 3) == pytest.approx(3.0, abs=1e-9)
    assert degree_of_coherence(model9.rescaled, 1) == pytest.approx(1.0, abs=1e-9)
    rng = np.random.default_rng(2)
    for _ in range(20):
        counts = random_counts(rng, 6, 6)
        model = estimate(counts)
        for r in (1, 2, 3):
            assert degree_of_coherence(model.rescaled, r) <= r + 1e-9


def test_degree_of_coherence_rank_validation():
    with pytest.raises(ValueError):
        degree_of_coherence(np.eye(3), 4)
    with pytest.raises(ValueError):
        degree_of_coherence(np.eye(3), 0)


def test_kmeans_separated_clusters():
    points = np.array([0.0, 0.01, 10.0, 10.01])
    part = kmeans(points, 2, seed=0)
    assert part.labels[0] == part.labels[1]
    assert part.labels[2] == part.labels[3]
    assert part.labels[0] != part.labels[2]


def test_kmeans_singletons():
    points = np.array([[0.0], [5.0], [9.0]])
    part = kmeans(points, 3, seed=1)
    assert sorted(part.labels.tolist()) == [1, 2, 3]


def test_kmeans_determinism():
    rng = np.random.default_rng(4)
    points = rng.normal(size=(40, 3))
    a = kmeans(points, 4, seed=7)
    b = kmeans(points, 4, seed=7)
    assert np.array_equal(a.labels, b.labels)


def test_kmeans_duplicate_points_padded():
    points = np.zeros((6, 2))
    part = kmeans(points, 3, seed=0)
    assert part.n_clusters == 3
    assert len(set(part.labels.tolist())) == 3


def test_kmeans_validation():
    with pytest.raises(ValueError):
        kmeans(np.zeros((3, 2)), 4)
    with pytest.raises(ValueError):
        kmeans(np.zeros((3, 2)), 0)
    with pytest.raises(ValueError):
        kmeans(np.array([[np.nan, 0.0]]), 1)


def test_lloyd_objective_monotone_and_fixed_point():
    rng = np.random.default_rng(13)
    for trial in range(20):
        points = rng.normal(size=(50, 2))
        labels, centers, objectives, _ = _lloyd(points, 5, rng_for(trial, 0), 100)
        assert all(b <= a + 1e-12 for a, b in zip(objectives, objectives[1:]))
        again, _ = _assign(points, centers)
        assert np.array_equal(again, labels)


def test_kmeans_recovers_blocks(three_example):
    _, model, default = three_example
    fac = full_svd(model.rescaled)
    part = kmeans(fac.right[:, :3], 3, seed=0)
    assert relabelings_equal(part, default)


def test_match_partitions_two_by_two():
    counts = CountMatrix(counts=np.array([[9, 2], [1, 8]]), total=20)
    model = estimate(counts)
    E = Partition(labels=np.array([1, 2]), n_clusters=2)
    F = Partition(labels=np.array([1, 2]), n_clusters=2)
    matched, objective = match_partitions(model, E, F)
    assert np.array_equal(matched.labels, [1, 2])
    assert objective == pytest.approx(1.7)
    # flipping the output labels must be undone by the matching
    flipped = Partition(labels=np.array([2, 1]), n_clusters=2)
    matched2, objective2 = match_partitions(model, E, flipped)
    assert np.array_equal(matched2.labels, [1, 2])
    assert objective2 == pytest.approx(1.7)


def test_match_partitions_validation(three_example):
    _, model, default = three_example
    with pytest.raises(ValueError):
        match_partitions(model, default, Partition(labels=np.ones(99, dtype=int), n_clusters=3))
    with pytest.raises(ValueError):
        match_partitions(
            model, default,
            Partition(labels=np.ones(100, dtype=int), n_clusters=1),
        )


def test_match_beats_every_permutation():
    """Assignment objective equals the exhaustive-permutation maximum."""
    rng = np.random.default_rng(17)
    for _ in range(25):
        r = int(rng.integers(2, 6))
        counts = random_counts(rng, 3 * r, 3 * r)
        model = estimate(counts)
        E = Partition(labels=rng.integers(1, r + 1, size=3 * r) if r > 1 else np.ones(3 * r, int), n_clusters=r)
        # ensure every input cluster is nonempty
        labels = E.labels.copy()
        labels[:r] = np.arange(1, r + 1)
        E = Partition(labels=labels, n_clusters=r)
        F = Partition(labels=np.tile(np.arange(1, r + 1), 3), n_clusters=r)
        scores = _coherence_scores(model, E, F)
        _, objective = match_partitions(model, E, F)
        best = max(
            sum(scores[k, perm[k]] for k in range(r))
            for perm in itertools.permutations(range(r))
        )
        assert objective == pytest.approx(best, abs=1e-12)


def test_classical_pipeline_three_example(three_example):
    counts, model, default = three_example
    result = classical_pipeline(counts, 3, seed=0)
    assert relabelings_equal(result.input_partition, default)
    assert relabelings_equal(result.output_partition, default)
    # matched clusters pair E_k with its own image: 0.8 + 0.8 + 1.0
    assert result.coherence == pytest.approx(2.6, abs=1e-9)
    assert result.reduced == pytest.approx(model.matrix, abs=1e-8)


def test_classical_pipeline_interval_keeps_triples(interval_example):
    counts, model, _ = interval_example
    result = classical_pipeline(counts, 3, seed=0)
    assert result.coherence == pytest.approx(3.0, abs=1e-9)
    # inputs c, c+10, c+20 of each block share a column and must stay together
    labels = result.input_partition.labels
    for block in range(3):
        for c in range(10):
            base = 30 * block + c
            assert labels[base] == labels[base + 10] == labels[base + 20]


def test_classical_pipeline_rank_one():
    rng = np.random.default_rng(23)
    counts = random_counts(rng, 5, 5)
    result = classical_pipeline(counts, 1, seed=0)
    assert result.input_partition.n_clusters == 1
    assert result.coherence == pytest.approx(1.0)
