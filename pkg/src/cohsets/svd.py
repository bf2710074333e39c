"""Coherent-set identification by truncated SVD of the rescaled transition matrix.

The pipeline factorizes the rescaled matrix, truncates to the leading
``rank`` singular triplets, clusters input categories on rows of the right
singular vectors and output categories on rows of the left singular vectors,
then matches the two clusterings by maximum total transition probability.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .model import CountMatrix, TransitionModel, estimate
from .seeding import mix_seed, rng_for

logger = logging.getLogger(__name__)

# Singular values below this multiple of max(m, n) * sigma_1 count as zero.
RANK_TOLERANCE = 1e-12


@dataclass(frozen=True)
class SvdFactorization:
    """Thin SVD restricted to singular values above the rank cutoff."""

    left: np.ndarray
    singular_values: np.ndarray
    right: np.ndarray

    @property
    def rank(self) -> int:
        return int(self.singular_values.size)


@dataclass(frozen=True)
class Partition:
    """1-based cluster labels over a category range."""

    labels: np.ndarray
    n_clusters: int

    def __post_init__(self) -> None:
        labels = np.ascontiguousarray(np.asarray(self.labels, dtype=np.int64))
        labels.flags.writeable = False
        object.__setattr__(self, "labels", labels)
        if labels.ndim != 1 or labels.size == 0:
            raise ValueError("labels must be a nonempty 1-d array")
        if self.n_clusters < 1:
            raise ValueError("n_clusters must be positive")
        if (labels < 1).any() or (labels > self.n_clusters).any():
            raise ValueError(f"labels must lie in [1, {self.n_clusters}]")

    @property
    def size(self) -> int:
        return int(self.labels.size)

    def members(self, cluster: int) -> np.ndarray:
        """1-based category indices belonging to ``cluster``."""
        return np.nonzero(self.labels == cluster)[0] + 1


@dataclass(frozen=True)
class ClassicalResult:
    model: TransitionModel
    factorization: SvdFactorization
    reduced_rescaled: np.ndarray
    reduced: np.ndarray
    input_partition: Partition
    output_partition: Partition
    coherence: float
    kmeans_diagnostics: dict = field(default_factory=dict)


def full_svd(matrix: np.ndarray) -> SvdFactorization:
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2 or matrix.size == 0:
        raise ValueError("matrix must be a nonempty 2-d array")
    if not np.isfinite(matrix).all():
        raise ValueError("matrix must have finite entries")
    try:
        left, sigma, right_t = np.linalg.svd(matrix, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(f"SVD failed to converge: {exc}") from exc
    cutoff = RANK_TOLERANCE * max(matrix.shape) * (sigma[0] if sigma.size else 0.0)
    keep = sigma > cutoff
    return SvdFactorization(
        left=left[:, keep], singular_values=sigma[keep], right=right_t[keep].T
    )


def truncate(
    factorization: SvdFactorization,
    rank: int,
    input_dist: np.ndarray,
    output_dist: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Rank-``rank`` truncation; returns (reduced rescaled matrix, reduced matrix).

    The reduced matrix applies the same diagonal rescaling used to build the
    rescaled matrix from the transition matrix, so it is not column-stochastic
    in general and may contain small negative entries.
    """
    if not 1 <= rank <= factorization.rank:
        raise ValueError(f"rank must lie in [1, {factorization.rank}], got {rank}")
    scaled_left = factorization.left[:, :rank] * factorization.singular_values[:rank]
    reduced_rescaled = scaled_left @ factorization.right[:, :rank].T
    p = np.asarray(input_dist, dtype=np.float64)
    q = np.asarray(output_dist, dtype=np.float64)
    reduced = reduced_rescaled * (np.sqrt(p)[np.newaxis, :] / np.sqrt(q)[:, np.newaxis])
    return reduced_rescaled, reduced


def degree_of_coherence(matrix: np.ndarray, rank: int) -> float:
    """Sum of the ``rank`` leading singular values of ``matrix``."""
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2:
        raise ValueError("matrix must be 2-d")
    if not 1 <= rank <= min(matrix.shape):
        raise ValueError(f"rank must lie in [1, {min(matrix.shape)}], got {rank}")
    sigma = np.linalg.svd(matrix, compute_uv=False)
    return float(sigma[:rank].sum())


def _plus_plus_centers(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = points.shape[0]
    centers = np.empty((k, points.shape[1]), dtype=np.float64)
    centers[0] = points[int(rng.integers(n))]
    dist_sq = np.sum((points - centers[0]) ** 2, axis=1)
    for c in range(1, k):
        total = dist_sq.sum()
        if total > 0.0:
            idx = int(rng.choice(n, p=dist_sq / total))
        else:
            idx = int(rng.integers(n))
        centers[c] = points[idx]
        np.minimum(dist_sq, np.sum((points - centers[c]) ** 2, axis=1), out=dist_sq)
    return centers


def _assign(points: np.ndarray, centers: np.ndarray) -> tuple[np.ndarray, int]:
    """Nearest-center labels with empty clusters repaired; returns (labels, repairs)."""
    dist_sq = (
        np.sum(points**2, axis=1)[:, np.newaxis]
        - 2.0 * points @ centers.T
        + np.sum(centers**2, axis=1)[np.newaxis, :]
    )
    labels = np.argmin(dist_sq, axis=1)
    k = centers.shape[0]
    sizes = np.bincount(labels, minlength=k)
    empties = np.nonzero(sizes == 0)[0]
    if empties.size == 0:
        return labels, 0
    # Hand the farthest points to empty clusters, never draining a cluster
    # below one member. Stable sort keeps ties deterministic.
    own = dist_sq[np.arange(points.shape[0]), labels]
    order = np.argsort(-own, kind="stable")
    cursor = 0
    for empty in empties:
        while sizes[labels[order[cursor]]] <= 1:
            cursor += 1
        pick = order[cursor]
        cursor += 1
        sizes[labels[pick]] -= 1
        labels[pick] = empty
        sizes[empty] = 1
    return labels, int(empties.size)


def _lloyd(
    points: np.ndarray, k: int, rng: np.random.Generator, max_iters: int
) -> tuple[np.ndarray, np.ndarray, list[float], int]:
    centers = _plus_plus_centers(points, k, rng)
    labels = None
    objectives: list[float] = []
    repairs = 0
    for _ in range(max_iters):
        new_labels, repaired = _assign(points, centers)
        repairs += repaired
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for c in range(k):
            centers[c] = points[labels == c].mean(axis=0)
        gaps = points - centers[labels]
        objectives.append(float(np.sum(gaps * gaps)))
    return labels, centers, objectives, repairs


def kmeans(
    points: np.ndarray,
    n_clusters: int,
    restarts: int = 10,
    max_iters: int = 100,
    seed: int = 0,
) -> Partition:
    """Lloyd iterations with plus-plus seeding over ``restarts`` deterministic restarts.

    The best restart is chosen by final within-cluster squared distance;
    ties keep the lowest restart index. All returned clusters are nonempty.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim == 1:
        points = points[:, np.newaxis]
    if points.ndim != 2 or points.size == 0:
        raise ValueError("points must be a nonempty 1-d or 2-d array")
    if not np.isfinite(points).all():
        raise ValueError("points must have finite entries")
    n = points.shape[0]
    if not 1 <= n_clusters <= n:
        raise ValueError(f"n_clusters must lie in [1, {n}], got {n_clusters}")
    if restarts < 1 or max_iters < 1:
        raise ValueError("restarts and max_iters must be positive")
    best_labels = None
    best_objective = np.inf
    total_repairs = 0
    for restart in range(restarts):
        labels, _, objectives, repairs = _lloyd(
            points, n_clusters, rng_for(seed, restart), max_iters
        )
        total_repairs += repairs
        if objectives[-1] < best_objective:
            best_objective = objectives[-1]
            best_labels = labels
    if total_repairs:
        logger.debug("kmeans repaired %d empty clusters across restarts", total_repairs)
    return Partition(labels=best_labels + 1, n_clusters=n_clusters)


def _coherence_scores(
    model: TransitionModel, input_partition: Partition, output_partition: Partition
) -> np.ndarray:
    """Matrix of transition probabilities between clusters.

    Entry (k, l) is the probability that the output lands in output cluster
    l+1 given that the input lies in input cluster k+1.
    """
    r = input_partition.n_clusters
    joint = model.matrix * model.input_dist[np.newaxis, :]
    in_onehot = np.zeros((model.shape[1], r))
    in_onehot[np.arange(model.shape[1]), input_partition.labels - 1] = 1.0
    out_onehot = np.zeros((model.shape[0], r))
    out_onehot[np.arange(model.shape[0]), output_partition.labels - 1] = 1.0
    cluster_joint = out_onehot.T @ joint @ in_onehot
    input_mass = model.input_dist @ in_onehot
    return (cluster_joint / input_mass[np.newaxis, :]).T


def _best_assignment(scores: np.ndarray) -> tuple[np.ndarray, float]:
    rows, cols = linear_sum_assignment(-scores)
    return cols, float(scores[rows, cols].sum())


def match_partitions(
    model: TransitionModel, input_partition: Partition, output_partition: Partition
) -> tuple[Partition, float]:
    """Relabel output clusters to best correspond with input clusters.

    Returns the relabeled output partition and the matched objective: the sum
    over input clusters of the probability of landing in the paired output
    cluster. Output clusters may be empty; their scores are zero.
    """
    m, n = model.shape
    if input_partition.size != n:
        raise ValueError(f"input partition covers {input_partition.size} of {n} categories")
    if output_partition.size != m:
        raise ValueError(f"output partition covers {output_partition.size} of {m} categories")
    if input_partition.n_clusters != output_partition.n_clusters:
        raise ValueError("partitions must have the same number of clusters")
    scores = _coherence_scores(model, input_partition, output_partition)
    assignment, objective = _best_assignment(scores)
    relabel = np.empty(input_partition.n_clusters, dtype=np.int64)
    relabel[assignment] = np.arange(1, input_partition.n_clusters + 1)
    matched = Partition(
        labels=relabel[output_partition.labels - 1],
        n_clusters=output_partition.n_clusters,
    )
    return matched, objective


def classical_pipeline(
    counts: CountMatrix, rank: int, seed: int = 0, restarts: int = 10
) -> ClassicalResult:
    """Estimate, factorize, truncate, cluster both category sets, and match."""
    model = estimate(counts)
    factorization = full_svd(model.rescaled)
    reduced_rescaled, reduced = truncate(
        factorization, rank, model.input_dist, model.output_dist
    )
    input_partition = kmeans(
        factorization.right[:, :rank], rank, restarts=restarts, seed=mix_seed(seed, 1)
    )
    raw_output = kmeans(
        factorization.left[:, :rank], rank, restarts=restarts, seed=mix_seed(seed, 2)
    )
    output_partition, coherence = match_partitions(model, input_partition, raw_output)
    return ClassicalResult(
        model=model,
        factorization=factorization,
        reduced_rescaled=reduced_rescaled,
        reduced=reduced,
        input_partition=input_partition,
        output_partition=output_partition,
        coherence=coherence,
        kmeans_diagnostics={"reduced_min_entry": float(reduced.min())},
    )
