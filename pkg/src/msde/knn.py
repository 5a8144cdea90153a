"""Exact k-nearest-neighbor search and pairwise distance extremes.

Two independent routes exist on purpose: ``build_knn_graph`` (KD-tree for
low dimensions, blocked vectorized scan above ``KDTREE_MAX_DIM``) and
``brute_force_knn`` (the naive O(n^2 d) oracle). Both report distances
through the single metric kernel ``distances_from`` so their outputs are
comparable bit for bit; they differ in how candidates are found and
ordered. Ties in distance are always broken toward the lower row index.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .exceptions import GraphError
from .parallel import map_row_blocks

logger = logging.getLogger(__name__)

# KD-trees stop paying for themselves in high dimensions; beyond this the
# fast path switches to a blocked vectorized scan.
KDTREE_MAX_DIM = 32


def _as_values(points) -> np.ndarray:
    values = getattr(points, "values", points)
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2:
        raise GraphError(f"points must be a 2-D matrix, got shape {values.shape}")
    return values


def distances_from(values: np.ndarray, i: int, indices=None) -> np.ndarray:
    """Euclidean distances from row ``i`` to ``indices`` (default: all rows).

    This is the only place pairwise distances are evaluated, so every
    search route, oracle, and radius count shares one rounding behavior.
    """
    base = values if indices is None else values[np.asarray(indices, dtype=np.intp)]
    diff = base - values[i]
    return np.sqrt(np.sum(diff * diff, axis=1))


@dataclass(frozen=True)
class NeighborGraph:
    """Per-sample ordered neighbor lists: nearest first, no self-loops."""

    k: int
    neighbors: np.ndarray  # (n, k) int64
    distances: np.ndarray  # (n, k) float64

    @property
    def n_samples(self) -> int:
        return self.neighbors.shape[0]


@dataclass(frozen=True)
class DistanceExtremes:
    d_max: float
    d_min: float  # minimum over distinct pairs


def _effective_k(k: int, n: int) -> int:
    if k < 1:
        raise GraphError(f"k must be >= 1, got {k}")
    if n < 2:
        raise GraphError(f"need at least 2 points to build a graph, got {n}")
    if k > n - 1:
        warnings.warn(f"k={k} clamped to n-1={n - 1}")
        return n - 1
    return k


def _take_k_nearest(values: np.ndarray, i: int, candidates: np.ndarray, k: int):
    """Canonical distances + (distance, index) ordering over candidates."""
    d = distances_from(values, i, candidates)
    order = np.lexsort((candidates, d))[:k]
    return candidates[order], d[order]


def brute_force_knn(points, k: int) -> NeighborGraph:
    """Naive O(n^2 d) exhaustive scan; the ground-truth oracle."""
    values = _as_values(points)
    n = values.shape[0]
    k = _effective_k(k, n)
    neighbors = np.empty((n, k), dtype=np.int64)
    distances = np.empty((n, k), dtype=np.float64)
    all_idx = np.arange(n)
    for i in range(n):
        d = distances_from(values, i)
        d[i] = np.inf  # exclude self
        order = np.lexsort((all_idx, d))[:k]
        neighbors[i] = order
        distances[i] = d[order]
    return NeighborGraph(k, neighbors, distances)


def _knn_kdtree(values: np.ndarray, k: int, threads: int) -> tuple[np.ndarray, np.ndarray]:
    n = values.shape[0]
    tree = cKDTree(values)
    # k+1 nearest always contain at least k non-self points, so the radius
    # of that ball (with slack for the tree's own rounding) bounds the true
    # k-th neighbor distance. Candidates are re-ranked with the canonical
    # kernel so ties resolve to the lower index.
    qdist, _ = tree.query(values, k=k + 1)
    radii = qdist[:, -1] * (1.0 + 1e-9)
    neighbors = np.empty((n, k), dtype=np.int64)
    distances = np.empty((n, k), dtype=np.float64)

    def worker(start: int, stop: int) -> None:
        balls = tree.query_ball_point(values[start:stop], radii[start:stop])
        for i, ball in zip(range(start, stop), balls):
            cand = np.asarray([j for j in ball if j != i], dtype=np.intp)
            idx, d = _take_k_nearest(values, i, cand, k)
            neighbors[i], distances[i] = idx, d

    map_row_blocks(worker, n, threads)
    return neighbors, distances


def _knn_blocked_scan(values: np.ndarray, k: int, threads: int) -> tuple[np.ndarray, np.ndarray]:
    n = values.shape[0]
    neighbors = np.empty((n, k), dtype=np.int64)
    distances = np.empty((n, k), dtype=np.float64)
    sq_norms = np.einsum("ij,ij->i", values, values)
    # Cancellation in the Gram expansion is bounded by a small multiple of
    # eps * (|x|^2 + |y|^2); the screen slack must cover it so the true
    # k-set is always inside the candidate set.
    slack = 32.0 * np.finfo(np.float64).eps * (sq_norms + sq_norms.max())

    def worker(start: int, stop: int) -> None:
        # Squared-distance screen via the Gram expansion, then exact
        # canonical re-ranking of everything at or near the k-th boundary.
        block = values[start:stop]
        d2 = sq_norms[start:stop, None] + sq_norms[None, :] - 2.0 * block @ values.T
        np.maximum(d2, 0.0, out=d2)
        for row, i in enumerate(range(start, stop)):
            d2[row, i] = np.inf
            kth = np.partition(d2[row], k - 1)[k - 1]
            cand = np.flatnonzero(d2[row] <= kth * (1.0 + 1e-9) + slack[i])
            idx, d = _take_k_nearest(values, i, cand, k)
            neighbors[i], distances[i] = idx, d

    map_row_blocks(worker, n, threads)
    return neighbors, distances


def build_knn_graph(points, k: int, threads: int = 1) -> NeighborGraph:
    """Exact k-NN graph; ties by lower index; k clamped to n-1 with warning."""
    values = _as_values(points)
    n = values.shape[0]
    k = _effective_k(k, n)
    if values.shape[1] <= KDTREE_MAX_DIM:
        neighbors, distances = _knn_kdtree(values, k, threads)
    else:
        neighbors, distances = _knn_blocked_scan(values, k, threads)
    return NeighborGraph(k, neighbors, distances)


def distance_extremes(points, threads: int = 1) -> DistanceExtremes:
    """Exact max and min distance over distinct pairs (blocked full scan)."""
    values = _as_values(points)
    n = values.shape[0]
    if n < 2:
        raise GraphError(f"distance extremes need at least 2 points, got {n}")
    maxima = np.empty(n)
    minima = np.empty(n)

    def worker(start: int, stop: int) -> None:
        for i in range(start, stop):
            d = distances_from(values, i)
            d[i] = -np.inf
            maxima[i] = d.max()
            d[i] = np.inf
            minima[i] = d.min()

    map_row_blocks(worker, n, threads)
    return DistanceExtremes(d_max=float(maxima.max()), d_min=float(minima.min()))


def count_within_radius(points, center_index: int, radius: float) -> int:
    """Number of other points strictly closer than ``radius``."""
    values = _as_values(points)
    n = values.shape[0]
    if not 0 <= center_index < n:
        raise GraphError(f"center index {center_index} out of range for {n} points")
    if radius < 0:
        raise GraphError(f"radius must be >= 0, got {radius}")
    d = distances_from(values, center_index)
    d[center_index] = np.inf
    return int(np.count_nonzero(d < radius))
