"""Iterative density-weighted mean-shift refinement of embeddings.

Each iteration rebuilds the k-NN graph on the current coordinates, moves
every point a fraction ``eta`` of the way toward the density-weighted
mean of its neighborhood (all updates from the iteration-start snapshot),
and stops once the mean displacement drops below ``tol`` or after
``max_iters`` iterations. Density weights are computed once per run, on
the points as given.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .data import DatasetSplit, EmbeddingMatrix, concat_matrices
from .exceptions import ConfigError, GraphError, NumericError
from .knn import NeighborGraph, build_knn_graph
from .weights import DensityWeights, compute_empirical_weights

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ShiftParams:
    """Shift hyperparameters; defaults are the fixed universal settings.

    ``max_iters = 0`` is the explicit no-shift baseline: points pass
    through unchanged.
    """

    k: int = 50
    eta: float = 0.33
    max_iters: int = 8
    tol: float = 0.01
    t_nbd: int = 70
    k_umap: int = 15

    def __post_init__(self):
        if not 0.0 < self.eta <= 1.0:
            raise ConfigError(f"eta must be in (0, 1], got {self.eta}")
        if self.max_iters < 0:
            raise ConfigError(f"max_iters must be >= 0, got {self.max_iters}")
        if not self.tol > 0.0:
            raise ConfigError(f"tol must be > 0, got {self.tol}")
        if self.k < 1:
            raise ConfigError(f"k must be >= 1, got {self.k}")
        if self.t_nbd < 1:
            raise ConfigError(f"t_nbd must be >= 1, got {self.t_nbd}")
        if self.k_umap < 2:
            raise ConfigError(f"k_umap must be >= 2, got {self.k_umap}")


@dataclass(frozen=True)
class ShiftTrace:
    """Mean displacement per iteration and whether the run converged."""

    iterations_run: int
    deltas: tuple[float, ...] = field(default_factory=tuple)
    converged: bool = False


@dataclass(frozen=True)
class ShiftedEmbeddings:
    points: EmbeddingMatrix
    trace: ShiftTrace
    weights_used: DensityWeights | None


def _step_values(values: np.ndarray, graph: NeighborGraph,
                 weights: np.ndarray, eta: float,
                 block_rows: int = 1024) -> tuple[np.ndarray, float]:
    """One synchronous update from the snapshot; returns (new, mean shift).

    Neighborhoods whose weights sum to zero fall back to the unweighted
    neighborhood mean so the target stays defined.
    """
    n = values.shape[0]
    w = weights[graph.neighbors]
    wsum = w.sum(axis=1)
    new = np.empty_like(values)
    for start in range(0, n, block_rows):
        stop = min(start + block_rows, n)
        nb = values[graph.neighbors[start:stop]]
        weighted = (w[start:stop, :, None] * nb).sum(axis=1)
        block_sum = wsum[start:stop]
        zero = block_sum == 0.0
        safe = np.where(zero, 1.0, block_sum)
        targets = weighted / safe[:, None]
        if zero.any():
            targets[zero] = nb[zero].mean(axis=1)
        if eta == 1.0:
            # algebraically x + 1*(t - x) = t; take it exactly
            new[start:stop] = targets
        else:
            new[start:stop] = values[start:stop] + eta * (targets - values[start:stop])
    if not np.all(np.isfinite(new)):
        bad = int(np.argwhere(~np.isfinite(new))[0][0])
        raise NumericError(f"non-finite coordinates after shift step at row {bad}")
    moved = new - values
    delta = float(np.sqrt(np.einsum("ij,ij->i", moved, moved)).mean())
    return new, delta


def shift_step(points: EmbeddingMatrix, graph: NeighborGraph,
               weights: DensityWeights, eta: float) -> tuple[EmbeddingMatrix, float]:
    """Single weighted mean-shift update over an existing graph."""
    if not 0.0 < eta <= 1.0:
        raise ConfigError(f"eta must be in (0, 1], got {eta}")
    if graph.n_samples != points.n_samples:
        raise GraphError(
            f"graph built for {graph.n_samples} points, got {points.n_samples}"
        )
    new, delta = _step_values(points.values, graph, weights.weights, eta)
    return points.with_values(new), delta


def run_shift(points: EmbeddingMatrix, params: ShiftParams,
              static_graph: bool = False, threads: int = 1) -> ShiftedEmbeddings:
    """Full refinement loop: weights once, then iterate graph + step."""
    if params.max_iters == 0:
        return ShiftedEmbeddings(points, ShiftTrace(0, (), False), None)
    if points.n_samples < 2:
        raise GraphError(f"shift needs at least 2 points, got {points.n_samples}")

    weights = compute_empirical_weights(
        points, params.t_nbd, params.k_umap, threads=threads
    )
    values = points.values
    deltas: list[float] = []
    converged = False
    graph = None
    for iteration in range(1, params.max_iters + 1):
        if graph is None or not static_graph:
            graph = build_knn_graph(values, params.k, threads=threads)
        values, delta = _step_values(values, graph, weights.weights, params.eta)
        deltas.append(delta)
        logger.info("shift iteration %d: mean displacement %.6g", iteration, delta)
        if delta < params.tol:
            converged = True
            break
    trace = ShiftTrace(len(deltas), tuple(deltas), converged)
    return ShiftedEmbeddings(points.with_values(values), trace, weights)


def _joint_shift_parts(split: DatasetSplit, params: ShiftParams,
                       static_graph: bool = False, threads: int = 1):
    """Solo train run plus the union run, split back into train/test parts."""
    solo = run_shift(split.train, params, static_graph=static_graph, threads=threads)
    n_train = split.train.n_samples
    if split.test.n_samples == 0:
        empty = EmbeddingMatrix(
            np.empty((0, split.train.dim)), (), np.empty(0, dtype=np.int64)
        )
        return solo, solo, empty

    union = concat_matrices(split.train, split.test, ("train", "test"))
    joint = run_shift(union, params, static_graph=static_graph, threads=threads)
    joint_values = joint.points.values
    train_joint = ShiftedEmbeddings(
        split.train.with_values(joint_values[:n_train]), joint.trace,
        joint.weights_used,
    )
    test_joint = EmbeddingMatrix(
        joint_values[n_train:], split.test.row_ids, split.test.labels
    )
    return solo, train_joint, test_joint


def joint_shift(split: DatasetSplit, params: ShiftParams,
                static_graph: bool = False,
                threads: int = 1) -> tuple[ShiftedEmbeddings, EmbeddingMatrix]:
    """Refine train alone (for model fitting) and train+test jointly.

    The union run recomputes weights and radii from scratch; only its test
    rows are kept, so the fitted model sees the solo-shifted train while
    test samples are scored from geometry consistent with the train set.
    """
    solo, _, test_joint = _joint_shift_parts(
        split, params, static_graph=static_graph, threads=threads
    )
    return solo, test_joint
