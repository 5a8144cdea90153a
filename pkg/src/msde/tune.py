"""Random hyperparameter search under a zero-leakage validation protocol.

Before any trial runs, a validation set is carved out: 20% of the normal
training rows and 10% of the test anomalies. Trials fit only on the
remaining training normals and are scored on that validation set; the
held-back test rows are never touched until the single final evaluation
of the winning parameters, which is retrained on all training normals.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .config import MsdeConfig
from .data import DatasetSplit, EmbeddingMatrix
from .exceptions import MsdeError, SplitError
from .metrics import MetricResult
from .scoring import score_pipeline
from .shift import ShiftParams

logger = logging.getLogger(__name__)

DEFAULT_TRIALS = 80


@dataclass(frozen=True)
class SearchSpace:
    """Sampling ranges for the five shift hyperparameters.

    Integer and plain-real ranges are sampled uniformly; ``tol`` is
    sampled log-uniformly. Bounds are inclusive.
    """

    k: tuple[int, int] = (5, 60)
    t_nbd: tuple[int, int] = (3, 80)
    eta: tuple[float, float] = (0.01, 0.5)
    max_iters: tuple[int, int] = (3, 12)
    tol: tuple[float, float] = (1e-4, 0.05)

    def sample(self, rng: np.random.Generator) -> ShiftParams:
        """One draw; the draw order is fixed and part of the contract."""
        k = int(rng.integers(self.k[0], self.k[1] + 1))
        t_nbd = int(rng.integers(self.t_nbd[0], self.t_nbd[1] + 1))
        eta = float(rng.uniform(self.eta[0], self.eta[1]))
        max_iters = int(rng.integers(self.max_iters[0], self.max_iters[1] + 1))
        log_lo, log_hi = math.log(self.tol[0]), math.log(self.tol[1])
        tol = float(math.exp(rng.uniform(log_lo, log_hi)))
        return ShiftParams(k=k, eta=eta, max_iters=max_iters, tol=tol, t_nbd=t_nbd)


@dataclass(frozen=True)
class LeakageSplit:
    """Disjoint partitions for tuning without touching the final test set."""

    fit_train: EmbeddingMatrix
    val_normals: EmbeddingMatrix
    val_anomalies: EmbeddingMatrix
    final_test: DatasetSplit

    def validation_split(self) -> DatasetSplit:
        """Trial-time split: reduced train vs the labeled validation set."""
        values = np.vstack([self.val_normals.values, self.val_anomalies.values])
        ids = self.val_normals.row_ids + self.val_anomalies.row_ids
        labels = np.concatenate([
            np.zeros(self.val_normals.n_samples, dtype=np.int64),
            np.ones(self.val_anomalies.n_samples, dtype=np.int64),
        ])
        return DatasetSplit(
            train=self.fit_train,
            test=EmbeddingMatrix(values, ids, labels),
        )


@dataclass(frozen=True)
class TrialRecord:
    trial_index: int
    params: ShiftParams
    val_auc: float
    val_ap: float
    seed: int


def make_leakage_split(split: DatasetSplit, seed: int) -> LeakageSplit:
    """Deterministic shuffled partition; fractions floor toward validation."""
    n_train = split.train.n_samples
    test_labels = split.test.labels
    anom_idx = np.flatnonzero(test_labels == 1)
    norm_idx = np.flatnonzero(test_labels == 0)
    if n_train < 5 or anom_idx.size < 10:
        raise SplitError(
            f"leakage split needs >= 5 training normals and >= 10 test "
            f"anomalies, got {n_train} and {anom_idx.size}"
        )
    # floor(0.2 n) and floor(0.1 m) in exact integer arithmetic
    n_val_norm = n_train // 5
    n_val_anom = anom_idx.size // 10

    rng = np.random.default_rng(seed)
    train_perm = rng.permutation(n_train)
    anom_perm = anom_idx[rng.permutation(anom_idx.size)]

    val_norm_rows = np.sort(train_perm[:n_val_norm])
    fit_rows = np.sort(train_perm[n_val_norm:])
    val_anom_rows = np.sort(anom_perm[:n_val_anom])
    kept_anom_rows = np.sort(anom_perm[n_val_anom:])
    final_rows = np.sort(np.concatenate([norm_idx, kept_anom_rows]))

    return LeakageSplit(
        fit_train=split.train.take(fit_rows),
        val_normals=split.train.take(val_norm_rows),
        val_anomalies=split.test.take(val_anom_rows),
        final_test=DatasetSplit(train=split.train, test=split.test.take(final_rows)),
    )


def random_search(
    split: DatasetSplit,
    space: SearchSpace,
    n_trials: int = DEFAULT_TRIALS,
    seed: int = 0,
    base_config: MsdeConfig | None = None,
    trial_observer: Callable[[int, tuple, tuple], None] | None = None,
) -> tuple[TrialRecord, list[TrialRecord], MetricResult]:
    """Maximize validation AUC over random draws, then evaluate once.

    Each trial's RNG is seeded with ``seed + trial_index``, so trial
    results do not depend on execution order. Trials that fail record a
    sentinel AUC of -1 and never win. Ties go to the lowest trial index.
    ``trial_observer`` (if given) receives the row ids each trial sees,
    which is how the leakage audit is instrumented.
    """
    if n_trials < 1:
        raise SplitError(f"n_trials must be >= 1, got {n_trials}")
    base = base_config if base_config is not None else MsdeConfig()
    leakage = make_leakage_split(split, seed)
    val_split = leakage.validation_split()

    records: list[TrialRecord] = []
    for index in range(n_trials):
        trial_seed = seed + index
        params = space.sample(np.random.default_rng(trial_seed))
        config = replace(base, shift=params, seed=trial_seed)
        if trial_observer is not None:
            trial_observer(index, val_split.train.row_ids, val_split.test.row_ids)
        try:
            report = score_pipeline(val_split, config)
            val_auc = report.metrics.auc
            val_ap = report.metrics.ap
        except (MsdeError, np.linalg.LinAlgError, FloatingPointError) as exc:
            logger.warning("trial %d failed: %s", index, exc)
            val_auc = -1.0
            val_ap = -1.0
        records.append(TrialRecord(index, params, val_auc, val_ap, trial_seed))
        logger.info("trial %d: val_auc=%.4f val_ap=%.4f %s",
                    index, val_auc, val_ap, params)

    best = max(records, key=lambda r: (r.val_auc, -r.trial_index))
    final_config = replace(base, shift=best.params, seed=seed)
    final_report = score_pipeline(leakage.final_test, final_config)
    return best, records, final_report.metrics
