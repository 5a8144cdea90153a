"""Ranking metrics with exact tie handling, plus brute-force oracles.

AUC-ROC is the Mann-Whitney statistic (half credit for ties), computed
from midranks in O(n log n); the oracle counts all positive-negative
pairs. Average precision integrates the precision-recall step curve with
tied scores processed as single blocks, making the value independent of
input order; the oracle walks the ranking explicitly. Both fast paths and
oracles build identical per-term expressions and reduce with exact
summation, so equality checks carry zero tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .exceptions import MetricError


@dataclass(frozen=True)
class MetricResult:
    auc: float
    ap: float
    n_pos: int
    n_neg: int

    def as_dict(self) -> dict:
        return {"auc": self.auc, "ap": self.ap,
                "n_pos": self.n_pos, "n_neg": self.n_neg}


def _check_inputs(scores, labels, need_neg: bool):
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.ndim != 1 or scores.shape != labels.shape:
        raise MetricError(
            f"scores {scores.shape} and labels {labels.shape} must be equal-length vectors"
        )
    if labels.size and not np.isin(labels, (0, 1)).all():
        raise MetricError("labels must be 0 or 1")
    n_pos = int(np.count_nonzero(labels == 1))
    n_neg = int(np.count_nonzero(labels == 0))
    if n_pos < 1:
        raise MetricError("metric needs at least one positive label")
    if need_neg and n_neg < 1:
        raise MetricError("metric needs at least one negative label")
    return scores, np.asarray(labels, dtype=np.int64), n_pos, n_neg


def auc_roc(scores, labels) -> float:
    """Probability a random positive outscores a random negative.

    Midranks give ties exactly half credit; rank sums are multiples of
    0.5 and hence exact in float64.
    """
    scores, labels, n_pos, n_neg = _check_inputs(scores, labels, need_neg=True)
    ranks = rankdata(scores, method="average")
    pos_rank_sum = float(ranks[labels == 1].sum())
    return (pos_rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def auc_roc_pairwise(scores, labels) -> float:
    """O(n^2) oracle: explicit win/tie counting over all pos-neg pairs."""
    scores, labels, n_pos, n_neg = _check_inputs(scores, labels, need_neg=True)
    pos = scores[labels == 1][:, None]
    neg = scores[labels == 0][None, :]
    wins = np.count_nonzero(pos > neg) + 0.5 * np.count_nonzero(pos == neg)
    return wins / (n_pos * n_neg)


def _tie_blocks(scores: np.ndarray):
    """Indices sorted by descending score plus block-end positions."""
    order = np.argsort(-scores, kind="stable")
    sorted_scores = scores[order]
    ends = np.flatnonzero(np.diff(sorted_scores) != 0.0)
    ends = np.concatenate([ends, [scores.size - 1]])
    return order, ends


def average_precision(scores, labels) -> float:
    """Step integral of precision over recall, ties as single blocks."""
    scores, labels, n_pos, _ = _check_inputs(scores, labels, need_neg=False)
    order, ends = _tie_blocks(scores)
    cum_tp = np.cumsum(labels[order])[ends]
    prev_tp = np.concatenate([[0], cum_tp[:-1]])
    cum_k = ends + 1
    terms = ((cum_tp - prev_tp) / n_pos) * (cum_tp / cum_k)
    return math.fsum(terms.tolist())


def average_precision_stepwise(scores, labels) -> float:
    """Oracle: explicit precision/recall bookkeeping along the ranking."""
    scores, labels, n_pos, _ = _check_inputs(scores, labels, need_neg=False)
    items = sorted(zip(scores.tolist(), labels.tolist()), key=lambda p: -p[0])
    terms = []
    tp = 0
    seen = 0
    i = 0
    while i < len(items):
        j = i
        block_tp = 0
        while j < len(items) and items[j][0] == items[i][0]:
            block_tp += items[j][1]
            j += 1
        tp += block_tp
        seen = j
        terms.append((block_tp / n_pos) * (tp / seen))
        i = j
    return math.fsum(terms)


def evaluate(scores, labels) -> MetricResult:
    """Both metrics at once; requires at least one sample of each class."""
    _, _, n_pos, n_neg = _check_inputs(scores, labels, need_neg=True)
    return MetricResult(
        auc=auc_roc(scores, labels),
        ap=average_precision(scores, labels),
        n_pos=n_pos,
        n_neg=n_neg,
    )


def metrics_json(result: MetricResult) -> str:
    """CLI representation: six decimal places for the metric values."""
    return (
        "{"
        f"\"auc\": {result.auc:.6f}, \"ap\": {result.ap:.6f}, "
        f"\"n_pos\": {result.n_pos}, \"n_neg\": {result.n_neg}"
        "}"
    )
