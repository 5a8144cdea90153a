"""PCA reduction, regularized Gaussian fitting, Mahalanobis scoring.

The model is fitted on (solo-)shifted training embeddings only: PCA by
symmetric eigendecomposition of the sample covariance, then a Gaussian
with Tikhonov-regularized covariance whose inverse is applied through a
Cholesky factorization. Raw test scores are Mahalanobis distances;
normalized scores squash their z-scores through a logistic map.
"""

from __future__ import annotations

import json
import logging
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve, eigh
from scipy.special import expit

from .config import MsdeConfig
from .data import DatasetSplit, EmbeddingMatrix, apply_standardizer, fit_standardizer
from .exceptions import FitError, NumericError, ShapeError
from .metrics import MetricResult, evaluate
from .shift import ShiftTrace, _joint_shift_parts
from .weights import DensityWeights

logger = logging.getLogger(__name__)

# Spread below this makes z-scoring meaningless; scores collapse to 0.5.
NORMALIZE_STD_FLOOR = 1e-12


@dataclass(frozen=True)
class PcaBasis:
    """Orthonormal top principal directions of the training distribution."""

    center: np.ndarray               # (input_dim,)
    components: np.ndarray           # (reduced_dim, input_dim), rows orthonormal
    explained_variance: np.ndarray   # (reduced_dim,), nonincreasing

    @property
    def input_dim(self) -> int:
        return self.components.shape[1]

    @property
    def reduced_dim(self) -> int:
        return self.components.shape[0]


@dataclass(frozen=True)
class GaussianScorer:
    """Fitted reduced-space Gaussian with regularized covariance."""

    basis: PcaBasis
    mu: np.ndarray
    sigma: np.ndarray       # covariance + lam * I
    precision: np.ndarray   # explicit inverse, kept for serialization/tests
    lam: float

    def __post_init__(self):
        # Scoring always goes through the factorization, not `precision`.
        try:
            object.__setattr__(self, "_factor", cho_factor(self.sigma, lower=True))
        except np.linalg.LinAlgError as exc:
            raise NumericError(f"covariance factorization failed: {exc}") from exc

    def factor(self):
        return self._factor


@dataclass(frozen=True)
class ScoreReport:
    """Per-test-sample scores with labels, metrics, and shift diagnostics."""

    row_ids: tuple[str, ...]
    raw: np.ndarray
    normalized: np.ndarray
    labels: np.ndarray
    metrics: MetricResult | None = None
    solo_trace: ShiftTrace | None = None
    joint_trace: ShiftTrace | None = None
    solo_weights: "DensityWeights | None" = None
    joint_weights: "DensityWeights | None" = None


def fit_pca(train_shifted: EmbeddingMatrix, reduced_dim: int) -> PcaBasis:
    """Top principal components of the sample covariance (divisor n-1).

    Eigenvector sign is pinned by making each component's largest-magnitude
    entry positive; ``reduced_dim`` is clamped to min(input_dim, n-1).
    """
    x = train_shifted.values
    n, d = x.shape
    if n < 2:
        raise FitError(f"PCA needs at least 2 training rows, got {n}")
    if reduced_dim < 1:
        raise FitError(f"reduced_dim must be >= 1, got {reduced_dim}")
    max_dim = min(d, n - 1)
    if reduced_dim > max_dim:
        warnings.warn(
            f"reduced_dim={reduced_dim} clamped to {max_dim} "
            f"(input_dim={d}, n_train={n})"
        )
        reduced_dim = max_dim

    center = x.mean(axis=0)
    centered = x - center
    cov = centered.T @ centered / (n - 1)
    eigvals, eigvecs = eigh(cov)
    order = np.argsort(eigvals)[::-1][:reduced_dim]
    variance = np.maximum(eigvals[order], 0.0)
    components = eigvecs[:, order].T.copy()
    for row in components:
        if row[np.argmax(np.abs(row))] < 0:
            row *= -1.0
    return PcaBasis(center=center, components=components,
                    explained_variance=variance)


def project(basis: PcaBasis, x: EmbeddingMatrix) -> EmbeddingMatrix:
    """Center and rotate rows into the reduced space; ids/labels kept."""
    if x.dim != basis.input_dim:
        raise ShapeError(
            f"projection expects dim {basis.input_dim}, got {x.dim}"
        )
    reduced = (x.values - basis.center) @ basis.components.T
    return EmbeddingMatrix(reduced, x.row_ids, x.labels)


def fit_gaussian(z_train: EmbeddingMatrix, lam: float,
                 basis: PcaBasis | None = None) -> GaussianScorer:
    """Mean and regularized covariance of the reduced training sample."""
    z = z_train.values
    n, d = z.shape
    if n < 2:
        raise FitError(f"Gaussian fit needs at least 2 rows, got {n}")
    if not lam > 0.0:
        raise FitError(f"lambda must be > 0, got {lam}")
    mu = z.mean(axis=0)
    centered = z - mu
    sigma = centered.T @ centered / (n - 1) + lam * np.eye(d)
    try:
        factor = cho_factor(sigma, lower=True)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"covariance factorization failed: {exc}") from exc
    precision = cho_solve(factor, np.eye(d))
    precision = 0.5 * (precision + precision.T)  # symmetrize solver round-off
    if basis is None:
        basis = PcaBasis(center=np.zeros(d), components=np.eye(d),
                         explained_variance=np.ones(d))
    return GaussianScorer(basis=basis, mu=mu, sigma=sigma,
                          precision=precision, lam=lam)


def mahalanobis(scorer: GaussianScorer, z) -> np.ndarray | float:
    """Covariance-aware distance from the fitted mean, via the factorization."""
    z = np.asarray(z, dtype=np.float64)
    single = z.ndim == 1
    rows = z[None, :] if single else z
    if rows.shape[1] != scorer.mu.shape[0]:
        raise ShapeError(
            f"scorer expects dim {scorer.mu.shape[0]}, got {rows.shape[1]}"
        )
    diff = rows - scorer.mu
    solved = cho_solve(scorer.factor(), diff.T)
    sq = np.einsum("ij,ji->i", diff, solved)
    out = np.sqrt(np.maximum(sq, 0.0))
    return float(out[0]) if single else out


def normalize_scores(raw) -> np.ndarray:
    """Logistic map of the scores' own z-scores; constant input -> 0.5."""
    raw = np.asarray(raw, dtype=np.float64)
    if raw.size == 0:
        return raw.copy()
    std = raw.std()  # population std, divisor n
    if std < NORMALIZE_STD_FLOOR:
        return np.full(raw.shape, 0.5)
    return expit((raw - raw.mean()) / std)


def score_pipeline(split: DatasetSplit, config: MsdeConfig) -> ScoreReport:
    """End-to-end scoring: standardize, shift, fit, project, score.

    PCA and the Gaussian are fitted on the solo-shifted train set (or the
    joint-shifted train rows when ``fit_on_joint`` is set); test rows are
    always scored from the joint run.
    """
    if config.standardize:
        standardizer = fit_standardizer(split.train)
        split = DatasetSplit(
            train=apply_standardizer(standardizer, split.train),
            test=apply_standardizer(standardizer, split.test),
        )
    solo, train_joint, test_shifted = _joint_shift_parts(
        split, config.shift, static_graph=config.static_graph,
        threads=config.threads,
    )
    fit_source = train_joint.points if config.fit_on_joint else solo.points

    basis = fit_pca(fit_source, config.pca_dim)
    z_train = project(basis, fit_source)
    scorer = fit_gaussian(z_train, config.lam, basis=basis)
    z_test = project(basis, test_shifted)
    raw = mahalanobis(scorer, z_test.values) if z_test.n_samples else np.empty(0)
    normalized = normalize_scores(raw)

    labels = test_shifted.labels
    metrics = None
    if labels is not None and 0 < int(labels.sum()) < labels.size:
        metrics = evaluate(raw, labels)
    else:
        warnings.warn("test labels contain a single class; metrics skipped")
    return ScoreReport(
        row_ids=test_shifted.row_ids,
        raw=np.asarray(raw, dtype=np.float64),
        normalized=normalized,
        labels=labels if labels is not None else np.zeros(0, dtype=np.int64),
        metrics=metrics,
        solo_trace=solo.trace,
        joint_trace=train_joint.trace,
        solo_weights=solo.weights_used,
        joint_weights=train_joint.weights_used,
    )


def save_scorer(scorer: GaussianScorer, path) -> None:
    """Persist the fitted model as a single npz bundle, floats bit-exact."""
    meta = json.dumps({"lambda": scorer.lam, "format": "msde-scorer-v1"})
    np.savez(
        path,
        center=scorer.basis.center,
        components=scorer.basis.components,
        explained_variance=scorer.basis.explained_variance,
        mu=scorer.mu,
        sigma=scorer.sigma,
        precision=scorer.precision,
        meta=np.array(meta),
    )


def load_scorer(path) -> GaussianScorer:
    with np.load(path, allow_pickle=False) as bundle:
        meta = json.loads(str(bundle["meta"]))
        basis = PcaBasis(
            center=bundle["center"],
            components=bundle["components"],
            explained_variance=bundle["explained_variance"],
        )
        return GaussianScorer(
            basis=basis,
            mu=bundle["mu"],
            sigma=bundle["sigma"],
            precision=bundle["precision"],
            lam=float(meta["lambda"]),
        )
