"""Embedding datasets: loading, validation, standardization, synthesis.

All pipeline arithmetic is done in float64 regardless of the width of the
input files; matrices are widened on load so downstream results do not
depend on storage precision.
"""

from __future__ import annotations

import csv
import logging
import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import npyio
from .exceptions import ConfigError, FitError, LoadError, ShapeError

logger = logging.getLogger(__name__)

# Standard deviations below this are treated as constant columns and
# replaced by 1.0 so standardization passes them through unscaled.
STD_FLOOR = 1e-8


def default_row_ids(n: int, prefix: str = "row") -> tuple[str, ...]:
    """Positional identifiers used when a format carries no ids of its own."""
    return tuple(f"{prefix}_{i:06d}" for i in range(n))


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class EmbeddingMatrix:
    """n samples of d-dimensional real vectors with stable row identifiers.

    ``labels``, when present, holds one binary flag per row
    (0 = normal, 1 = anomalous). Values are validated finite on
    construction. Zero-row matrices are representable so that empty test
    sets can flow through the pipeline; loaders reject them.
    """

    values: np.ndarray
    row_ids: tuple[str, ...]
    labels: np.ndarray | None = None

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64, order="C", ndmin=2)
        if values.ndim != 2:
            raise ShapeError(f"embedding values must be 2-D, got shape {values.shape}")
        if values.shape[1] < 1:
            raise ShapeError("embedding dimension must be at least 1")
        if not np.all(np.isfinite(values)):
            bad = np.argwhere(~np.isfinite(values))[0]
            raise LoadError(
                f"non-finite value at row {bad[0]}, column {bad[1]}"
            )
        object.__setattr__(self, "values", _readonly(values))

        row_ids = tuple(str(r) for r in self.row_ids)
        if len(row_ids) != values.shape[0]:
            raise ShapeError(
                f"{len(row_ids)} row ids for {values.shape[0]} rows"
            )
        if len(set(row_ids)) != len(row_ids):
            raise LoadError("row ids are not unique")
        object.__setattr__(self, "row_ids", row_ids)

        if self.labels is not None:
            labels = np.asarray(self.labels, dtype=np.int64)
            if labels.shape != (values.shape[0],):
                raise ShapeError(
                    f"labels shape {labels.shape} does not match {values.shape[0]} rows"
                )
            if labels.size and not np.isin(labels, (0, 1)).all():
                raise LoadError("labels must be 0 or 1")
            object.__setattr__(self, "labels", _readonly(labels))

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def with_values(self, values: np.ndarray) -> "EmbeddingMatrix":
        """Same rows and labels, new coordinates (shape must be preserved)."""
        values = np.asarray(values)
        if values.shape != self.values.shape:
            raise ShapeError(
                f"replacement values {values.shape} != original {self.values.shape}"
            )
        return EmbeddingMatrix(values, self.row_ids, self.labels)

    def take(self, indices: np.ndarray) -> "EmbeddingMatrix":
        """Row subset in the given order."""
        indices = np.asarray(indices, dtype=np.intp)
        ids = tuple(self.row_ids[i] for i in indices)
        labels = self.labels[indices] if self.labels is not None else None
        return EmbeddingMatrix(self.values[indices], ids, labels)


def concat_matrices(a: EmbeddingMatrix, b: EmbeddingMatrix,
                    id_prefixes: tuple[str, str] = ("a", "b")) -> EmbeddingMatrix:
    """Stack two matrices; ids are prefixed so identical ids cannot collide."""
    if a.dim != b.dim:
        raise ShapeError(f"cannot concatenate dims {a.dim} and {b.dim}")
    ids = tuple(f"{id_prefixes[0]}:{r}" for r in a.row_ids) + tuple(
        f"{id_prefixes[1]}:{r}" for r in b.row_ids
    )
    return EmbeddingMatrix(np.vstack([a.values, b.values]), ids, None)


@dataclass(frozen=True)
class DatasetSplit:
    """One-class split: unlabeled (or all-normal) train, labeled test."""

    train: EmbeddingMatrix
    test: EmbeddingMatrix

    def __post_init__(self):
        if self.train.labels is not None and self.train.labels.any():
            raise LoadError("train split contains anomalous labels; one-class "
                            "training requires normal samples only")
        if self.test.labels is None:
            raise LoadError("test split requires labels")
        if self.train.dim != self.test.dim:
            raise ShapeError(
                f"train dim {self.train.dim} != test dim {self.test.dim}"
            )


@dataclass(frozen=True)
class Standardizer:
    """Per-dimension affine transform fitted on training rows only."""

    mean: np.ndarray
    std: np.ndarray

    @property
    def dim(self) -> int:
        return self.mean.shape[0]


def fit_standardizer(train: EmbeddingMatrix) -> Standardizer:
    """Column means and sample stds (divisor n-1); stds are floored.

    Columns whose sample std falls below ``STD_FLOOR`` get std 1.0 so a
    constant feature passes through unscaled instead of dividing by ~0.
    """
    if train.n_samples < 2:
        raise FitError(
            f"standardizer needs at least 2 training rows, got {train.n_samples}"
        )
    mean = train.values.mean(axis=0)
    std = train.values.std(axis=0, ddof=1)
    std = np.where(std < STD_FLOOR, 1.0, std)
    return Standardizer(_readonly(mean), _readonly(std))


def apply_standardizer(s: Standardizer, x: EmbeddingMatrix) -> EmbeddingMatrix:
    if x.dim != s.dim:
        raise ShapeError(f"standardizer dim {s.dim} != data dim {x.dim}")
    return x.with_values((x.values - s.mean) / s.std)


@dataclass(frozen=True)
class SyntheticSpec:
    """Isotropic Gaussian blobs: normals at the origin, anomalies displaced
    by ``anomaly_offset`` along the first axis."""

    dim: int = 8
    n_train: int = 200
    n_test_normal: int = 50
    n_test_anomalous: int = 50
    anomaly_offset: float = 3.0
    noise_scale: float = 1.0

    def __post_init__(self):
        for name in ("dim", "n_train", "n_test_normal", "n_test_anomalous"):
            if getattr(self, name) < 1:
                raise ConfigError(f"synthetic spec: {name} must be >= 1")
        if not self.noise_scale > 0:
            raise ConfigError("synthetic spec: noise_scale must be > 0")


def generate_synthetic(spec: SyntheticSpec, seed: int) -> DatasetSplit:
    """Deterministic blob dataset; a pure function of (spec, seed)."""
    rng = np.random.default_rng(seed)
    train = rng.normal(0.0, spec.noise_scale, size=(spec.n_train, spec.dim))
    test_normal = rng.normal(0.0, spec.noise_scale, size=(spec.n_test_normal, spec.dim))
    anomalies = rng.normal(0.0, spec.noise_scale, size=(spec.n_test_anomalous, spec.dim))
    anomalies[:, 0] += spec.anomaly_offset

    test_values = np.vstack([test_normal, anomalies])
    labels = np.concatenate(
        [np.zeros(spec.n_test_normal, dtype=np.int64),
         np.ones(spec.n_test_anomalous, dtype=np.int64)]
    )
    return DatasetSplit(
        train=EmbeddingMatrix(train, default_row_ids(spec.n_train, "train")),
        test=EmbeddingMatrix(test_values, default_row_ids(len(labels), "test"), labels),
    )


# ---------------------------------------------------------------------------
# File I/O
# ---------------------------------------------------------------------------

def _parse_csv_matrix(path: Path) -> np.ndarray:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    rows = [r for r in rows if r and not (len(r) == 1 and r[0].strip() == "")]
    if not rows:
        raise LoadError(f"{path}: file is empty")

    def parse_row(cells, line_no):
        out = []
        for j, cell in enumerate(cells):
            try:
                v = float(cell)
            except ValueError:
                raise LoadError(
                    f"{path}: cell at line {line_no}, column {j + 1} is not a "
                    f"number: {cell.strip()!r}"
                ) from None
            if not math.isfinite(v):
                raise LoadError(
                    f"{path}: non-finite value {cell.strip()!r} at line "
                    f"{line_no}, column {j + 1}"
                )
            out.append(v)
        return out

    # Header auto-detection: first row is a header iff any cell fails to parse.
    start = 0
    try:
        [float(c) for c in rows[0]]
    except ValueError:
        start = 1
    if start == 1 and len(rows) == 1:
        raise LoadError(f"{path}: header only, no data rows")

    width = len(rows[start])
    data = []
    for i, cells in enumerate(rows[start:], start=start + 1):
        if len(cells) != width:
            raise LoadError(
                f"{path}: line {i} has {len(cells)} fields, expected {width}"
            )
        data.append(parse_row(cells, i))
    return np.array(data, dtype=np.float64)


def load_embeddings(path: str | Path, format: str | None = None,
                    id_prefix: str = "row") -> EmbeddingMatrix:
    """Load a 2-D embedding matrix from ``.npy`` or ``.csv``.

    Neither format carries row identifiers, so positional ids
    ``{id_prefix}_NNNNNN`` are assigned; the CLI loads train and test with
    distinct prefixes so their ids never collide.
    """
    path = Path(path)
    if format is None:
        suffix = path.suffix.lower()
        if suffix == ".npy":
            format = "npy"
        elif suffix == ".csv":
            format = "csv"
        else:
            raise LoadError(f"{path}: cannot infer format from suffix {suffix!r}")
    if format == "npy":
        values = npyio.read_matrix(path)
    elif format == "csv":
        values = _parse_csv_matrix(path)
    else:
        raise LoadError(f"unknown format {format!r}, expected 'npy' or 'csv'")
    if values.shape[0] < 1 or values.shape[1] < 1:
        raise LoadError(f"{path}: empty matrix of shape {values.shape}")
    return EmbeddingMatrix(values, default_row_ids(values.shape[0], id_prefix))


def save_embeddings(matrix: EmbeddingMatrix, path: str | Path) -> None:
    """Persist values only (ids are positional); format chosen by suffix."""
    path = Path(path)
    if path.suffix.lower() == ".npy":
        npyio.write_matrix(path, matrix.values)
    elif path.suffix.lower() == ".csv":
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for row in matrix.values:
                fh.write(",".join(f"{v:.17g}" for v in row) + "\n")
    else:
        raise LoadError(f"{path}: unknown output suffix")


def load_labels(path: str | Path) -> dict[str, int]:
    """Sidecar label file: ``row_id,label`` rows, optional header."""
    path = Path(path)
    with open(path, "r", encoding="utf-8", newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows:
        raise LoadError(f"{path}: label file is empty")
    if rows[0] and rows[0][0].strip().lower() == "row_id":
        rows = rows[1:]
    labels: dict[str, int] = {}
    for i, cells in enumerate(rows, start=1):
        if len(cells) < 2:
            raise LoadError(f"{path}: label line {i} needs row_id,label")
        rid = cells[0].strip()
        try:
            lab = int(cells[1])
        except ValueError:
            raise LoadError(
                f"{path}: label for {rid!r} is not an integer: {cells[1]!r}"
            ) from None
        if lab not in (0, 1):
            raise LoadError(f"{path}: label for {rid!r} must be 0 or 1, got {lab}")
        if rid in labels:
            raise LoadError(f"{path}: duplicate row id {rid!r}")
        labels[rid] = lab
    return labels


def attach_labels(matrix: EmbeddingMatrix, labels: dict[str, int]) -> EmbeddingMatrix:
    """Join sidecar labels onto a matrix by row id; ids must match exactly."""
    missing = [r for r in matrix.row_ids if r not in labels]
    if missing:
        raise LoadError(
            f"label file is missing {len(missing)} row ids (first: {missing[0]!r})"
        )
    extra = set(labels) - set(matrix.row_ids)
    if extra:
        raise LoadError(
            f"label file has {len(extra)} unknown row ids (e.g. {sorted(extra)[0]!r})"
        )
    ordered = np.array([labels[r] for r in matrix.row_ids], dtype=np.int64)
    return EmbeddingMatrix(matrix.values, matrix.row_ids, ordered)


def save_scores(report, path: str | Path) -> None:
    """Write per-test-row scores as CSV, 17 significant digits.

    Header is ``row_id,label,raw_score,normalized_score``; row order matches
    the test matrix. 17 digits make the decimal round-trip bit-exact.
    """
    n = len(report.raw)
    if not (len(report.normalized) == len(report.labels) == len(report.row_ids) == n):
        raise ShapeError("score report fields disagree in length")
    if n == 0:
        warnings.warn("score report is empty; writing header-only file")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("row_id,label,raw_score,normalized_score\n")
        for rid, lab, raw, norm in zip(
            report.row_ids, report.labels, report.raw, report.normalized
        ):
            fh.write(f"{rid},{int(lab)},{raw:.17g},{norm:.17g}\n")
    logger.info("wrote %d scores to %s", n, path)


def load_scores(path: str | Path):
    """Read back a scores CSV into (row_ids, labels, raw, normalized)."""
    path = Path(path)
    with open(path, "r", encoding="utf-8", newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows or rows[0] != ["row_id", "label", "raw_score", "normalized_score"]:
        raise LoadError(f"{path}: not a scores CSV (bad header)")
    row_ids, labels, raw, norm = [], [], [], []
    for i, cells in enumerate(rows[1:], start=2):
        if len(cells) != 4:
            raise LoadError(f"{path}: line {i} has {len(cells)} fields, expected 4")
        row_ids.append(cells[0])
        try:
            labels.append(int(cells[1]))
            raw.append(float(cells[2]))
            norm.append(float(cells[3]))
        except ValueError as exc:
            raise LoadError(f"{path}: line {i}: {exc}") from None
    return (
        tuple(row_ids),
        np.array(labels, dtype=np.int64),
        np.array(raw, dtype=np.float64),
        np.array(norm, dtype=np.float64),
    )
