"""Datasets, linear source ensembles, CSV I/O, and synthetic task generation.

CSV conventions: UTF-8, comma-separated, header row.  Dataset files
carry feature columns plus a ``label`` column of +/-1.  Source files
carry one hypothesis per row as [name?, bias, w_1..w_d].  Precomputed
prediction files carry one column per source plus an optional ``label``
column, for black-box sources that are only available as predictions.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ParameterError, ValidationError
from .core import validate_labels

ALLOWED_TRAIN_POSITIVES = (1, 2, 5, 10)


# ---------------------------------------------------------------------------
# containers


@dataclass(eq=False)
class Dataset:
    """Feature matrix with +/-1 labels."""

    X: np.ndarray
    y: np.ndarray
    feature_names: tuple[str, ...] | None = None

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        if self.X.ndim != 2:
            raise DimensionError(f"X must be 2-dimensional, got ndim={self.X.ndim}")
        if not np.all(np.isfinite(self.X)):
            raise ValidationError("X contains non-finite values")
        self.y = validate_labels(self.y, self.X.shape[0])
        if self.feature_names is not None:
            self.feature_names = tuple(self.feature_names)
            if len(self.feature_names) != self.X.shape[1]:
                raise DimensionError(
                    f"{len(self.feature_names)} feature names for {self.X.shape[1]} columns"
                )

    @property
    def m(self) -> int:
        return int(self.X.shape[0])

    @property
    def d(self) -> int:
        return int(self.X.shape[1])


@dataclass(eq=False)
class SourceEnsemble:
    """Affine source hypotheses h_i(x) = w_i . x + b_i, one per row."""

    weights: np.ndarray
    biases: np.ndarray
    names: tuple[str, ...] | None = None

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        if self.weights.ndim != 2:
            raise DimensionError(
                f"weights must be 2-dimensional, got ndim={self.weights.ndim}"
            )
        self.biases = np.asarray(self.biases, dtype=float).ravel()
        if self.biases.size != self.weights.shape[0]:
            raise DimensionError(
                f"{self.biases.size} biases for {self.weights.shape[0]} sources"
            )
        if not (np.all(np.isfinite(self.weights)) and np.all(np.isfinite(self.biases))):
            raise ValidationError("source parameters contain non-finite values")
        if self.names is None:
            self.names = tuple(f"src{i}" for i in range(self.weights.shape[0]))
        else:
            self.names = tuple(self.names)
            if len(self.names) != self.weights.shape[0]:
                raise DimensionError(
                    f"{len(self.names)} names for {self.weights.shape[0]} sources"
                )

    @property
    def n_sources(self) -> int:
        return int(self.weights.shape[0])

    @property
    def n_features(self) -> int:
        return int(self.weights.shape[1])

    def predict(self, X) -> np.ndarray:
        return apply_sources(self, X)

    def tau_inf(self, X) -> float:
        """max_i ||h_i||_inf^2 over the given points."""
        preds = self.predict(X)
        return float(np.max(preds * preds)) if preds.size else 0.0

    def pad_features(self, new_d: int) -> "SourceEnsemble":
        """Zero-extend hypotheses to a wider feature space (appended dims ignored)."""
        if new_d < self.n_features:
            raise DimensionError(
                f"cannot pad {self.n_features}-feature sources down to {new_d}"
            )
        padded = np.zeros((self.n_sources, new_d))
        padded[:, : self.n_features] = self.weights
        return SourceEnsemble(weights=padded, biases=self.biases.copy(), names=self.names)


def apply_sources(sources: SourceEnsemble, X) -> np.ndarray:
    """Prediction matrix with one column per source hypothesis."""
    arr = np.asarray(X, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2:
        raise DimensionError(f"X must be 1- or 2-dimensional, got ndim={arr.ndim}")
    if arr.shape[1] != sources.n_features:
        raise DimensionError(
            f"sources expect {sources.n_features} features, got {arr.shape[1]}"
        )
    return arr @ sources.weights.T + sources.biases


@dataclass(eq=False)
class TransferTask:
    """Train/test split plus the source ensemble evaluated against it.

    ``ground_truth`` records the indices of truly relevant sources for
    synthetic tasks; None for real data.  Train and test rows must be
    disjoint and the positive training count must be one of the
    supported protocol sizes.
    """

    train: Dataset
    test: Dataset
    sources: SourceEnsemble
    ground_truth: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.train.d != self.test.d:
            raise DimensionError(
                f"train has {self.train.d} features but test has {self.test.d}"
            )
        if self.sources.n_features != self.train.d:
            raise DimensionError(
                f"sources expect {self.sources.n_features} features, data has {self.train.d}"
            )
        train_rows = {row.tobytes() for row in self.train.X}
        for row in self.test.X:
            if row.tobytes() in train_rows:
                raise ValidationError("train and test sets share a row")
        n_pos = int(np.sum(self.train.y == 1))
        if n_pos not in ALLOWED_TRAIN_POSITIVES:
            raise ParameterError(
                f"train positive count must be one of {ALLOWED_TRAIN_POSITIVES}, got {n_pos}"
            )
        if self.ground_truth is not None:
            self.ground_truth = tuple(int(i) for i in self.ground_truth)
            for i in self.ground_truth:
                if not 0 <= i < self.sources.n_sources:
                    raise ValidationError(f"ground-truth source index {i} out of range")


# ---------------------------------------------------------------------------
# CSV I/O

LABEL_COLUMN = "label"


def _read_rows(path):
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise ValidationError(f"{path}: empty file")
    return rows


def _parse_cell(cell, line, colname, path):
    try:
        return float(cell)
    except ValueError:
        raise ValidationError(
            f"{path}: row {line}, column {colname!r}: not numeric: {cell!r}"
        ) from None


def _check_width(row, width, line, path):
    if len(row) != width:
        raise ValidationError(
            f"{path}: row {line}: expected {width} fields, got {len(row)}"
        )


def _format(value: float) -> str:
    return repr(float(value))


def load_dataset_csv(path) -> Dataset:
    """Read a feature table with a required +/-1 ``label`` column."""
    rows = _read_rows(path)
    header = rows[0]
    if LABEL_COLUMN not in header:
        raise ValidationError(f"{path}: header must contain a {LABEL_COLUMN!r} column")
    label_pos = header.index(LABEL_COLUMN)
    names = tuple(h for i, h in enumerate(header) if i != label_pos)
    if not rows[1:]:
        raise ValidationError(f"{path}: no data rows")

    feats, labels = [], []
    for line, row in enumerate(rows[1:], start=2):
        _check_width(row, len(header), line, path)
        values = [_parse_cell(cell, line, header[i], path) for i, cell in enumerate(row)]
        lab = values.pop(label_pos)
        if lab not in (-1.0, 1.0):
            raise ValidationError(f"{path}: row {line}: label must be -1 or 1, got {lab!r}")
        feats.append(values)
        labels.append(lab)
    return Dataset(X=np.asarray(feats, dtype=float), y=np.asarray(labels), feature_names=names)


def save_dataset_csv(dataset: Dataset, path) -> None:
    """Write a dataset in the canonical form ``load_dataset_csv`` round-trips."""
    names = dataset.feature_names or tuple(f"f{i}" for i in range(dataset.d))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(names) + [LABEL_COLUMN])
        for xi, yi in zip(dataset.X, dataset.y):
            writer.writerow([_format(v) for v in xi] + [_format(yi)])


def load_features_csv(path):
    """Like ``load_dataset_csv`` but the label column is optional.

    Returns (X, y-or-None, feature_names); used for prediction inputs.
    """
    rows = _read_rows(path)
    header = rows[0]
    has_label = LABEL_COLUMN in header
    label_pos = header.index(LABEL_COLUMN) if has_label else -1
    names = tuple(h for i, h in enumerate(header) if i != label_pos)
    if not rows[1:]:
        raise ValidationError(f"{path}: no data rows")

    feats, labels = [], []
    for line, row in enumerate(rows[1:], start=2):
        _check_width(row, len(header), line, path)
        values = [_parse_cell(cell, line, header[i], path) for i, cell in enumerate(row)]
        if has_label:
            lab = values.pop(label_pos)
            if lab not in (-1.0, 1.0):
                raise ValidationError(
                    f"{path}: row {line}: label must be -1 or 1, got {lab!r}"
                )
            labels.append(lab)
        feats.append(values)
    X = np.asarray(feats, dtype=float)
    y = np.asarray(labels) if has_label else None
    return X, y, names


def load_sources_csv(path) -> SourceEnsemble:
    """Read affine hypotheses: header then rows of [name?, bias, w_1..w_d]."""
    rows = _read_rows(path)
    header = rows[0]
    if not header or header[0] not in ("name", "bias"):
        raise ValidationError(
            f"{path}: header must start with 'name' or 'bias', got {header[:1]!r}"
        )
    named = header[0] == "name"
    offset = 2 if named else 1
    if len(header) < offset + 1:
        raise ValidationError(f"{path}: header declares no weight columns")
    if not rows[1:]:
        raise ValidationError(f"{path}: no source rows")

    names, biases, weights = [], [], []
    for line, row in enumerate(rows[1:], start=2):
        _check_width(row, len(header), line, path)
        names.append(row[0] if named else f"src{line - 2}")
        biases.append(_parse_cell(row[offset - 1], line, "bias", path))
        weights.append(
            [_parse_cell(c, line, header[offset + i], path) for i, c in enumerate(row[offset:])]
        )
    return SourceEnsemble(
        weights=np.asarray(weights, dtype=float),
        biases=np.asarray(biases),
        names=tuple(names),
    )


def save_sources_csv(sources: SourceEnsemble, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["name", "bias"] + [f"w{i}" for i in range(sources.n_features)])
        for name, bias, w in zip(sources.names, sources.biases, sources.weights):
            writer.writerow([name, _format(bias)] + [_format(v) for v in w])


def load_predictions_csv(path):
    """Read a precomputed prediction matrix; ``label`` column optional.

    Returns (preds m x n, y-or-None, source_names).
    """
    rows = _read_rows(path)
    header = rows[0]
    has_label = LABEL_COLUMN in header
    label_pos = header.index(LABEL_COLUMN) if has_label else -1
    names = tuple(h for i, h in enumerate(header) if i != label_pos)
    if not names:
        raise ValidationError(f"{path}: no prediction columns")
    if not rows[1:]:
        raise ValidationError(f"{path}: no data rows")

    preds, labels = [], []
    for line, row in enumerate(rows[1:], start=2):
        _check_width(row, len(header), line, path)
        values = [_parse_cell(cell, line, header[i], path) for i, cell in enumerate(row)]
        if has_label:
            lab = values.pop(label_pos)
            if lab not in (-1.0, 1.0):
                raise ValidationError(
                    f"{path}: row {line}: label must be -1 or 1, got {lab!r}"
                )
            labels.append(lab)
        preds.append(values)
    P = np.asarray(preds, dtype=float)
    y = np.asarray(labels) if has_label else None
    return P, y, names


def save_predictions_csv(preds, y, names, path) -> None:
    P = np.asarray(preds, dtype=float)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        header = list(names)
        if y is not None:
            header.append(LABEL_COLUMN)
        writer.writerow(header)
        for i, row in enumerate(P):
            out = [_format(v) for v in row]
            if y is not None:
                out.append(_format(y[i]))
            writer.writerow(out)


# ---------------------------------------------------------------------------
# synthetic tasks


@dataclass(frozen=True)
class SynthConfig:
    """Synthetic transfer task: a linear concept, noisy rotations of it as
    relevant sources, random directions as distractors.

    ``noise_std`` perturbs the concept margin before taking the label
    sign; ``relevant_rotation`` sets how far relevant sources stray from
    the concept direction.
    """

    d: int = 50
    n: int = 200
    n_relevant: int = 5
    m_train_pos: int = 2
    m_train_neg: int = 10
    m_test: int = 100
    noise_std: float = 0.1
    seed: int = 0
    relevant_rotation: float = 0.15
    distractor_bias: float = 0.1

    def __post_init__(self):
        if self.d < 1:
            raise ParameterError(f"d must be >= 1, got {self.d}")
        if self.n < 1:
            raise ParameterError(f"n must be >= 1, got {self.n}")
        if not 0 <= self.n_relevant <= self.n:
            raise ParameterError(
                f"n_relevant must lie in [0, n={self.n}], got {self.n_relevant}"
            )
        if self.m_train_pos not in ALLOWED_TRAIN_POSITIVES:
            raise ParameterError(
                f"m_train_pos must be one of {ALLOWED_TRAIN_POSITIVES}, got {self.m_train_pos}"
            )
        if self.m_train_neg < 1:
            raise ParameterError(f"m_train_neg must be >= 1, got {self.m_train_neg}")
        if self.m_test < 2:
            raise ParameterError(f"m_test must be >= 2, got {self.m_test}")
        if self.noise_std < 0:
            raise ParameterError(f"noise_std must be >= 0, got {self.noise_std}")


def _unit(v):
    return v / np.linalg.norm(v)


def _draw_class_balanced(rng, concept, noise_std, n_pos, n_neg, d):
    """Rejection-sample rows until both class quotas are met."""
    pos, neg = [], []
    batch = max(64, 4 * (n_pos + n_neg))
    while len(pos) < n_pos or len(neg) < n_neg:
        X = rng.standard_normal((batch, d))
        margin = X @ concept + noise_std * rng.standard_normal(batch)
        labels = np.where(margin >= 0.0, 1.0, -1.0)
        for xi, li in zip(X, labels):
            if li > 0 and len(pos) < n_pos:
                pos.append(xi)
            elif li < 0 and len(neg) < n_neg:
                neg.append(xi)
    X = np.vstack([pos, neg])
    y = np.concatenate([np.ones(n_pos), -np.ones(n_neg)])
    return Dataset(X=X, y=y)


def synth_transfer_task(config: SynthConfig) -> TransferTask:
    """Generate a transfer task from the config; fully seed-deterministic."""
    rng = np.random.default_rng(config.seed)
    d, n = config.d, config.n
    concept = _unit(rng.standard_normal(d))

    weights = np.zeros((n, d))
    biases = np.zeros(n)
    positions = rng.permutation(n)
    relevant = np.sort(positions[: config.n_relevant])
    relevant_set = set(int(i) for i in relevant)
    for i in range(n):
        if i in relevant_set:
            tilt = _unit(rng.standard_normal(d))
            weights[i] = _unit(concept + config.relevant_rotation * tilt)
        else:
            weights[i] = _unit(rng.standard_normal(d))
            biases[i] = config.distractor_bias * rng.standard_normal()

    sources = SourceEnsemble(weights=weights, biases=biases)
    train = _draw_class_balanced(
        rng, concept, config.noise_std, config.m_train_pos, config.m_train_neg, d
    )
    n_test_pos = (config.m_test + 1) // 2
    test = _draw_class_balanced(
        rng, concept, config.noise_std, n_test_pos, config.m_test - n_test_pos, d
    )
    return TransferTask(
        train=train,
        test=test,
        sources=sources,
        ground_truth=tuple(int(i) for i in relevant),
    )


def inject_noise(dataset: Dataset, extra_dims: int, seed: int) -> Dataset:
    """Append standard-normal distractor feature columns.

    The original columns are carried over bit-exactly; zero extra dims
    returns an identical copy.
    """
    if extra_dims < 0:
        raise ParameterError(f"extra_dims must be >= 0, got {extra_dims}")
    if extra_dims == 0:
        return Dataset(X=dataset.X.copy(), y=dataset.y.copy(), feature_names=dataset.feature_names)
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal((dataset.m, extra_dims))
    names = None
    if dataset.feature_names is not None:
        names = dataset.feature_names + tuple(
            f"noise{i}" for i in range(extra_dims)
        )
    return Dataset(X=np.hstack([dataset.X, noise]), y=dataset.y.copy(), feature_names=names)


def make_binary_split(pool: Dataset, pos_count, neg_count, test_pos, test_neg, seed):
    """Stratified disjoint train/test draw from a labeled pool.

    Returns (train, test) Datasets; raises when a class quota cannot be
    met from the pool.
    """
    for name, v in (
        ("pos_count", pos_count),
        ("neg_count", neg_count),
        ("test_pos", test_pos),
        ("test_neg", test_neg),
    ):
        if int(v) < 1:
            raise ParameterError(f"{name} must be >= 1, got {v}")
    pos_count, neg_count = int(pos_count), int(neg_count)
    test_pos, test_neg = int(test_pos), int(test_neg)

    pos_idx = np.flatnonzero(pool.y == 1)
    neg_idx = np.flatnonzero(pool.y == -1)
    if pos_idx.size < pos_count + test_pos:
        raise ValidationError(
            f"pool has {pos_idx.size} positives, need {pos_count + test_pos}"
        )
    if neg_idx.size < neg_count + test_neg:
        raise ValidationError(
            f"pool has {neg_idx.size} negatives, need {neg_count + test_neg}"
        )

    rng = np.random.default_rng(seed)
    pos_perm = rng.permutation(pos_idx)
    neg_perm = rng.permutation(neg_idx)
    train_rows = np.concatenate([pos_perm[:pos_count], neg_perm[:neg_count]])
    test_rows = np.concatenate(
        [pos_perm[pos_count : pos_count + test_pos], neg_perm[neg_count : neg_count + test_neg]]
    )
    train = Dataset(
        X=pool.X[train_rows].copy(), y=pool.y[train_rows].copy(), feature_names=pool.feature_names
    )
    test = Dataset(
        X=pool.X[test_rows].copy(), y=pool.y[test_rows].copy(), feature_names=pool.feature_names
    )
    return train, test
