"""Standardization, design-matrix assembly, and rank-one dual updates.

Selection runs on a standardized design matrix whose columns mix raw
features and source-hypothesis predictions.  Regularization is expressed
on the mean-squared-error scale: a caller ``lam`` is applied internally
as ``lam_eff = m * lam`` against the unscaled column Gram, so the
implied objective is ``(1/m) * ||Z w - y||^2 + lam * ||w||^2`` and the
attainable score of a column subset is invariant to the sample count
entering through the Gram alone.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionError,
    NumericDegeneracyError,
    ParameterError,
    ValidationError,
)

# Columns whose population std is at or below this are constant for all
# practical purposes and are dropped rather than divided by ~0.
VARIANCE_FLOOR = 1e-12

# Rank-one update denominators below this indicate a non-PD state.
SM_DENOM_FLOOR = 1e-12


def _as_float_matrix(raw, name="matrix"):
    arr = np.asarray(raw, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be 1- or 2-dimensional, got ndim={arr.ndim}")
    return arr


def _as_vector(v, m, name="vector"):
    arr = np.asarray(v, dtype=float).ravel()
    if arr.size != m:
        raise DimensionError(f"{name} must have length {m}, got {arr.size}")
    return arr


def validate_labels(y, m=None, name="labels"):
    """Coerce to a float vector of +/-1 entries; reject anything else."""
    arr = np.asarray(y, dtype=float).ravel()
    if m is not None and arr.size != m:
        raise DimensionError(f"{name} must have length {m}, got {arr.size}")
    if arr.size == 0:
        raise ValidationError(f"{name} must be non-empty")
    bad = np.flatnonzero(~np.isin(arr, (-1.0, 1.0)))
    if bad.size:
        i = int(bad[0])
        raise ValidationError(f"{name}[{i}] must be -1 or 1, got {arr[i]!r}")
    return arr


# ---------------------------------------------------------------------------
# standardization


@dataclass(frozen=True, eq=False)
class StandardScaler:
    """Per-column centering/scaling statistics fitted on training rows.

    ``means`` and ``scales`` cover the full raw width; columns whose
    population standard deviation is at or below ``VARIANCE_FLOOR`` are
    listed in ``dropped`` and removed on application.
    """

    means: np.ndarray
    scales: np.ndarray
    dropped: tuple[int, ...]

    @property
    def width(self) -> int:
        return int(self.means.size)

    @property
    def retained(self) -> tuple[int, ...]:
        gone = set(self.dropped)
        return tuple(j for j in range(self.width) if j not in gone)


def fit_scaler(raw) -> StandardScaler:
    """Fit per-column mean and population standard deviation.

    Population scaling (divide by m, not m-1) keeps each retained column
    of the standardized matrix at squared norm exactly m.
    """
    X = _as_float_matrix(raw, "raw matrix")
    m = X.shape[0]
    if m < 2:
        raise DimensionError(f"need at least 2 rows to fit a scaler, got {m}")
    if not np.all(np.isfinite(X)):
        raise ValidationError("raw matrix contains non-finite values")
    means = X.mean(axis=0)
    scales = X.std(axis=0)
    dropped = tuple(int(j) for j in np.flatnonzero(scales <= VARIANCE_FLOOR))
    return StandardScaler(means=means, scales=scales, dropped=dropped)


def apply_scaler(scaler: StandardScaler, raw) -> np.ndarray:
    """Center and scale with training statistics, dropping flagged columns."""
    X = _as_float_matrix(raw, "raw matrix")
    if X.shape[1] != scaler.width:
        raise DimensionError(
            f"scaler was fitted on width {scaler.width}, got width {X.shape[1]}"
        )
    if not np.all(np.isfinite(X)):
        raise ValidationError("raw matrix contains non-finite values")
    keep = list(scaler.retained)
    return (X[:, keep] - scaler.means[keep]) / scaler.scales[keep]


# ---------------------------------------------------------------------------
# design assembly


@dataclass(frozen=True, eq=False)
class DesignMatrix:
    """Standardized training design [features | source predictions].

    ``column_origin[j]`` records where retained column ``j`` came from:
    ``("feature", i)`` for raw feature i or ``("source", i)`` for source
    hypothesis i.  The mapping is a bijection onto the retained raw
    columns, in raw order.
    """

    Z: np.ndarray
    y: np.ndarray
    column_origin: tuple[tuple[str, int], ...]
    scaler: StandardScaler
    n_features: int
    n_sources: int

    @property
    def m(self) -> int:
        return int(self.Z.shape[0])

    @property
    def p(self) -> int:
        return int(self.Z.shape[1])

    def source_columns(self) -> tuple[int, ...]:
        return tuple(j for j, (kind, _) in enumerate(self.column_origin) if kind == "source")

    def feature_columns(self) -> tuple[int, ...]:
        return tuple(j for j, (kind, _) in enumerate(self.column_origin) if kind == "feature")

    @property
    def ZT(self) -> np.ndarray:
        """Contiguous transpose of Z, built once on first use.

        Candidate subsampling gathers scattered columns of Z every
        iteration; row-major rows of the transpose make those gathers
        single memcpy runs instead of strided walks.
        """
        cached = getattr(self, "_zt_cache", None)
        if cached is None:
            cached = np.ascontiguousarray(self.Z.T)
            object.__setattr__(self, "_zt_cache", cached)
        return cached


def assemble_design(features, source_preds, y) -> DesignMatrix:
    """Stack features with source predictions and standardize the result.

    ``features`` may be an (m, 0) block when only precomputed predictions
    are available, and vice versa; at least one block must have columns
    left after dropping constants for selection to be meaningful, but an
    all-dropped design is still returned (it selects nothing).
    """
    X = np.empty((0, 0)) if features is None else np.asarray(features, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    P = np.empty((0, 0)) if source_preds is None else np.asarray(source_preds, dtype=float)
    if P.ndim == 1:
        P = P.reshape(-1, 1)

    if X.size == 0 and X.shape[0] == 0:
        X = np.empty((P.shape[0], 0))
    if P.size == 0 and P.shape[0] == 0:
        P = np.empty((X.shape[0], 0))
    if X.shape[0] != P.shape[0]:
        raise DimensionError(
            f"features have {X.shape[0]} rows but source predictions have {P.shape[0]}"
        )
    m = X.shape[0]
    yv = validate_labels(y, m)

    raw = np.hstack([X, P])
    scaler = fit_scaler(raw)
    Z = apply_scaler(scaler, raw)

    d = X.shape[1]
    origin = tuple(
        ("feature", j) if j < d else ("source", j - d) for j in scaler.retained
    )
    return DesignMatrix(
        Z=np.ascontiguousarray(Z),
        y=yv,
        column_origin=origin,
        scaler=scaler,
        n_features=d,
        n_sources=P.shape[1],
    )


# ---------------------------------------------------------------------------
# dual state and rank-one updates


@dataclass(eq=False)
class DualState:
    """Accumulated column Gram K = sum z z^T and G = (K + lam_eff I)^-1.

    G is maintained incrementally by rank-one updates and re-symmetrized
    after each one to keep float drift from accumulating.
    """

    K: np.ndarray
    G: np.ndarray
    lam_eff: float

    @property
    def m(self) -> int:
        return int(self.K.shape[0])


def init_dual_state(m: int, lam_eff: float) -> DualState:
    if int(m) < 1:
        raise DimensionError(f"need at least 1 example, got {m}")
    if not lam_eff > 0:
        raise ParameterError(f"effective regularizer must be positive, got {lam_eff}")
    m = int(m)
    return DualState(K=np.zeros((m, m)), G=np.eye(m) / lam_eff, lam_eff=float(lam_eff))


def sm_update(state: DualState, z) -> DualState:
    """Return the state after adding column z: K' = K + z z^T, G' updated in O(m^2).

    G' = G - (G z)(G z)^T / (1 + z^T G z), symmetrized.  The zero column
    is a no-op.  A denominator at or below ``SM_DENOM_FLOOR`` cannot
    happen while G stays positive definite and raises defensively.
    """
    zv = _as_vector(z, state.m, "column")
    u = state.G @ zv
    denom = 1.0 + float(zv @ u)
    if denom <= SM_DENOM_FLOOR:
        raise NumericDegeneracyError(
            f"rank-one update denominator {denom:.3e} is not safely positive"
        )
    G = state.G - np.outer(u, u) / denom
    G = 0.5 * (G + G.T)
    K = state.K + np.outer(zv, zv)
    return DualState(K=K, G=G, lam_eff=state.lam_eff)


def candidate_score(state: DualState, z, y) -> float:
    """Score of the current subset extended by column z, from a tentative update.

    Computes y^T (K + z z^T) G' y where G' is the rank-one-updated
    inverse; the state itself is left untouched.  The score equals
    m times the regularized accuracy of the extended subset.
    """
    zv = _as_vector(z, state.m, "column")
    yv = _as_vector(y, state.m, "labels")
    u = state.G @ zv
    denom = 1.0 + float(zv @ u)
    if denom <= SM_DENOM_FLOOR:
        raise NumericDegeneracyError(
            f"rank-one update denominator {denom:.3e} is not safely positive"
        )
    Gp = state.G - np.outer(u, u) / denom
    Ky = state.K @ (Gp @ yv) + zv * float(zv @ (Gp @ yv))
    return float(yv @ Ky)


def naive_regularized_score(design: DesignMatrix, support, lam: float) -> float:
    """Direct-solve reference score b_S^T (C_S + m lam I)^{-1} b_S.

    Independent of the incremental machinery: builds the |S| x |S|
    primal system from scratch.  Empty supports score 0.
    """
    if not lam > 0:
        raise ParameterError(f"lam must be positive, got {lam}")
    S = _validate_support(support, design.p)
    if not S:
        return 0.0
    Zs = design.Z[:, S]
    lam_eff = design.m * lam
    C = Zs.T @ Zs + lam_eff * np.eye(len(S))
    b = Zs.T @ design.y
    return float(b @ np.linalg.solve(C, b))


def _validate_support(support, p):
    S = [int(i) for i in support]
    if len(set(S)) != len(S):
        raise ValidationError(f"support contains duplicate indices: {S}")
    for i in S:
        if not 0 <= i < p:
            raise ValidationError(f"support index {i} outside [0, {p})")
    return S


def inverse_identity_error(state: DualState) -> float:
    """Relative Frobenius error of G (K + lam_eff I) = I; diagnostic only."""
    m = state.m
    resid = state.G @ (state.K + state.lam_eff * np.eye(m)) - np.eye(m)
    return float(np.linalg.norm(resid) / np.sqrt(m))
