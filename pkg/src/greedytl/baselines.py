"""Reference methods the greedy selector is compared against.

All ridge-style baselines share the selection machinery's conventions
(training-set standardization, lam_eff = m * lam) so comparisons isolate
the subset-selection step itself.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DesignMatrix, apply_scaler, assemble_design
from .data import Dataset, SourceEnsemble, apply_sources
from .errors import ParameterError, ValidationError
from .metrics import balanced_accuracy
from .selector import DEFAULT_DELTA, SearchStrategy, TargetModel, fit_model

# Near-zero regularizer for plain forward regression; keeps the shared
# machinery non-singular without measurably shrinking anything.
FORWARD_REG_JITTER = 1e-10

NO_TRANSFER = "no_transfer"
RLS_SRC_FEAT = "rls_src_feat"
AVERAGE_KT = "average_kt"
BEST_SOURCE = "best_source"
FORWARD_REG = "forward_reg"

BASELINE_KINDS = (NO_TRANSFER, RLS_SRC_FEAT, AVERAGE_KT, BEST_SOURCE, FORWARD_REG)


@dataclass(eq=False)
class BaselineModel:
    """A fitted baseline with a uniform raw-feature prediction interface.

    ``weights``/``scaler`` are set for the ridge-style kinds;
    ``source_index`` for best-source; the ensemble is kept whenever
    prediction needs it.  ``oracle_selection`` flags methods that peeked
    at test labels (best-source does) and must not be read as a
    competitor.
    """

    kind: str
    sources: SourceEnsemble | None = None
    weights: np.ndarray | None = None
    scaler: object | None = None
    n_features: int = 0
    source_index: int | None = None
    lam: float | None = None
    oracle_selection: bool = False

    def decision_values(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(1, -1)
        if self.kind == AVERAGE_KT:
            return average_kt_predict(self.sources, X)
        if self.kind == BEST_SOURCE:
            return apply_sources(self.sources, X)[:, self.source_index]
        preds = (
            apply_sources(self.sources, X)
            if self.sources is not None and self.sources.n_sources
            else np.empty((X.shape[0], 0))
        )
        Zt = apply_scaler(self.scaler, np.hstack([X, preds]))
        return Zt @ self.weights


def _ridge_weights(Z: np.ndarray, y: np.ndarray, lam_eff: float) -> np.ndarray:
    """Full ridge solution, via the m x m dual system when that is smaller."""
    m, p = Z.shape
    if p == 0:
        return np.zeros(0)
    if m < p:
        return Z.T @ np.linalg.solve(Z @ Z.T + lam_eff * np.eye(m), y)
    return np.linalg.solve(Z.T @ Z + lam_eff * np.eye(p), Z.T @ y)


def fit_no_transfer(features, y, lam: float = 1.0) -> BaselineModel:
    """Ridge on standardized raw features alone; sources ignored entirely."""
    if not lam > 0:
        raise ParameterError(f"lam must be positive, got {lam}")
    design = assemble_design(features, None, y)
    w = _ridge_weights(design.Z, design.y, design.m * lam)
    return BaselineModel(
        kind=NO_TRANSFER,
        weights=w,
        scaler=design.scaler,
        n_features=design.n_features,
        lam=float(lam),
    )


def fit_rls_src_feat(design: DesignMatrix, lam: float = 1.0, sources: SourceEnsemble | None = None) -> BaselineModel:
    """Ridge over the full stacked design: every feature and source column."""
    if not lam > 0:
        raise ParameterError(f"lam must be positive, got {lam}")
    w = _ridge_weights(design.Z, design.y, design.m * lam)
    return BaselineModel(
        kind=RLS_SRC_FEAT,
        sources=sources,
        weights=w,
        scaler=design.scaler,
        n_features=design.n_features,
        lam=float(lam),
    )


def average_kt_predict(sources: SourceEnsemble, x) -> np.ndarray:
    """Plain mean of the source predictions (truncate only for risk evaluation)."""
    if sources.n_sources == 0:
        raise ValidationError("cannot average an empty source ensemble")
    preds = apply_sources(sources, x)
    return preds.mean(axis=1)


def fit_average_kt(sources: SourceEnsemble) -> BaselineModel:
    if sources.n_sources == 0:
        raise ValidationError("cannot average an empty source ensemble")
    return BaselineModel(kind=AVERAGE_KT, sources=sources)


def best_source_select(sources: SourceEnsemble, test: Dataset) -> BaselineModel:
    """Pick the single source with the best balanced accuracy on the test set.

    This reads test labels, so it is an oracle reference, not a
    competitor; the returned model is flagged accordingly.  Ties go to
    the lowest source index.
    """
    if sources.n_sources == 0:
        raise ValidationError("cannot select from an empty source ensemble")
    preds = apply_sources(sources, test.X)
    best_idx, best_acc = 0, -1.0
    for j in range(sources.n_sources):
        acc = balanced_accuracy(preds[:, j], test.y)
        if acc > best_acc:
            best_idx, best_acc = j, acc
    return BaselineModel(
        kind=BEST_SOURCE,
        sources=sources,
        source_index=best_idx,
        oracle_selection=True,
    )


def fit_forward_reg(
    design: DesignMatrix,
    k: int | None = None,
    delta: float = DEFAULT_DELTA,
    sources: SourceEnsemble | None = None,
    strategy: SearchStrategy | None = None,
) -> TargetModel:
    """Unregularized forward regression: the greedy path run with a jitter
    regularizer small enough to be inert but large enough to stay
    non-singular (duplicate columns included)."""
    return fit_model(
        design,
        sources,
        k=k,
        lam=FORWARD_REG_JITTER,
        delta=delta,
        strategy=strategy,
    )
