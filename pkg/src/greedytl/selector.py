"""Greedy subset selection with incremental scoring.

Each iteration scores every candidate column (or a fixed-size random
subsample of them) against the current dual state and adds the best one.
With G = (K + lam_eff I)^-1 and g = G y, extending by column z changes
the dual score by exactly

    gain(z) = lam_eff * (z^T g)^2 / (1 + z^T G z)

which is the tentative-update score minus the current one, is never
negative, and costs O(m^2) per candidate after an O(m^2 p) shared pass.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .core import (
    SM_DENOM_FLOOR,
    DesignMatrix,
    DualState,
    StandardScaler,
    apply_scaler,
)
from .errors import (
    DimensionError,
    NumericDegeneracyError,
    ParameterError,
    ValidationError,
)

FULL = "full"
RANDOM = "random"

DEFAULT_SAMPLE_COUNT = 59
DEFAULT_LAM = 1.0
DEFAULT_DELTA = 1e-4


class StopReason(str, enum.Enum):
    BUDGET_K = "budget_k"
    DELTA_STOP = "delta_stop"
    EXHAUSTED = "exhausted"


@dataclass(frozen=True)
class SearchStrategy:
    """Candidate enumeration policy: scan everything or a random subsample.

    The randomized policy draws ``sample_count`` remaining candidates
    without replacement each iteration, falling back to a full scan when
    fewer remain.  Draws come from a generator seeded with ``seed`` so
    runs are reproducible.
    """

    kind: str = FULL
    sample_count: int = DEFAULT_SAMPLE_COUNT
    seed: int = 0

    def __post_init__(self):
        if self.kind not in (FULL, RANDOM):
            raise ParameterError(f"strategy kind must be 'full' or 'random', got {self.kind!r}")
        if self.kind == RANDOM and int(self.sample_count) < 1:
            raise ParameterError(f"sample_count must be >= 1, got {self.sample_count}")

    @classmethod
    def full(cls) -> "SearchStrategy":
        return cls(kind=FULL)

    @classmethod
    def randomized(cls, sample_count: int = DEFAULT_SAMPLE_COUNT, seed: int = 0) -> "SearchStrategy":
        return cls(kind=RANDOM, sample_count=int(sample_count), seed=int(seed))


@dataclass(eq=False)
class SelectionResult:
    """Outcome of one greedy run.

    ``weights`` is the dense length-p ridge solution restricted to the
    selected support (zero elsewhere).  ``score_trace`` starts at the
    empty-set score 0 and accumulates the per-step gains, so it is
    nondecreasing by construction.  ``objective_value`` is
    lam * ||w||^2 plus the truncated training risk of the fitted
    predictor; it never exceeds 1 up to float slack.
    """

    support: tuple[int, ...]
    weights: np.ndarray
    score_trace: tuple[float, ...]
    stop_reason: StopReason
    lam: float
    k: int
    gains: tuple[float, ...] = ()
    forgone_gain: float | None = None
    objective_value: float = float("nan")


def sample_size(eta: float, percentile: float) -> int:
    """Draws needed so a top-``percentile`` candidate is hit with prob >= 1 - eta.

    ceil(ln eta / ln(1 - percentile)); independent of the pool size.
    """
    if not 0.0 < eta < 1.0:
        raise ParameterError(f"eta must lie in (0, 1), got {eta}")
    if not 0.0 < percentile < 1.0:
        raise ParameterError(f"percentile must lie in (0, 1), got {percentile}")
    return int(math.ceil(math.log(eta) / math.log(1.0 - percentile)))


def extract_weights(design: DesignMatrix, support, state: DualState) -> np.ndarray:
    """Primal weights from the dual state: w_i = z_i^T G y on the support.

    Equals the direct ridge solution (C_S + lam_eff I)^{-1} b_S.
    """
    S = [int(i) for i in support]
    w = np.zeros(design.p)
    if S:
        gy = state.G @ design.y
        w[S] = design.Z[:, S].T @ gy
    return w


def _draw_pool(row, available, count, rng, p) -> np.ndarray:
    """First ``count`` distinct available values of an iid-uniform
    stream, sorted; a uniform without-replacement sample of the
    remaining columns.  ``row`` is the pregenerated stream head; the
    rng only tops it up in the astronomically rare case it runs dry."""
    while True:
        cand = row[available[row]]
        # dict preserves insertion order, so this keeps first occurrences
        distinct = dict.fromkeys(cand.tolist())
        if len(distinct) >= count:
            pool = np.fromiter(distinct, count=count, dtype=np.int64)
            pool.sort()
            return pool
        row = np.concatenate([row, rng.integers(0, p, size=row.size + count)])


def greedy_select(
    design: DesignMatrix,
    k: int,
    lam: float = DEFAULT_LAM,
    delta: float = DEFAULT_DELTA,
    strategy: SearchStrategy | None = None,
) -> SelectionResult:
    """Forward selection of at most k design columns.

    Stops early when the best available gain, divided by m to put it on
    the mean-accuracy scale, is at or below ``delta``; ``delta=0``
    disables that rule so exactly min(k, p) columns are taken.  Ties are
    broken toward the lowest column index.
    """
    if int(k) < 1:
        raise ParameterError(f"k must be >= 1, got {k}")
    if not lam > 0:
        raise ParameterError(f"lam must be positive, got {lam}")
    if delta < 0:
        raise ParameterError(f"delta must be >= 0, got {delta}")
    strategy = strategy or SearchStrategy.full()
    k = int(k)

    Z, y, m, p = design.Z, design.y, design.m, design.p
    lam_eff = m * lam
    random_kind = strategy.kind == RANDOM
    rng = np.random.default_rng(strategy.seed) if random_kind else None
    # One bulk draw for the whole run keeps the per-iteration RNG cost
    # flat; each row is an iid-uniform stream whose first sample_count
    # distinct unselected values form a uniform without-replacement
    # sample of the remaining columns.
    draws = (
        rng.integers(0, p, size=(min(k, p), strategy.sample_count + 16))
        if random_kind and p > strategy.sample_count
        else None
    )
    ZT = design.ZT if random_kind else None

    # G = (Z_S Z_S^T + lam_eff I)^{-1} maintained by rank-one downdates.
    # Subtracting outer(v, v) keeps G bit-exactly symmetric (float
    # multiplication commutes), so no re-symmetrization pass is needed
    # and every z^T G z / z^T G y below may use rows for columns.
    G = np.eye(m) / lam_eff if p else None
    outer_buf = np.empty((m, m))
    scale_buf = np.empty(m)

    selected: list[int] = []
    available = np.ones(p, dtype=bool)
    trace = [0.0]
    gains: list[float] = []
    score = 0.0
    stop = None
    forgone = None

    while len(selected) < k and len(selected) < p:
        if random_kind:
            if p - len(selected) > strategy.sample_count:
                pool = _draw_pool(
                    draws[len(selected)], available, strategy.sample_count, rng, p
                )
            else:
                pool = np.flatnonzero(available)
            Zr = ZT[pool]
            B = Zr @ G  # row i is (G z_i)^T
            a = B @ y
            c = np.einsum("ij,ij->i", B, Zr)
            gain = a * a / (1.0 + c)  # argmax-equivalent; lam_eff applied below
            j = int(np.argmax(gain))
            best = int(pool[j])
            Gz, denom = B[j], 1.0 + float(c[j])
        else:
            GZ = G @ Z
            a = GZ.T @ y  # equals Z^T G y by symmetry of G
            c = np.einsum("ij,ij->j", Z, GZ)
            gain = a * a / (1.0 + c)
            gain[~available] = -1.0  # real gains are >= 0
            j = int(np.argmax(gain))
            best = j
            Gz, denom = GZ[:, j], 1.0 + float(c[j])

        best_gain = lam_eff * float(gain[j])
        if delta > 0 and best_gain <= delta * m:
            stop = StopReason.DELTA_STOP
            forgone = best_gain
            break

        if denom <= SM_DENOM_FLOOR:
            raise NumericDegeneracyError(
                f"rank-one denominator {denom!r} at column {best} is below "
                f"the floor {SM_DENOM_FLOOR}; the kernel update is unstable"
            )
        np.divide(Gz, denom, out=scale_buf)
        np.multiply.outer(Gz, scale_buf, out=outer_buf)
        np.subtract(G, outer_buf, out=G)
        selected.append(best)
        available[best] = False
        score += best_gain
        trace.append(score)
        gains.append(best_gain)

    if stop is None:
        stop = StopReason.BUDGET_K if len(selected) >= k else StopReason.EXHAUSTED

    Zs = Z[:, selected]
    weights = np.zeros(p)
    if selected:
        weights[selected] = Zs.T @ (G @ y)  # w_i = z_i^T G y on the support
    # off-support weights are zero, so the support slice gives the same
    # predictions without touching the full design width
    residual = np.clip(Zs @ weights[selected], -1.0, 1.0) - y
    objective = lam * float(weights @ weights) + float(residual @ residual) / m

    return SelectionResult(
        support=tuple(selected),
        weights=weights,
        score_trace=tuple(trace),
        stop_reason=stop,
        lam=float(lam),
        k=k,
        gains=tuple(gains),
        forgone_gain=forgone,
        objective_value=objective,
    )


# ---------------------------------------------------------------------------
# fitted model


@dataclass(eq=False)
class TargetModel:
    """A fitted selection plus everything needed to score new raw points.

    ``sources`` is any object with a ``predict(X) -> (m, n)`` method (or
    None when the design was built from precomputed predictions, in
    which case raw-feature prediction is unavailable).
    """

    selection: SelectionResult
    scaler: StandardScaler
    sources: object | None
    column_origin: tuple[tuple[str, int], ...]
    n_features: int
    n_sources: int
    truncate: bool = True

    def decision_values(self, X) -> np.ndarray:
        return predict_raw(self, X)


def fit_model(
    design: DesignMatrix,
    sources=None,
    *,
    k: int | None = None,
    lam: float = DEFAULT_LAM,
    delta: float = DEFAULT_DELTA,
    strategy: SearchStrategy | None = None,
    truncate: bool = True,
) -> TargetModel:
    """Run greedy selection on a design and package the result for prediction.

    ``k=None`` means no budget beyond the column count (the delta rule
    is then the only stopping criterion).
    """
    budget = design.p if k is None else int(k)
    budget = max(budget, 1)
    selection = greedy_select(design, k=budget, lam=lam, delta=delta, strategy=strategy)
    return TargetModel(
        selection=selection,
        scaler=design.scaler,
        sources=sources,
        column_origin=design.column_origin,
        n_features=design.n_features,
        n_sources=design.n_sources,
        truncate=truncate,
    )


def _model_inputs(model: TargetModel, x):
    arr = np.asarray(x, dtype=float)
    one_dim = arr.ndim == 1
    X = arr.reshape(1, -1) if one_dim else arr
    if X.ndim != 2:
        raise DimensionError(f"inputs must be 1- or 2-dimensional, got ndim={arr.ndim}")
    if X.shape[1] != model.n_features:
        raise DimensionError(
            f"model expects {model.n_features} raw features, got {X.shape[1]}"
        )
    if model.n_sources and model.sources is None:
        raise ValidationError(
            "model was fitted on precomputed source predictions; "
            "predict via explicit prediction columns instead"
        )
    preds = (
        np.empty((X.shape[0], 0))
        if model.n_sources == 0
        else np.asarray(model.sources.predict(X), dtype=float)
    )
    return X, preds, one_dim


def predict_from_parts(model: TargetModel, X, source_preds) -> np.ndarray:
    """Raw decision values from explicit feature and prediction blocks."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    P = np.asarray(source_preds, dtype=float)
    if P.ndim == 1:
        P = P.reshape(-1, 1)
    if P.size == 0:
        P = P.reshape(X.shape[0], 0)
    if X.shape[0] != P.shape[0]:
        raise DimensionError(
            f"features have {X.shape[0]} rows but predictions have {P.shape[0]}"
        )
    Zt = apply_scaler(model.scaler, np.hstack([X, P]))
    return Zt @ model.selection.weights


def predict_raw(model: TargetModel, x):
    """Linear decision value(s) for raw feature input (1-D -> scalar)."""
    X, preds, one_dim = _model_inputs(model, x)
    out = predict_from_parts(model, X, preds)
    return float(out[0]) if one_dim else out


def predict_truncated(model: TargetModel, x):
    """Decision value(s) clipped to [-1, 1]."""
    out = predict_raw(model, x)
    if np.isscalar(out):
        return float(min(1.0, max(-1.0, out)))
    return np.clip(out, -1.0, 1.0)
