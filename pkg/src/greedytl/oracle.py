"""Direct-solve references, exhaustive search, and bound diagnostics.

Everything here rebuilds its linear systems from scratch so it can serve
as an independent check on the incremental selection machinery.  Scores
live on the mean scale: ``regularized accuracy`` of a support S is
(1/m) b_S^T (C_S + m lam I)^{-1} b_S, the regularized risk is one minus
that, and both are bounded by [0, 1] for +/-1 labels.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass

import numpy as np

from .core import DesignMatrix, _validate_support
from .errors import BudgetError, DimensionError, ParameterError
from .selector import SearchStrategy, SelectionResult, TargetModel, greedy_select

BOUND_SLACK = 1e-9
ENUMERATION_GUARD = 10**6


# ---------------------------------------------------------------------------
# direct ridge solves


def ridge_fit_primal(design: DesignMatrix, support, lam: float) -> np.ndarray:
    """Dense length-p ridge solution restricted to the support.

    Solves (C_S + m lam I) w_S = b_S directly; zero off the support.
    """
    if not lam > 0:
        raise ParameterError(f"lam must be positive, got {lam}")
    S = _validate_support(support, design.p)
    w = np.zeros(design.p)
    if S:
        Zs = design.Z[:, S]
        lam_eff = design.m * lam
        C = Zs.T @ Zs + lam_eff * np.eye(len(S))
        w[S] = np.linalg.solve(C, Zs.T @ design.y)
    return w


def regularized_accuracy(design: DesignMatrix, support, lam: float) -> float:
    """Primal-formula accuracy (1/m) b_S^T (C_S + m lam I)^{-1} b_S."""
    if not lam > 0:
        raise ParameterError(f"lam must be positive, got {lam}")
    S = _validate_support(support, design.p)
    if not S:
        return 0.0
    Zs = design.Z[:, S]
    lam_eff = design.m * lam
    C = Zs.T @ Zs + lam_eff * np.eye(len(S))
    b = Zs.T @ design.y
    return float(b @ np.linalg.solve(C, b)) / design.m


def dual_accuracy(design: DesignMatrix, support, lam: float) -> float:
    """Dual-formula accuracy (1/m) y^T (K_S + m lam I)^{-1} K_S y.

    Uses the m x m kernel of the selected columns; agrees with the
    primal formula for any support.
    """
    if not lam > 0:
        raise ParameterError(f"lam must be positive, got {lam}")
    S = _validate_support(support, design.p)
    if not S:
        return 0.0
    Zs = design.Z[:, S]
    K = Zs @ Zs.T
    lam_eff = design.m * lam
    return float(design.y @ np.linalg.solve(K + lam_eff * np.eye(design.m), K @ design.y)) / design.m


def regularized_risk(design: DesignMatrix, support, lam: float) -> float:
    """min over w on the support of (1/m)||Z w - y||^2 + lam ||w||^2 = 1 - accuracy."""
    return 1.0 - regularized_accuracy(design, support, lam)


def empirical_risk(predictions, y, truncate: bool = True) -> float:
    """Mean squared error against +/-1 labels, optionally clipping to [-1, 1]."""
    pred = np.asarray(predictions, dtype=float).ravel()
    labels = np.asarray(y, dtype=float).ravel()
    if pred.size != labels.size:
        raise DimensionError(
            f"{pred.size} predictions for {labels.size} labels"
        )
    if pred.size == 0:
        raise DimensionError("empty prediction vector")
    if truncate:
        pred = np.clip(pred, -1.0, 1.0)
    diff = pred - labels
    return float(diff @ diff) / pred.size


# ---------------------------------------------------------------------------
# exhaustive search


def brute_force_rss(design: DesignMatrix, k: int, lam: float, guard: int = ENUMERATION_GUARD):
    """Exact minimizer of the regularized risk over supports of size <= k.

    Returns (support tuple, optimal risk).  Exact value ties resolve to
    the lexicographically smallest support.  Refuses to enumerate more
    than ``guard`` subsets.
    """
    if int(k) < 0:
        raise ParameterError(f"k must be >= 0, got {k}")
    if not lam > 0:
        raise ParameterError(f"lam must be positive, got {lam}")
    p = design.p
    top = min(int(k), p)
    total = sum(math.comb(p, size) for size in range(top + 1))
    if total > guard:
        raise BudgetError(
            f"enumerating {total} supports exceeds the budget of {guard}"
        )

    best_support: tuple[int, ...] = ()
    best_risk = 1.0  # empty support: accuracy 0
    for size in range(1, top + 1):
        for S in itertools.combinations(range(p), size):
            risk = 1.0 - regularized_accuracy(design, S, lam)
            if risk < best_risk or (risk == best_risk and S < best_support):
                best_support, best_risk = S, risk
    return best_support, best_risk


# ---------------------------------------------------------------------------
# approximation-quality report


@dataclass
class BoundReport:
    """Greedy-vs-exact comparison on one instance, with the coherence-based
    approximation guarantee evaluated explicitly."""

    m: int
    p: int
    k: int
    lam: float
    gamma: float
    epsilon: float
    condition_met: bool
    greedy_support: tuple[int, ...]
    greedy_value: float
    opt_support: tuple[int, ...]
    opt_value: float
    bound_rhs: float
    holds: bool

    def to_dict(self) -> dict:
        out = asdict(self)
        out["greedy_support"] = list(self.greedy_support)
        out["opt_support"] = list(self.opt_support)
        return out


def coherence(design: DesignMatrix) -> float:
    """Largest absolute off-diagonal entry of the normalized Gram Z^T Z / m."""
    if design.p < 2:
        return 0.0
    C = design.Z.T @ design.Z / design.m
    off = C - np.diag(np.diag(C))
    return float(np.max(np.abs(off)))


def check_approximation_bound(design: DesignMatrix, k: int, lam: float = 1.0) -> BoundReport:
    """Run full greedy and exhaustive search, then evaluate the guarantee

        greedy_risk <= (1 + eps) * opt_risk - 16 (k+1)^2 gamma lam / (1+lam)^2,
        eps = 16 (k+1)^2 gamma / (1 + lam),

    which is meaningful when gamma < (1+lam) / (6k).  Greedy and exact
    risks are computed through the same direct formula so orthonormal
    designs (gamma = 0) compare exactly.
    """
    if int(k) < 1:
        raise ParameterError(f"k must be >= 1, got {k}")
    k = int(k)
    sel = greedy_select(design, k=k, lam=lam, delta=0.0, strategy=SearchStrategy.full())
    greedy_value = 1.0 - regularized_accuracy(design, sel.support, lam)
    opt_support, opt_value = brute_force_rss(design, k, lam)

    gamma = coherence(design)
    eps = 16.0 * (k + 1) ** 2 * gamma / (1.0 + lam)
    rhs = (1.0 + eps) * opt_value - 16.0 * (k + 1) ** 2 * gamma * lam / (1.0 + lam) ** 2
    condition = gamma < (1.0 + lam) / (6.0 * k)
    return BoundReport(
        m=design.m,
        p=design.p,
        k=k,
        lam=float(lam),
        gamma=gamma,
        epsilon=eps,
        condition_met=bool(condition),
        greedy_support=tuple(sel.support),
        greedy_value=greedy_value,
        opt_support=tuple(opt_support),
        opt_value=opt_value,
        bound_rhs=rhs,
        holds=bool(greedy_value <= rhs + BOUND_SLACK),
    )


# ---------------------------------------------------------------------------
# solution-norm diagnostics


@dataclass
class SolutionBounds:
    """Norm/risk diagnostics of a fitted model on its training design.

    ``objective`` is lam * ||w||^2 + truncated training risk; it cannot
    exceed 1 because the empty solution already achieves 1 and greedy
    never accepts a worse subset.  The source-subset value is the best
    upper bound obtainable from singleton sources and the selected
    source set: mean truncated source risk plus lam / |S|.
    """

    objective: float
    norm_sq: float
    truncated_risk: float
    bound_holds: bool
    tau_inf: float | None = None
    source_subset_bound: float | None = None
    selected_sources: tuple[int, ...] = ()
    selected_source_risk: float | None = None

    def to_dict(self) -> dict:
        out = asdict(self)
        out["selected_sources"] = list(self.selected_sources)
        return out


def _source_predictions_from_design(design: DesignMatrix, j: int) -> np.ndarray:
    """Raw prediction column of source j recovered from the scaler stats."""
    raw_col = design.n_features + j
    if raw_col in design.scaler.dropped:
        return np.full(design.m, design.scaler.means[raw_col])
    pos = design.scaler.retained.index(raw_col)
    return design.Z[:, pos] * design.scaler.scales[raw_col] + design.scaler.means[raw_col]


def check_solution_bounds(model: TargetModel, design: DesignMatrix) -> SolutionBounds:
    """Evaluate the training-objective bound and source-quality diagnostics.

    Works from the design alone: raw source predictions are recovered by
    inverting the standardization, so no raw feature matrix is needed.
    """
    sel: SelectionResult = model.selection
    w = sel.weights
    lam = sel.lam
    preds = design.Z @ w if design.p else np.zeros(design.m)
    risk = empirical_risk(preds, design.y, truncate=True)
    norm_sq = float(w @ w)
    objective = lam * norm_sq + risk

    tau = None
    subset_bound = None
    src_risk = None
    selected_sources = tuple(
        design.column_origin[j][1] for j in sel.support if design.column_origin[j][0] == "source"
    )
    if design.n_sources:
        risks = []
        tau = 0.0
        for j in range(design.n_sources):
            hj = _source_predictions_from_design(design, j)
            tau = max(tau, float(np.max(hj * hj)))
            risks.append(empirical_risk(hj, design.y, truncate=True))
        candidates = [r + lam for r in risks]  # singleton subsets
        if selected_sources:
            chosen = [risks[j] for j in selected_sources]
            candidates.append(float(np.mean(chosen)) + lam / len(chosen))
        subset_bound = float(min(candidates))
    if selected_sources:
        src_cols = [j for j in sel.support if design.column_origin[j][0] == "source"]
        src_preds = design.Z[:, src_cols] @ w[src_cols]
        src_risk = empirical_risk(src_preds, design.y, truncate=True)

    return SolutionBounds(
        objective=objective,
        norm_sq=norm_sq,
        truncated_risk=risk,
        bound_holds=bool(objective <= 1.0 + BOUND_SLACK),
        tau_inf=tau,
        source_subset_bound=subset_bound,
        selected_sources=selected_sources,
        selected_source_risk=src_risk,
    )
