"""Greedy selection loop, its randomized variant, and fitted models."""

import numpy as np
import pytest

from greedytl.core import assemble_design, init_dual_state, sm_update
from greedytl.errors import DimensionError, ParameterError, ValidationError
from greedytl.selector import (
    SearchStrategy,
    StopReason,
    extract_weights,
    fit_model,
    greedy_select,
    predict_from_parts,
    predict_raw,
    predict_truncated,
    sample_size,
)

from conftest import mixed_labels, naive_greedy_supports, random_design


# ---------------------------------------------------------------------------
# sample_size


def test_sample_size_frozen_values():
    assert sample_size(0.05, 0.05) == 59
    assert sample_size(0.5, 0.5) == 1
    assert sample_size(0.01, 0.05) == 90


def test_sample_size_rejects_out_of_range():
    for eta, pct in ((0.0, 0.05), (1.0, 0.05), (0.05, 0.0), (0.05, 1.0), (-1, 0.5)):
        with pytest.raises(ParameterError):
            sample_size(eta, pct)


# ---------------------------------------------------------------------------
# parameter validation


def test_greedy_select_rejects_bad_parameters(rng):
    design = random_design(rng)
    with pytest.raises(ParameterError):
        greedy_select(design, k=0)
    with pytest.raises(ParameterError):
        greedy_select(design, k=2, lam=0.0)
    with pytest.raises(ParameterError):
        greedy_select(design, k=2, delta=-1e-9)


def test_strategy_rejects_bad_parameters():
    with pytest.raises(ParameterError):
        SearchStrategy(kind="exhaustive")
    with pytest.raises(ParameterError):
        SearchStrategy.randomized(sample_count=0)


# ---------------------------------------------------------------------------
# full scan against the from-scratch reference


def test_full_scan_matches_naive_greedy(rng):
    for _ in range(10):
        design = random_design(rng)
        k = int(rng.integers(1, design.p + 1))
        lam = float(rng.choice([0.1, 1.0, 10.0]))
        result = greedy_select(design, k=k, lam=lam, delta=0.0)
        assert list(result.support) == naive_greedy_supports(design, k, lam)


def test_trace_is_nondecreasing_and_gains_positive(rng):
    design = random_design(rng)
    result = greedy_select(design, k=design.p, lam=1.0, delta=0.0)
    assert len(result.score_trace) == len(result.support) + 1
    assert result.score_trace[0] == 0.0
    diffs = np.diff(result.score_trace)
    assert np.all(diffs >= -1e-12)
    assert np.allclose(diffs, result.gains)


def test_budget_exceeding_width_selects_everything(rng):
    design = random_design(rng)
    result = greedy_select(design, k=design.p + 5, lam=1.0, delta=0.0)
    assert sorted(result.support) == list(range(design.p))
    assert result.stop_reason is StopReason.EXHAUSTED


def test_exact_budget_reports_budget_stop(rng):
    design = random_design(rng)
    result = greedy_select(design, k=design.p, lam=1.0, delta=0.0)
    assert result.stop_reason is StopReason.BUDGET_K


def test_tie_breaks_toward_lowest_index(rng):
    # column 1 duplicates column 0 exactly; the first pick must be 0
    y = mixed_labels(rng, 10)
    base = y + 0.1 * rng.standard_normal(10)
    X = np.column_stack([base, base, rng.standard_normal((10, 3))])
    design = assemble_design(X, None, y)
    result = greedy_select(design, k=1, lam=1.0, delta=0.0)
    assert result.support == (0,)
    assert list(result.support) == naive_greedy_supports(design, 1, 1.0)


# ---------------------------------------------------------------------------
# ridge identity at full support


def test_unbudgeted_selection_recovers_ridge(rng):
    design = random_design(rng, m_hi=12, p_hi=8, m_lo=9, p_lo=5)
    lam = 0.7
    result = greedy_select(design, k=design.p, lam=lam, delta=0.0)
    Z, y, m, p = design.Z, design.y, design.m, design.p
    ridge = np.linalg.solve(Z.T @ Z + m * lam * np.eye(p), Z.T @ y)
    np.testing.assert_allclose(result.weights, ridge, rtol=1e-9, atol=1e-12)


def test_weights_match_dual_extraction(rng):
    design = random_design(rng)
    k = min(3, design.p)
    result = greedy_select(design, k=k, lam=1.0, delta=0.0)
    state = init_dual_state(design.m, design.m * 1.0)
    for j in result.support:
        state = sm_update(state, design.Z[:, j])
    np.testing.assert_allclose(
        result.weights, extract_weights(design, result.support, state),
        rtol=1e-9, atol=1e-12,
    )


def test_weights_solve_support_restricted_ridge(rng):
    design = random_design(rng)
    k = min(4, design.p)
    lam = 2.0
    result = greedy_select(design, k=k, lam=lam, delta=0.0)
    S = list(result.support)
    Zs = design.Z[:, S]
    direct = np.linalg.solve(
        Zs.T @ Zs + design.m * lam * np.eye(len(S)), Zs.T @ design.y
    )
    np.testing.assert_allclose(result.weights[S], direct, rtol=1e-9, atol=1e-12)
    off = np.delete(result.weights, S)
    assert np.all(off == 0.0)


# ---------------------------------------------------------------------------
# objective value


def test_objective_matches_hand_computation_and_is_bounded(rng):
    for _ in range(5):
        design = random_design(rng)
        lam = float(rng.choice([0.1, 1.0]))
        result = greedy_select(design, k=design.p, lam=lam, delta=0.0)
        pred = np.clip(design.Z @ result.weights, -1.0, 1.0)
        by_hand = lam * float(result.weights @ result.weights) + float(
            np.mean((pred - design.y) ** 2)
        )
        assert result.objective_value == pytest.approx(by_hand, rel=1e-12)
        assert result.objective_value <= 1.0 + 1e-9


# ---------------------------------------------------------------------------
# delta stopping rule


def test_delta_zero_disables_early_stop(rng):
    design = random_design(rng)
    result = greedy_select(design, k=design.p, lam=1.0, delta=0.0)
    assert len(result.support) == design.p
    assert result.forgone_gain is None


@pytest.mark.parametrize("delta", [1e-4, 1e-2, 0.1, 0.5])
def test_delta_contract(rng, delta):
    """Every accepted gain exceeds delta * m; a delta stop forgoes at most
    delta * m."""
    for _ in range(5):
        design = random_design(rng)
        result = greedy_select(design, k=design.p, lam=1.0, delta=delta)
        for g in result.gains:
            assert g > delta * design.m
        if result.stop_reason is StopReason.DELTA_STOP:
            assert result.forgone_gain <= delta * design.m + 1e-12
        else:
            assert result.forgone_gain is None


def test_large_delta_selects_nothing_gracefully(rng):
    design = random_design(rng)
    result = greedy_select(design, k=design.p, lam=1.0, delta=1e9)
    assert result.support == ()
    assert result.stop_reason is StopReason.DELTA_STOP
    # the zero predictor has truncated risk exactly 1 on +/-1 labels
    assert result.objective_value == pytest.approx(1.0, rel=1e-12)


# ---------------------------------------------------------------------------
# randomized strategy


def test_oversampled_random_equals_full(rng):
    for sample_count in (10**9, None):  # explicit oversample and exact width
        design = random_design(rng)
        count = design.p if sample_count is None else sample_count
        full = greedy_select(design, k=design.p, lam=1.0, delta=0.0)
        rand = greedy_select(
            design, k=design.p, lam=1.0, delta=0.0,
            strategy=SearchStrategy.randomized(sample_count=count, seed=7),
        )
        assert rand.support == full.support
        np.testing.assert_allclose(rand.weights, full.weights, rtol=1e-12)


def test_randomized_is_seed_deterministic(rng):
    X = rng.standard_normal((12, 300))
    design = assemble_design(X, None, mixed_labels(rng, 12))
    strat = SearchStrategy.randomized(sample_count=20, seed=123)
    a = greedy_select(design, k=6, lam=1.0, delta=0.0, strategy=strat)
    b = greedy_select(design, k=6, lam=1.0, delta=0.0, strategy=strat)
    assert a.support == b.support
    assert np.array_equal(a.weights, b.weights)
    assert a.score_trace == b.score_trace


def test_randomized_support_is_valid_and_duplicate_free(rng):
    X = rng.standard_normal((10, 500))
    design = assemble_design(X, None, mixed_labels(rng, 10))
    result = greedy_select(
        design, k=8, lam=1.0, delta=0.0,
        strategy=SearchStrategy.randomized(sample_count=13, seed=5),
    )
    assert len(result.support) == 8
    assert len(set(result.support)) == 8
    assert all(0 <= j < design.p for j in result.support)


def test_randomized_pools_are_uniform_without_replacement():
    """First-pick frequencies over many seeds are flat across columns.

    With sample_count s out of p interchangeable columns, each column's
    chance of being drawn into the first pool is s/p; column 0 must not
    be favored (a sorted-stream sampler would over-pick low indices)."""
    gen = np.random.default_rng(99)
    m, p, s, runs = 8, 40, 5, 2000
    y = mixed_labels(gen, m)
    X = gen.standard_normal((m, p))
    # make all columns equally attractive: the pick is then pool-driven
    design = assemble_design(np.tile(X[:, :1], (1, p)), None, y)
    hits = np.zeros(p)
    for seed in range(runs):
        result = greedy_select(
            design, k=1, lam=1.0, delta=0.0,
            strategy=SearchStrategy.randomized(sample_count=s, seed=seed),
        )
        # identical columns: the winner is the lowest index in the pool
        hits[result.support[0]] += 1
    # P(column j wins) = P(j in pool, all of 0..j-1 out); compare the
    # lowest index's winning rate with the exact hypergeometric value
    expected_first = s / p
    assert hits[0] / runs == pytest.approx(expected_first, abs=0.03)
    assert hits.sum() == runs


# ---------------------------------------------------------------------------
# fitted models and prediction


class LinearSources:
    """Stand-in source hypotheses: columns of X @ W."""

    def __init__(self, W):
        self.W = np.asarray(W, dtype=float)

    def predict(self, X):
        return np.asarray(X, dtype=float) @ self.W


def test_fit_model_unbudgeted_takes_every_column(rng):
    design = random_design(rng)
    model = fit_model(design, k=None, delta=0.0)
    assert len(model.selection.support) == design.p
    assert model.selection.k == design.p


def test_fit_model_prediction_round_trip(rng):
    m, d, n = 12, 5, 3
    X = rng.standard_normal((m, d))
    W = rng.standard_normal((d, n))
    sources = LinearSources(W)
    y = mixed_labels(rng, m)
    design = assemble_design(X, sources.predict(X), y)
    model = fit_model(design, sources=sources, k=4, lam=1.0, delta=0.0)

    # batch prediction reproduces the training design applied to weights
    batch = predict_raw(model, X)
    np.testing.assert_allclose(
        batch, design.Z @ model.selection.weights, rtol=1e-10, atol=1e-12
    )
    # explicit parts path agrees
    np.testing.assert_allclose(
        predict_from_parts(model, X, sources.predict(X)), batch, rtol=1e-12
    )
    # decision_values alias
    np.testing.assert_allclose(model.decision_values(X), batch, rtol=1e-15)
    # 1-D input returns a scalar
    one = predict_raw(model, X[0])
    assert isinstance(one, float)
    assert one == pytest.approx(batch[0], rel=1e-12)
    # truncation clips
    trunc = predict_truncated(model, X)
    assert np.all(trunc <= 1.0) and np.all(trunc >= -1.0)
    np.testing.assert_allclose(trunc, np.clip(batch, -1.0, 1.0), rtol=1e-15)
    scalar_trunc = predict_truncated(model, X[0])
    assert scalar_trunc == pytest.approx(float(np.clip(batch[0], -1, 1)))


def test_fit_model_validates_prediction_inputs(rng):
    m, d = 10, 4
    X = rng.standard_normal((m, d))
    P = rng.standard_normal((m, 2))
    y = mixed_labels(rng, m)
    design = assemble_design(X, P, y)

    # precomputed predictions, no source objects: raw prediction refuses
    model = fit_model(design, sources=None, k=3, delta=0.0)
    with pytest.raises(ValidationError, match="precomputed"):
        predict_raw(model, X)
    # ... but the explicit-parts path still works
    out = predict_from_parts(model, X, P)
    assert out.shape == (m,)

    with pytest.raises(DimensionError):
        predict_from_parts(model, X[:, :2], P)  # wrong feature width
    with pytest.raises(DimensionError):
        predict_from_parts(model, X, P[:3])  # row mismatch


def test_fit_model_feature_width_check(rng):
    m, d = 10, 4
    X = rng.standard_normal((m, d))
    design = assemble_design(X, None, mixed_labels(rng, m))
    model = fit_model(design, k=2, delta=0.0)
    with pytest.raises(DimensionError, match="raw features"):
        predict_raw(model, X[:, :2])


def test_all_constant_design_selects_nothing():
    X = np.full((6, 3), 2.5)
    y = np.array([1.0, -1.0, 1.0, -1.0, 1.0, -1.0])
    design = assemble_design(X, None, y)
    assert design.p == 0
    result = greedy_select(design, k=5, lam=1.0, delta=0.0)
    assert result.support == ()
    assert result.objective_value == pytest.approx(1.0)
    assert result.stop_reason is StopReason.EXHAUSTED
