"""Shared construction helpers, reference oracles, and the acceptance
criterion reporter for the suite."""

from __future__ import annotations

import numpy as np
import pytest

from greedytl.core import assemble_design, naive_regularized_score

# One line per release-gate criterion, echoed in the terminal summary so
# a full run always ends with an explicit pass/fail ledger.
CRITERION_LINES: list[str] = []


def record_criterion(number: int, description: str, passed: bool, detail: str = "") -> None:
    """Record and print a criterion verdict, then enforce it."""
    tag = "PASS" if passed else "FAIL"
    suffix = f" [{detail}]" if detail else ""
    line = f"[{tag}] criterion {number}: {description}{suffix}"
    CRITERION_LINES.append(line)
    print(line)
    assert passed, line


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if CRITERION_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in CRITERION_LINES:
            terminalreporter.write_line(line)


def sylvester_hadamard(n: int) -> np.ndarray:
    """Hadamard matrix of order n (n a power of two) by doubling."""
    H = np.array([[1.0]])
    while H.shape[0] < n:
        H = np.block([[H, H], [H, -H]])
    if H.shape[0] != n:
        raise ValueError(f"order {n} is not a power of two")
    return H


def mixed_labels(rng: np.random.Generator, m: int) -> np.ndarray:
    """Random ±1 labels guaranteed to contain both classes."""
    y = np.where(rng.standard_normal(m) > 0, 1.0, -1.0)
    if abs(float(y.sum())) == m:
        y[0] = -y[0]
    return y


def random_design(rng: np.random.Generator, m_hi: int = 15, p_hi: int = 25,
                  m_lo: int = 4, p_lo: int = 2):
    """A standardized Gaussian design with mixed labels; may drop columns."""
    m = int(rng.integers(m_lo, m_hi + 1))
    p = int(rng.integers(p_lo, p_hi + 1))
    X = rng.standard_normal((m, p))
    return assemble_design(X, None, mixed_labels(rng, m))


def naive_greedy_supports(design, k: int, lam: float) -> list[int]:
    """Reference greedy: re-solve the regularized score from scratch for
    every candidate at every step; strict improvement over the running
    best breaks ties toward the lowest column index."""
    S: list[int] = []
    for _ in range(min(k, design.p)):
        best, best_score = None, -np.inf
        for j in range(design.p):
            if j in S:
                continue
            score = naive_regularized_score(design, S + [j], lam)
            if score > best_score:
                best, best_score = j, score
        S.append(best)
    return S


@pytest.fixture
def rng():
    return np.random.default_rng(20260817)
