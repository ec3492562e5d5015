"""Classification metrics for +/-1 problems."""

from __future__ import annotations

import numpy as np

from .core import validate_labels
from .errors import DimensionError, MetricError


def decisions(predictions) -> np.ndarray:
    """Map real-valued scores to +/-1 labels; a score of exactly 0 maps to +1."""
    pred = np.asarray(predictions, dtype=float).ravel()
    return np.where(pred >= 0.0, 1.0, -1.0)


def balanced_accuracy(predictions, y) -> float:
    """Mean of the per-class accuracies of sign(predictions).

    Insensitive to class imbalance and to positive rescaling of the
    scores.  Undefined (raises) when only one class is present.
    """
    pred = np.asarray(predictions, dtype=float).ravel()
    labels = validate_labels(y, name="labels")
    if pred.size != labels.size:
        raise DimensionError(f"{pred.size} predictions for {labels.size} labels")
    pos = labels == 1.0
    neg = ~pos
    if not pos.any() or not neg.any():
        raise MetricError("balanced accuracy needs both classes present")
    dec = decisions(pred)
    tpr = float(np.mean(dec[pos] == 1.0))
    tnr = float(np.mean(dec[neg] == -1.0))
    return 0.5 * (tpr + tnr)
