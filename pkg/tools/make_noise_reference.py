"""Regenerate the pinned noise-robustness reference run.

The acceptance suite replays the exact configuration stored in
``tests/data/noise_reference.json`` and checks both that the numbers
reproduce and that the robustness margins hold.  Rerun this script only
when the generator or selection defaults intentionally change, and
commit the refreshed artifact together with that change.

Usage:  python3 tools/make_noise_reference.py
"""

from __future__ import annotations

import json
from pathlib import Path

from greedytl.data import SynthConfig
from greedytl.harness import ExperimentConfig, run_benchmark

OUT_PATH = Path(__file__).resolve().parent.parent / "tests" / "data" / "noise_reference.json"

SYNTH = SynthConfig(
    d=50,
    n=200,
    n_relevant=5,
    m_train_pos=10,
    m_train_neg=10,
    m_test=200,
    noise_std=0.1,
    seed=0,
    relevant_rotation=0.15,
    distractor_bias=0.1,
)

BASE = dict(
    methods=("rls_src_feat", "greedytl"),
    k=20,
    lam=1.0,
    delta=1e-4,
    sample_count=59,
    seed=0,
    reps=50,
    synth=SYNTH,
    train_pos=10,
    train_neg=10,
)

NOISE_DIMS = 1000


def main() -> None:
    clean = run_benchmark(ExperimentConfig(**BASE, noise_dims=0))
    noisy = run_benchmark(ExperimentConfig(**BASE, noise_dims=NOISE_DIMS))

    greedy_clean = clean["methods"]["greedytl"]["mean"]
    greedy_noisy = noisy["methods"]["greedytl"]["mean"]
    rls_noisy = noisy["methods"]["rls_src_feat"]["mean"]

    reference = {
        "comment": (
            "Pinned reference for the noise-robustness acceptance check: "
            "mean balanced accuracy over 50 repetitions of the synthetic "
            "transfer task (10+10 training split), clean vs 1000 injected "
            "noise dimensions."
        ),
        "config": {**{k: v for k, v in BASE.items() if k != "synth"},
                   "methods": list(BASE["methods"]),
                   "synth": SYNTH.to_dict() if hasattr(SYNTH, "to_dict") else vars(SYNTH),
                   "noise_dims": NOISE_DIMS},
        "means": {
            "greedytl_clean": greedy_clean,
            "greedytl_noisy": greedy_noisy,
            "rls_src_feat_clean": clean["methods"]["rls_src_feat"]["mean"],
            "rls_src_feat_noisy": rls_noisy,
        },
        "derived": {
            "drop_points": 100.0 * (greedy_clean - greedy_noisy),
            "advantage_points": 100.0 * (greedy_noisy - rls_noisy),
        },
        "thresholds": {"max_drop_points": 5.0, "min_advantage_points": 3.0},
    }

    OUT_PATH.parent.mkdir(parents=True, exist_ok=True)
    OUT_PATH.write_text(json.dumps(reference, indent=2, sort_keys=True) + "\n")
    print(f"wrote {OUT_PATH}")
    print(json.dumps(reference["means"], indent=2))
    print(json.dumps(reference["derived"], indent=2))


if __name__ == "__main__":
    main()
