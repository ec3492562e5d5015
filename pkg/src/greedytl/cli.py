"""Command-line interface.

Subcommands: fit, predict, select, benchmark, synth, timing.  Exit codes:
0 on success, 2 on validation errors (bad files, labels, shapes, or
hyperparameters), 3 on numeric degeneracy.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict

import numpy as np

from . import __version__
from .baselines import (
    AVERAGE_KT,
    NO_TRANSFER,
    RLS_SRC_FEAT,
    BaselineModel,
    fit_average_kt,
    fit_forward_reg,
    fit_no_transfer,
    fit_rls_src_feat,
)
from .core import StandardScaler, assemble_design
from .data import (
    SourceEnsemble,
    SynthConfig,
    load_dataset_csv,
    load_features_csv,
    load_predictions_csv,
    load_sources_csv,
    save_dataset_csv,
    save_sources_csv,
    synth_transfer_task,
)
from .errors import NumericDegeneracyError, ValidationError
from .harness import (
    GREEDYTL,
    GREEDYTL59,
    METHOD_NAMES,
    ExperimentConfig,
    run_benchmark,
    timing_profile,
    write_report,
)
from .selector import (
    SearchStrategy,
    SelectionResult,
    StopReason,
    TargetModel,
    fit_model,
    greedy_select,
    predict_from_parts,
)

MODEL_SCHEMA_VERSION = 1


# ---------------------------------------------------------------------------
# shared argument groups


def _add_hyper_flags(parser, include_k=True):
    if include_k:
        parser.add_argument("--k", type=int, default=None, help="selection budget (default: no budget)")
    parser.add_argument("--lambda", dest="lam", type=float, default=1.0, help="regularizer (default 1)")
    parser.add_argument("--delta", type=float, default=1e-4, help="stop when the mean-scale gain drops to this; 0 disables (default 1e-4)")
    parser.add_argument("--strategy", choices=["full", "random"], default="full", help="candidate scan per iteration")
    parser.add_argument("--samples", type=int, default=59, help="candidates drawn per iteration with --strategy random (default 59)")
    parser.add_argument("--seed", type=int, default=0, help="random seed (default 0)")


def _add_input_flags(parser):
    parser.add_argument("--data", default=None, help="dataset CSV (features + label column)")
    parser.add_argument("--sources", default=None, help="source hypotheses CSV")
    parser.add_argument("--preds", default=None, help="precomputed source-prediction CSV")


def _strategy_from_args(args) -> SearchStrategy:
    if args.strategy == "random":
        return SearchStrategy.randomized(args.samples, seed=args.seed)
    return SearchStrategy.full()


def _load_training_parts(args):
    """Resolve --data/--sources/--preds into design blocks and an ensemble."""
    if args.data is None and args.preds is None:
        raise ValidationError("need --data and/or --preds")
    if args.sources is not None and args.preds is not None:
        raise ValidationError("give either --sources or --preds, not both")
    X = y = sources = P = None
    if args.data is not None:
        ds = load_dataset_csv(args.data)
        X, y = ds.X, ds.y
    if args.sources is not None:
        if X is None:
            raise ValidationError("--sources needs --data to apply the hypotheses to")
        sources = load_sources_csv(args.sources)
        if sources.n_features != X.shape[1]:
            raise ValidationError(
                f"sources expect {sources.n_features} features, data has {X.shape[1]}"
            )
        P = sources.predict(X)
    elif args.preds is not None:
        P, y_preds, _ = load_predictions_csv(args.preds)
        if y is not None and y_preds is not None and not np.array_equal(y, y_preds):
            raise ValidationError("labels in --data and --preds disagree")
        if y is None:
            y = y_preds
        if y is None:
            raise ValidationError("no label column found in --data or --preds")
        rows = X.shape[0] if X is not None else P.shape[0]
        if P.shape[0] != rows:
            raise ValidationError(
                f"--preds has {P.shape[0]} rows but --data has {rows}"
            )
    return X, P, y, sources


# ---------------------------------------------------------------------------
# model persistence


def _scaler_to_dict(scaler: StandardScaler) -> dict:
    return {
        "means": [float(v) for v in scaler.means],
        "scales": [float(v) for v in scaler.scales],
        "dropped": [int(j) for j in scaler.dropped],
    }


def _scaler_from_dict(d) -> StandardScaler:
    return StandardScaler(
        means=np.asarray(d["means"], dtype=float),
        scales=np.asarray(d["scales"], dtype=float),
        dropped=tuple(int(j) for j in d["dropped"]),
    )


def _sources_to_dict(sources: SourceEnsemble | None):
    if sources is None:
        return None
    return {
        "weights": [[float(v) for v in row] for row in sources.weights],
        "biases": [float(v) for v in sources.biases],
        "names": list(sources.names),
    }


def _sources_from_dict(d) -> SourceEnsemble | None:
    if d is None:
        return None
    return SourceEnsemble(
        weights=np.asarray(d["weights"], dtype=float),
        biases=np.asarray(d["biases"], dtype=float),
        names=tuple(d["names"]),
    )


def model_to_dict(model, method: str) -> dict:
    if isinstance(model, TargetModel):
        sel = model.selection
        return {
            "schema_version": MODEL_SCHEMA_VERSION,
            "kind": "model",
            "method": method,
            "n_features": model.n_features,
            "n_sources": model.n_sources,
            "truncate": bool(model.truncate),
            "scaler": _scaler_to_dict(model.scaler),
            "column_origin": [[kind, int(i)] for kind, i in model.column_origin],
            "selection": {
                "support": [int(i) for i in sel.support],
                "weights": [float(v) for v in sel.weights],
                "score_trace": [float(v) for v in sel.score_trace],
                "gains": [float(v) for v in sel.gains],
                "stop_reason": sel.stop_reason.value,
                "forgone_gain": sel.forgone_gain,
                "lam": sel.lam,
                "k": sel.k,
                "objective_value": sel.objective_value,
            },
            "sources": _sources_to_dict(model.sources),
        }
    assert isinstance(model, BaselineModel)
    return {
        "schema_version": MODEL_SCHEMA_VERSION,
        "kind": "model",
        "method": method,
        "baseline": model.kind,
        "n_features": model.n_features,
        "weights": None if model.weights is None else [float(v) for v in model.weights],
        "scaler": None if model.scaler is None else _scaler_to_dict(model.scaler),
        "lam": model.lam,
        "sources": _sources_to_dict(model.sources),
    }


def save_model(model, method: str, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model, method), fh, indent=2)
        fh.write("\n")


def load_model(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            d = json.load(fh)
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON: {exc}") from exc
    if d.get("kind") != "model":
        raise ValidationError(f"{path}: not a model file")

    if "baseline" in d:
        return BaselineModel(
            kind=d["baseline"],
            sources=_sources_from_dict(d["sources"]),
            weights=None if d["weights"] is None else np.asarray(d["weights"], dtype=float),
            scaler=None if d["scaler"] is None else _scaler_from_dict(d["scaler"]),
            n_features=int(d["n_features"]),
            lam=d["lam"],
        )
    sel = d["selection"]
    selection = SelectionResult(
        support=tuple(int(i) for i in sel["support"]),
        weights=np.asarray(sel["weights"], dtype=float),
        score_trace=tuple(float(v) for v in sel["score_trace"]),
        stop_reason=StopReason(sel["stop_reason"]),
        lam=float(sel["lam"]),
        k=int(sel["k"]),
        gains=tuple(float(v) for v in sel["gains"]),
        forgone_gain=sel["forgone_gain"],
        objective_value=float(sel["objective_value"]),
    )
    return TargetModel(
        selection=selection,
        scaler=_scaler_from_dict(d["scaler"]),
        sources=_sources_from_dict(d["sources"]),
        column_origin=tuple((kind, int(i)) for kind, i in d["column_origin"]),
        n_features=int(d["n_features"]),
        n_sources=int(d["n_sources"]),
        truncate=bool(d["truncate"]),
    )


# ---------------------------------------------------------------------------
# subcommands


def _cmd_fit(args) -> int:
    X, P, y, sources = _load_training_parts(args)
    method = args.method
    if method in (GREEDYTL, GREEDYTL59, "forward_reg"):
        design = assemble_design(X, P, y)
        if method == GREEDYTL59:
            strategy = SearchStrategy.randomized(args.samples, seed=args.seed)
        elif method == GREEDYTL:
            strategy = _strategy_from_args(args)
        else:
            strategy = _strategy_from_args(args)
        if method == "forward_reg":
            model = fit_forward_reg(design, k=args.k, delta=args.delta, sources=sources, strategy=strategy)
        else:
            model = fit_model(design, sources, k=args.k, lam=args.lam, delta=args.delta, strategy=strategy)
        sel = model.selection
        origins = [model.column_origin[j] for j in sel.support]
        print(f"selected {len(sel.support)} columns ({sel.stop_reason.value}):")
        for j, (kind, idx) in zip(sel.support, origins):
            print(f"  col {j}: {kind} {idx}  weight {sel.weights[j]:+.6f}")
    elif method == NO_TRANSFER:
        if X is None:
            raise ValidationError("no_transfer needs --data")
        model = fit_no_transfer(X, y, args.lam)
    elif method == RLS_SRC_FEAT:
        design = assemble_design(X, P, y)
        model = fit_rls_src_feat(design, args.lam, sources=sources)
    elif method == AVERAGE_KT:
        if sources is None:
            raise ValidationError("average_kt needs --sources")
        model = fit_average_kt(sources)
    else:
        raise ValidationError(
            f"cannot fit {method!r} here (best_source selects on test labels; use benchmark)"
        )
    if args.out:
        save_model(model, method, args.out)
        print(f"wrote {args.out}")
    return 0


def _cmd_predict(args) -> int:
    model = load_model(args.model)
    if args.data is None and args.preds is None:
        raise ValidationError("need --data and/or --preds")
    X = y = P = None
    if args.data is not None:
        X, y, _ = load_features_csv(args.data)
    if args.preds is not None:
        P, y_preds, _ = load_predictions_csv(args.preds)
        if y is None:
            y = y_preds

    if isinstance(model, TargetModel):
        n_feat = model.n_features
        if X is None:
            X = np.empty(((P.shape[0] if P is not None else 0), 0))
        if X.shape[1] != n_feat:
            raise ValidationError(f"model expects {n_feat} features, got {X.shape[1]}")
        if model.n_sources:
            if P is None:
                if model.sources is None:
                    raise ValidationError(
                        "model was fitted on precomputed predictions; pass --preds"
                    )
                P = model.sources.predict(X)
            elif P.shape[1] != model.n_sources:
                raise ValidationError(
                    f"model expects {model.n_sources} prediction columns, got {P.shape[1]}"
                )
        else:
            P = np.empty((X.shape[0], 0))
        if X.shape[0] != P.shape[0]:
            raise ValidationError(f"--data has {X.shape[0]} rows, --preds has {P.shape[0]}")
        raw = predict_from_parts(model, X, P)
    else:
        if X is None:
            raise ValidationError("this model predicts from raw features; pass --data")
        raw = model.decision_values(X)

    truncated = np.clip(raw, -1.0, 1.0)
    labels = np.where(raw >= 0, 1, -1)
    lines = ["prediction,truncated,decision" + (",label" if y is not None else "")]
    for i in range(len(raw)):
        row = f"{float(raw[i])!r},{float(truncated[i])!r},{int(labels[i])}"
        if y is not None:
            row += f",{float(y[i])!r}"
        lines.append(row)
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def _cmd_select(args) -> int:
    X, P, y, _ = _load_training_parts(args)
    design = assemble_design(X, P, y)
    sel = greedy_select(
        design,
        k=args.k if args.k is not None else max(design.p, 1),
        lam=args.lam,
        delta=args.delta,
        strategy=_strategy_from_args(args),
    )
    origins = [design.column_origin[j] for j in sel.support]
    out = {
        "kind": "selection",
        "support": [int(j) for j in sel.support],
        "support_origin": [[kind, int(i)] for kind, i in origins],
        "stop_reason": sel.stop_reason.value,
        "score_trace": [float(v) for v in sel.score_trace],
        "gains": [float(v) for v in sel.gains],
        "objective_value": sel.objective_value,
        "lam": args.lam,
        "delta": args.delta,
        "strategy": args.strategy,
    }
    print(f"selected {len(sel.support)} of {design.p} columns ({sel.stop_reason.value})")
    for j, (kind, idx) in zip(sel.support, origins):
        print(f"  col {j}: {kind} {idx}")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(out, fh, indent=2)
            fh.write("\n")
        print(f"wrote {args.out}")
    return 0


def _synth_config_from_args(args) -> SynthConfig:
    return SynthConfig(
        d=args.d,
        n=args.n,
        n_relevant=args.n_relevant,
        m_train_pos=args.train_pos,
        m_train_neg=args.train_neg,
        m_test=args.test_size,
        noise_std=args.noise_std,
        seed=args.seed,
    )


def _cmd_synth(args) -> int:
    config = _synth_config_from_args(args)
    task = synth_transfer_task(config)
    os.makedirs(args.out, exist_ok=True)
    train_path = os.path.join(args.out, "train.csv")
    test_path = os.path.join(args.out, "test.csv")
    sources_path = os.path.join(args.out, "sources.csv")
    meta_path = os.path.join(args.out, "task.json")
    save_dataset_csv(task.train, train_path)
    save_dataset_csv(task.test, test_path)
    save_sources_csv(task.sources, sources_path)
    with open(meta_path, "w", encoding="utf-8") as fh:
        json.dump(
            {
                "kind": "synth_task",
                "config": asdict(config),
                "ground_truth": list(task.ground_truth or ()),
            },
            fh,
            indent=2,
        )
        fh.write("\n")
    print(f"wrote {train_path}, {test_path}, {sources_path}, {meta_path}")
    return 0


def _cmd_benchmark(args) -> int:
    methods = (
        METHOD_NAMES if args.methods == "all" else tuple(args.methods.split(","))
    )
    synth = None
    if args.data is None:
        synth = SynthConfig(
            d=args.d,
            n=args.n,
            n_relevant=args.n_relevant,
            m_train_pos=args.train_pos,
            m_train_neg=args.train_neg,
            m_test=args.test_size,
            noise_std=args.noise_std,
            seed=0,  # per-repetition seeds come from the config seed
        )
    config = ExperimentConfig(
        methods=methods,
        k=args.k,
        lam=args.lam,
        delta=args.delta,
        sample_count=args.samples,
        seed=args.seed,
        reps=args.reps,
        synth=synth,
        noise_dims=args.noise_dims,
        data_path=args.data,
        sources_path=args.sources,
        train_pos=args.train_pos,
        train_neg=args.train_neg,
        test_pos=args.test_pos,
        test_neg=args.test_neg,
    )
    report = run_benchmark(config)
    for name in config.methods:
        cell = report["methods"][name]
        flag = " (oracle)" if cell["oracle_selection"] else ""
        if cell["mean"] is None:
            print(f"{name:>14}: all repetitions failed")
        else:
            print(f"{name:>14}: {cell['mean']:.4f} +/- {cell['std']:.4f}{flag}")
    if args.out:
        written = write_report(report, args.out, render_figures=not args.no_figures)
        print("wrote " + ", ".join(written))
    return 0


def _cmd_timing(args) -> int:
    p_values = [int(v) for v in args.p_values.split(",") if v]
    methods = (
        (GREEDYTL, GREEDYTL59) if args.methods == "all" else tuple(args.methods.split(","))
    )
    report = timing_profile(
        p_values,
        m=args.m,
        k=args.k if args.k is not None else 10,
        lam=args.lam,
        sample_count=args.samples,
        repeats=args.repeats,
        seed=args.seed,
        methods=methods,
    )
    for name in methods:
        cell = report["methods"][name]
        times = ", ".join(f"p={p}: {s * 1e3:.2f} ms" for p, s in zip(p_values, cell["seconds"]))
        print(f"{name}: {times}")
    if args.out:
        written = write_report(report, args.out, render_figures=not args.no_figures)
        print("wrote " + ", ".join(written))
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="greedytl",
        description="Greedy L2-regularized subset selection over features and source predictions.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="fit a model and save it as JSON")
    p_fit.add_argument("--method", default=GREEDYTL, help=f"one of {', '.join(m for m in METHOD_NAMES if m != 'best_source')}")
    _add_input_flags(p_fit)
    _add_hyper_flags(p_fit)
    p_fit.add_argument("--out", default=None, help="model JSON path")
    p_fit.set_defaults(func=_cmd_fit)

    p_pred = sub.add_parser("predict", help="score new rows with a saved model")
    p_pred.add_argument("--model", required=True, help="model JSON from fit")
    _add_input_flags(p_pred)
    p_pred.add_argument("--out", default=None, help="prediction CSV path (default stdout)")
    p_pred.set_defaults(func=_cmd_predict)

    p_sel = sub.add_parser("select", help="run subset selection and report the support")
    _add_input_flags(p_sel)
    _add_hyper_flags(p_sel)
    p_sel.add_argument("--out", default=None, help="selection JSON path")
    p_sel.set_defaults(func=_cmd_select)

    p_bench = sub.add_parser("benchmark", help="compare methods over repeated tasks")
    p_bench.add_argument("--methods", default="all", help="comma list or 'all'")
    _add_input_flags(p_bench)
    _add_hyper_flags(p_bench)
    p_bench.add_argument("--reps", type=int, default=10, help="repetitions (default 10)")
    p_bench.add_argument("--d", type=int, default=50, help="synthetic feature count")
    p_bench.add_argument("--n", type=int, default=200, help="synthetic source count")
    p_bench.add_argument("--n-relevant", type=int, default=5, help="relevant sources")
    p_bench.add_argument("--train-pos", type=int, default=2, help="positive training examples")
    p_bench.add_argument("--train-neg", type=int, default=10, help="negative training examples")
    p_bench.add_argument("--test-size", type=int, default=100, help="synthetic test examples")
    p_bench.add_argument("--test-pos", type=int, default=50, help="file mode: positive test draws")
    p_bench.add_argument("--test-neg", type=int, default=50, help="file mode: negative test draws")
    p_bench.add_argument("--noise-std", type=float, default=0.1, help="synthetic label noise")
    p_bench.add_argument("--noise-dims", type=int, default=0, help="distractor feature columns to inject")
    p_bench.add_argument("--out", default=None, help="report JSON path (CSV and figure written alongside)")
    p_bench.add_argument("--no-figures", action="store_true", help="skip figure rendering")
    p_bench.set_defaults(func=_cmd_benchmark)

    p_synth = sub.add_parser("synth", help="generate a synthetic task as CSV files")
    p_synth.add_argument("--d", type=int, default=50)
    p_synth.add_argument("--n", type=int, default=200)
    p_synth.add_argument("--n-relevant", type=int, default=5)
    p_synth.add_argument("--train-pos", type=int, default=2)
    p_synth.add_argument("--train-neg", type=int, default=10)
    p_synth.add_argument("--test-size", type=int, default=100)
    p_synth.add_argument("--noise-std", type=float, default=0.1)
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--out", required=True, help="output directory")
    p_synth.set_defaults(func=_cmd_synth)

    p_time = sub.add_parser("timing", help="profile selection time against design width")
    p_time.add_argument("--p-values", default="500,1000,2000,5000", help="comma list of design widths")
    p_time.add_argument("--m", type=int, default=20, help="examples per design")
    p_time.add_argument("--k", type=int, default=10, help="selection budget")
    p_time.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p_time.add_argument("--samples", type=int, default=59)
    p_time.add_argument("--seed", type=int, default=0)
    p_time.add_argument("--repeats", type=int, default=3, help="timed repeats per point (median)")
    p_time.add_argument("--methods", default="all", help="comma list or 'all'")
    p_time.add_argument("--out", default=None, help="report JSON path")
    p_time.add_argument("--no-figures", action="store_true")
    p_time.set_defaults(func=_cmd_timing)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NumericDegeneracyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
