"""Benchmark and timing harness over synthetic or file-based tasks.

Reports are plain dicts with a versioned schema, built so that two runs
of the same config differ only in timings and the timestamp.  Every
random draw traces back to the config seed through a single seed
sequence, and the per-repetition seeds are echoed into the report.
"""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, replace

import numpy as np

from . import __version__ as _pkg_version
from .baselines import (
    AVERAGE_KT,
    BEST_SOURCE,
    FORWARD_REG,
    NO_TRANSFER,
    RLS_SRC_FEAT,
    best_source_select,
    fit_average_kt,
    fit_forward_reg,
    fit_no_transfer,
    fit_rls_src_feat,
)
from .core import assemble_design
from .data import (
    SynthConfig,
    TransferTask,
    inject_noise,
    load_dataset_csv,
    load_sources_csv,
    make_binary_split,
    synth_transfer_task,
)
from .errors import GreedyTLError, ParameterError, ValidationError
from .metrics import balanced_accuracy
from .oracle import check_solution_bounds
from .selector import SearchStrategy, TargetModel, fit_model, greedy_select

GREEDYTL = "greedytl"
GREEDYTL59 = "greedytl59"

METHOD_NAMES = (
    NO_TRANSFER,
    RLS_SRC_FEAT,
    AVERAGE_KT,
    BEST_SOURCE,
    FORWARD_REG,
    GREEDYTL,
    GREEDYTL59,
)

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class ExperimentConfig:
    """One benchmark run: which methods, their shared hyperparameters, and
    where the tasks come from (a synthetic generator or a labeled pool
    plus sources on disk, re-split every repetition)."""

    methods: tuple[str, ...] = METHOD_NAMES
    #: selection budget; None means "as many columns as training examples"
    k: int | None = None
    lam: float = 1.0
    delta: float = 1e-4
    sample_count: int = 59
    seed: int = 0
    reps: int = 10
    synth: SynthConfig | None = None
    noise_dims: int = 0
    data_path: str | None = None
    sources_path: str | None = None
    train_pos: int = 2
    train_neg: int = 10
    test_pos: int = 50
    test_neg: int = 50

    def __post_init__(self):
        object.__setattr__(self, "methods", tuple(self.methods))
        unknown = [m for m in self.methods if m not in METHOD_NAMES]
        if unknown:
            raise ParameterError(
                f"unknown methods {unknown}; choose from {list(METHOD_NAMES)}"
            )
        if not self.methods:
            raise ParameterError("need at least one method")
        if self.reps < 1:
            raise ParameterError(f"reps must be >= 1, got {self.reps}")
        if not self.lam > 0:
            raise ParameterError(f"lam must be positive, got {self.lam}")
        if self.delta < 0:
            raise ParameterError(f"delta must be >= 0, got {self.delta}")
        if self.sample_count < 1:
            raise ParameterError(f"sample_count must be >= 1, got {self.sample_count}")
        if self.k is not None and self.k < 1:
            raise ParameterError(f"k must be >= 1 when given, got {self.k}")
        if self.noise_dims < 0:
            raise ParameterError(f"noise_dims must be >= 0, got {self.noise_dims}")
        if (self.data_path is None) != (self.sources_path is None):
            raise ParameterError("file mode needs both a data pool and a sources file")

    def to_dict(self) -> dict:
        out = asdict(self)
        out["methods"] = list(self.methods)
        return out


def _rep_seeds(seed: int, reps: int) -> np.ndarray:
    """(reps, 3) integers: task seed, train-noise seed, test-noise seed."""
    state = np.random.SeedSequence(seed).generate_state(reps * 3)
    return state.reshape(reps, 3).astype(np.int64)


def _build_task(config: ExperimentConfig, pool, sources, task_seed: int) -> TransferTask:
    if pool is not None:
        train, test = make_binary_split(
            pool,
            config.train_pos,
            config.train_neg,
            config.test_pos,
            config.test_neg,
            seed=task_seed,
        )
        return TransferTask(train=train, test=test, sources=sources)
    synth = config.synth if config.synth is not None else SynthConfig()
    return synth_transfer_task(replace(synth, seed=int(task_seed)))


def _with_noise(task: TransferTask, dims: int, train_seed: int, test_seed: int) -> TransferTask:
    if dims == 0:
        return task
    train = inject_noise(task.train, dims, seed=train_seed)
    test = inject_noise(task.test, dims, seed=test_seed)
    sources = task.sources.pad_features(train.d)
    return TransferTask(
        train=train, test=test, sources=sources, ground_truth=task.ground_truth
    )


def _fit_method(name: str, task: TransferTask, design, config: ExperimentConfig, rep_seed: int):
    """Fit one method; returns (model, fit_seconds) timing the fit call only.

    A missing budget (``config.k is None``) resolves to the number of
    training examples: with fewer samples than candidate columns the
    score can keep improving until the kernel saturates, so "select as
    many columns as we have examples" is the widest budget that still
    forces a sparse model.
    """
    budget = config.k if config.k is not None else task.train.m
    start = time.perf_counter()
    if name == NO_TRANSFER:
        model = fit_no_transfer(task.train.X, task.train.y, config.lam)
    elif name == RLS_SRC_FEAT:
        model = fit_rls_src_feat(design, config.lam, sources=task.sources)
    elif name == AVERAGE_KT:
        model = fit_average_kt(task.sources)
    elif name == BEST_SOURCE:
        model = best_source_select(task.sources, task.test)
    elif name == FORWARD_REG:
        model = fit_forward_reg(design, k=budget, delta=config.delta, sources=task.sources)
    elif name == GREEDYTL:
        model = fit_model(
            design,
            task.sources,
            k=budget,
            lam=config.lam,
            delta=config.delta,
            strategy=SearchStrategy.full(),
        )
    elif name == GREEDYTL59:
        model = fit_model(
            design,
            task.sources,
            k=budget,
            lam=config.lam,
            delta=config.delta,
            strategy=SearchStrategy.randomized(config.sample_count, seed=rep_seed),
        )
    else:  # pragma: no cover - guarded by the config validator
        raise ParameterError(f"unknown method {name!r}")
    return model, time.perf_counter() - start


def _tagged_support(model) -> list | None:
    selection = getattr(model, "selection", None)
    origin = getattr(model, "column_origin", None)
    if selection is None or origin is None:
        return None
    return [[origin[j][0], int(origin[j][1])] for j in selection.support]


def run_benchmark(config: ExperimentConfig) -> dict:
    """Fit every configured method on every repetition and aggregate.

    A method failure is recorded in its own cell and does not abort the
    run.  Repetitions are independent given their echoed seeds, so the
    loop could fan out; it runs sequentially for determinism.
    """
    pool = sources_file = None
    if config.data_path is not None:
        pool = load_dataset_csv(config.data_path)
        sources_file = load_sources_csv(config.sources_path)
        if sources_file.n_features != pool.d:
            raise ValidationError(
                f"sources expect {sources_file.n_features} features, pool has {pool.d}"
            )

    seeds = _rep_seeds(config.seed, config.reps)
    cells = {
        name: {
            "balanced_accuracy": [],
            "fit_seconds": [],
            "supports": [],
            "bound_checks": [],
            "errors": {},
            "oracle_selection": name == BEST_SOURCE,
        }
        for name in config.methods
    }

    for rep in range(config.reps):
        task_seed, tr_noise_seed, te_noise_seed = (int(s) for s in seeds[rep])
        task = _build_task(config, pool, sources_file, task_seed)
        task = _with_noise(task, config.noise_dims, tr_noise_seed, te_noise_seed)
        design = assemble_design(
            task.train.X, task.sources.predict(task.train.X), task.train.y
        )
        for name in config.methods:
            cell = cells[name]
            try:
                model, fit_seconds = _fit_method(name, task, design, config, task_seed)
                scores = model.decision_values(task.test.X)
                acc = balanced_accuracy(scores, task.test.y)
            except GreedyTLError as exc:
                cell["balanced_accuracy"].append(None)
                cell["fit_seconds"].append(None)
                cell["supports"].append(None)
                cell["bound_checks"].append(None)
                cell["errors"][str(rep)] = str(exc)
                continue
            cell["balanced_accuracy"].append(float(acc))
            cell["fit_seconds"].append(float(fit_seconds))
            cell["supports"].append(_tagged_support(model))
            if isinstance(model, TargetModel):
                cell["bound_checks"].append(check_solution_bounds(model, design).to_dict())
            else:
                cell["bound_checks"].append(None)

    methods = {}
    for name in config.methods:
        cell = cells[name]
        values = [v for v in cell["balanced_accuracy"] if v is not None]
        methods[name] = {
            "balanced_accuracy": cell["balanced_accuracy"],
            "mean": float(np.mean(values)) if values else None,
            "std": float(np.std(values)) if values else None,
            "fit_seconds": cell["fit_seconds"],
            "supports": cell["supports"],
            "bound_checks": cell["bound_checks"],
            "oracle_selection": cell["oracle_selection"],
            "errors": cell["errors"],
        }

    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "benchmark",
        "config": config.to_dict(),
        "repetition_seeds": [[int(v) for v in row] for row in seeds],
        "methods": methods,
        "provenance": _provenance(),
    }


def _provenance() -> dict:
    import platform

    return {
        "package": f"greedytl {_pkg_version}",
        "numpy": np.__version__,
        "python": platform.python_version(),
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime()),
    }


def strip_volatile(report: dict) -> dict:
    """Deep copy with timings and the timestamp removed, for determinism checks."""
    out = json.loads(json.dumps(report))
    out.get("provenance", {}).pop("timestamp", None)
    if out.get("kind") == "benchmark":
        for cell in out.get("methods", {}).values():
            cell.pop("fit_seconds", None)
    elif out.get("kind") == "timing":
        for cell in out.get("methods", {}).values():
            cell.pop("seconds", None)
            cell.pop("slope", None)
            cell.pop("ratio_last_over_first", None)
    return out


# ---------------------------------------------------------------------------
# timing


def _single_worker():
    """Limit BLAS pools to one thread where possible; no-op otherwise."""
    try:
        from threadpoolctl import threadpool_limits

        return threadpool_limits(limits=1)
    except Exception:
        import contextlib

        return contextlib.nullcontext()


def timing_profile(
    p_values,
    m: int = 20,
    k: int = 10,
    lam: float = 1.0,
    sample_count: int = 59,
    repeats: int = 3,
    seed: int = 0,
    methods: tuple[str, ...] = (GREEDYTL, GREEDYTL59),
) -> dict:
    """Median fit time of the selection step as the column count grows.

    Each point times ``greedy_select`` on a fresh Gaussian design with
    balanced labels, after one warmup call; design assembly and I/O are
    excluded, the delta rule is disabled, and execution is forced onto a
    single worker so the medians are comparable.
    """
    p_values = [int(p) for p in p_values]
    if not p_values:
        raise ParameterError("need at least one design width")
    if min(p_values) < 1:
        raise ParameterError(f"design widths must be >= 1, got {min(p_values)}")
    if repeats < 1:
        raise ParameterError(f"repeats must be >= 1, got {repeats}")
    for name in methods:
        if name not in (GREEDYTL, GREEDYTL59):
            raise ParameterError(f"timing supports greedytl and greedytl59, got {name!r}")

    results = {name: [] for name in methods}
    with _single_worker():
        for p in p_values:
            rng = np.random.default_rng(np.random.SeedSequence([seed, p]))
            X = rng.standard_normal((m, p))
            y = np.ones(m)
            y[m // 2 :] = -1.0
            design = assemble_design(X, None, y)
            budget = min(k, design.p)
            for name in methods:
                strategy = (
                    SearchStrategy.full()
                    if name == GREEDYTL
                    else SearchStrategy.randomized(sample_count, seed=seed)
                )
                fit = lambda: greedy_select(  # noqa: E731
                    design, k=budget, lam=lam, delta=0.0, strategy=strategy
                )
                fit()  # warmup
                times = []
                for _ in range(repeats):
                    start = time.perf_counter()
                    fit()
                    times.append(time.perf_counter() - start)
                results[name].append(float(np.median(times)))

    methods_out = {}
    for name in methods:
        seconds = results[name]
        slope = (
            float(np.polyfit(p_values, seconds, 1)[0]) if len(p_values) >= 2 else None
        )
        ratio = seconds[-1] / seconds[0] if len(seconds) >= 2 and seconds[0] > 0 else None
        methods_out[name] = {
            "seconds": seconds,
            "slope": slope,
            "ratio_last_over_first": ratio,
        }

    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "timing",
        "m": int(m),
        "k": int(k),
        "lam": float(lam),
        "sample_count": int(sample_count),
        "repeats": int(repeats),
        "seed": int(seed),
        "p_values": p_values,
        "methods": methods_out,
        "provenance": _provenance(),
    }


# ---------------------------------------------------------------------------
# report output


def write_report(report: dict, out_path: str, render_figures: bool = True) -> list[str]:
    """Write the JSON report plus a CSV summary and figures next to it.

    Returns the list of written paths.  The CSV flattens per-repetition
    numbers for spreadsheet use; figures are skipped on request.
    """
    out_path = str(out_path)
    stem = out_path[:-5] if out_path.endswith(".json") else out_path
    written = []

    with open(out_path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")
    written.append(out_path)

    csv_path = stem + ".csv"
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        import csv as _csv

        writer = _csv.writer(fh)
        if report["kind"] == "benchmark":
            writer.writerow(
                ["method", "rep", "task_seed", "balanced_accuracy", "fit_seconds", "support_size"]
            )
            seeds = report["repetition_seeds"]
            for name, cell in report["methods"].items():
                for rep, acc in enumerate(cell["balanced_accuracy"]):
                    support = cell["supports"][rep]
                    writer.writerow(
                        [
                            name,
                            rep,
                            seeds[rep][0],
                            "" if acc is None else repr(acc),
                            ""
                            if cell["fit_seconds"][rep] is None
                            else repr(cell["fit_seconds"][rep]),
                            "" if support is None else len(support),
                        ]
                    )
        else:
            writer.writerow(["method", "p", "seconds"])
            for name, cell in report["methods"].items():
                for p, sec in zip(report["p_values"], cell["seconds"]):
                    writer.writerow([name, p, repr(sec)])
    written.append(csv_path)

    if render_figures:
        from . import figures

        if report["kind"] == "benchmark":
            fig_path = stem + "_accuracy.png"
            figures.render_benchmark_figure(report, fig_path)
        else:
            fig_path = stem + "_scaling.png"
            figures.render_timing_figure(report, fig_path)
        written.append(fig_path)

    return written
