"""End-to-end pipeline, hidden-size sweeps, k-fold comparison and report files.

Pipeline: bars -> indicator features -> trend labels -> eligibility filter
-> split -> scaler -> reducer (AE / RBM / none) -> SVM -> accuracy.
Scaler and reducer are fitted on training rows only unless
``fit_all_rows`` is set, in which case every row is used.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import os
import platform
import sys
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
import scipy

from . import autoencoder, rbm
from .autoencoder import AeTrainConfig
from .classifier import SvmParams, train_svm
from .errors import TrendlabError
from .indicators import (
    DEFAULT_FAST_PERIODS,
    DEFAULT_SLOW_PERIODS,
    IndicatorSpec,
    build_crossover_features,
    build_indicator_matrix,
    default_manifest,
    drop_warmup,
)
from .labeling import assign_labels, filter_trend_periods
from .market_data import BarSeries, SyntheticSpec, chronological_split, generate_synthetic, read_ohlcv_csv
from .rbm import RbmTrainConfig
from .scaling import apply_scaler, fit_scaler

FEATURE_MODES = ("crossovers", "full_manifest")
REDUCERS = ("ae", "rbm", "none")
REPORT_COLUMNS = (
    "reducer", "scaler", "feature_mode", "hidden", "fold", "accuracy",
    "reducer_train_seconds", "svm_train_seconds", "seed",
)


@dataclass(frozen=True)
class ExperimentConfig:
    data: str | SyntheticSpec | BarSeries
    feature_mode: str = "full_manifest"
    manifest: tuple[IndicatorSpec, ...] | None = None
    include_price_volume: bool = True
    fast_periods: tuple[int, ...] = DEFAULT_FAST_PERIODS
    slow_periods: tuple[int, ...] = DEFAULT_SLOW_PERIODS
    scaler: str = "ecdf"
    reducers: tuple[str, ...] = ("ae",)
    hidden_sizes: tuple[int, ...] = (25,)
    cv_hidden: Mapping[str, int] = field(default_factory=lambda: {"ae": 50, "rbm": 25})
    rbm: RbmTrainConfig = RbmTrainConfig()
    ae: AeTrainConfig = AeTrainConfig()
    svm: SvmParams = SvmParams()
    train_fraction: float = 0.9
    k: int = 10
    shuffle_folds: bool = False
    fit_all_rows: bool = False
    filter_eval: bool = False
    min_trend_length: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.feature_mode not in FEATURE_MODES:
            raise TrendlabError(f"feature_mode must be one of {FEATURE_MODES}")
        bad = [r for r in self.reducers if r not in REDUCERS]
        if bad or not self.reducers:
            raise TrendlabError(f"reducers must be drawn from {REDUCERS}, got {self.reducers}")
        if any(h < 1 for h in self.hidden_sizes) or any(h < 1 for h in self.cv_hidden.values()):
            raise TrendlabError("hidden sizes must be positive")
        if self.k < 2:
            raise TrendlabError(f"k must be >= 2, got {self.k}")
        if not 0 < self.train_fraction < 1:
            raise TrendlabError("train_fraction must lie in (0, 1)")
        if self.min_trend_length < 1:
            raise TrendlabError("min_trend_length must be >= 1")


@dataclass(frozen=True, eq=False)
class Dataset:
    """Rows with valid features and a known label, in time order."""

    X: np.ndarray
    y: np.ndarray
    eligible: np.ndarray
    columns: tuple[str, ...]
    timestamps: np.ndarray

    def __len__(self):
        return len(self.y)


@dataclass(frozen=True)
class ReportRow:
    reducer: str
    scaler: str
    feature_mode: str
    hidden: int | None
    fold: int | None
    accuracy: float
    reducer_train_seconds: float
    svm_train_seconds: float
    seed: int
    n_train: int = 0
    n_test: int = 0

    def outcome(self) -> tuple:
        """Everything except wall-clock timings."""
        return (self.reducer, self.scaler, self.feature_mode, self.hidden, self.fold,
                self.accuracy, self.seed, self.n_train, self.n_test)


@dataclass
class ExperimentReport:
    rows: list[ReportRow]
    config: dict
    environment: dict = field(default_factory=lambda: environment_stamp())
    kind: str = "sweep"


def environment_stamp() -> dict:
    return {
        "python": sys.version.split()[0],
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "platform": platform.platform(),
    }


def accuracy(pred, truth) -> float:
    """Fraction of positions where ``pred`` equals ``truth``."""
    pred = np.asarray(pred).reshape(-1)
    truth = np.asarray(truth).reshape(-1)
    if len(pred) != len(truth):
        raise TrendlabError(f"{len(pred)} predictions vs {len(truth)} labels")
    if len(pred) == 0:
        raise TrendlabError("accuracy of an empty prediction set is undefined")
    return float(np.mean(pred == truth))


# --------------------------------------------------------------------------
# data preparation


def load_bars(config: ExperimentConfig) -> BarSeries:
    data = config.data
    if isinstance(data, BarSeries):
        return data
    if isinstance(data, SyntheticSpec):
        return generate_synthetic(data, config.seed)
    return read_ohlcv_csv(data)


def prepare_dataset(config: ExperimentConfig, bars: BarSeries | None = None) -> Dataset:
    bars = load_bars(config) if bars is None else bars
    if config.feature_mode == "crossovers":
        features = build_crossover_features(config.fast_periods, config.slow_periods, bars)
    else:
        manifest = list(config.manifest) if config.manifest else default_manifest()
        features = build_indicator_matrix(manifest, bars, config.include_price_volume)
    labels = assign_labels(bars.close, bars.dates)
    labels = filter_trend_periods(labels, bars.close, config.min_trend_length)
    X, kept = drop_warmup(features, labels)
    return Dataset(X, kept.labels.astype(int), kept.eligible, features.columns, kept.timestamps)


def kfold_partition(n_rows: int, k: int, shuffle: bool = False, seed: int = 0) -> list[np.ndarray]:
    """``k`` folds of sizes differing by at most one; the first ``n % k`` get the extra row.

    Folds are contiguous blocks of time unless ``shuffle`` is set, in which
    case they are blocks of a seeded permutation (each sorted).
    """
    if k < 2:
        raise TrendlabError(f"k must be >= 2, got {k}")
    if n_rows < k:
        raise TrendlabError(f"{n_rows} rows cannot fill {k} folds")
    order = np.random.default_rng(seed).permutation(n_rows) if shuffle else np.arange(n_rows)
    sizes = [n_rows // k + (1 if i < n_rows % k else 0) for i in range(k)]
    bounds = np.cumsum([0] + sizes)
    return [np.sort(order[bounds[i]:bounds[i + 1]]) for i in range(k)]


# --------------------------------------------------------------------------
# fitting and evaluation


def fit_reduction(dataset: Dataset, fit_rows: np.ndarray, reducer: str, hidden: int | None,
                  config: ExperimentConfig):
    """Fit scaler and reducer on ``fit_rows``; returns ``(scaler, model, seconds)``."""
    scaler = fit_scaler(config.scaler, dataset.X[fit_rows], dataset.columns)
    scaled = apply_scaler(scaler, dataset.X[fit_rows], dataset.columns)
    n_features = dataset.X.shape[1]
    if reducer != "none" and not 1 <= hidden < n_features:
        raise TrendlabError(f"hidden size {hidden} must lie in [1, {n_features})")
    start = time.perf_counter()
    if reducer == "ae":
        model = autoencoder.init_ae(n_features, hidden, config.seed)
        model, _ = autoencoder.train_ae(model, scaled, dataclasses.replace(config.ae, seed=config.seed + 1))
    elif reducer == "rbm":
        model = rbm.init_rbm(n_features, hidden, config.seed)
        model, _ = rbm.train_pcd(model, scaled, dataclasses.replace(config.rbm, seed=config.seed + 1))
    else:
        model = None
    seconds = time.perf_counter() - start if model is not None else 0.0
    return scaler, model, seconds


def _codes(scaler, model, reducer, X, columns):
    Z = apply_scaler(scaler, X, columns)
    if reducer == "ae":
        return autoencoder.encode_matrix(model, Z)
    if reducer == "rbm":
        return rbm.encode(model, Z)
    return Z


def evaluate_split(dataset: Dataset, train_idx, test_idx, reducer: str, hidden: int | None,
                   config: ExperimentConfig, fold: int | None = None) -> ReportRow:
    train_idx = np.asarray(train_idx)
    test_idx = np.asarray(test_idx)
    fit_rows = np.arange(len(dataset)) if config.fit_all_rows else train_idx
    scaler, model, reducer_seconds = fit_reduction(dataset, fit_rows, reducer, hidden, config)
    codes = _codes(scaler, model, reducer, dataset.X, dataset.columns)

    svm_rows = train_idx[dataset.eligible[train_idx]]
    if len(np.unique(dataset.y[svm_rows])) < 2:
        raise TrendlabError("eligible training labels contain fewer than 2 classes")
    eval_rows = test_idx[dataset.eligible[test_idx]] if config.filter_eval else test_idx
    if len(eval_rows) == 0:
        raise TrendlabError("no test rows to evaluate")
    start = time.perf_counter()
    svm = train_svm(codes[svm_rows], dataset.y[svm_rows], config.svm)
    svm_seconds = time.perf_counter() - start
    acc = accuracy(svm.predict(codes[eval_rows]), dataset.y[eval_rows])
    return ReportRow(
        reducer=reducer,
        scaler=config.scaler,
        feature_mode=config.feature_mode,
        hidden=None if reducer == "none" else int(hidden),
        fold=fold,
        accuracy=acc,
        reducer_train_seconds=reducer_seconds,
        svm_train_seconds=svm_seconds,
        seed=config.seed,
        n_train=len(svm_rows),
        n_test=len(eval_rows),
    )


def _run_task(task):
    return evaluate_split(*task)


def _run_all(tasks, jobs: int) -> list[ReportRow]:
    if jobs <= 1 or len(tasks) <= 1:
        return [_run_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_task, tasks))


def run_pipeline(config: ExperimentConfig, reducer: str | None = None, hidden: int | None = None,
                 dataset: Dataset | None = None) -> ReportRow:
    """One hold-out run: most recent ``1 - train_fraction`` of rows as the test set."""
    reducer = reducer or config.reducers[0]
    hidden = hidden if hidden is not None else config.hidden_sizes[0]
    dataset = dataset or prepare_dataset(config)
    train, test = chronological_split(len(dataset), config.train_fraction)
    return evaluate_split(dataset, train, test, reducer, hidden, config)


def hidden_size_sweep(config: ExperimentConfig, sizes: Sequence[int] | None = None,
                      jobs: int = 1, dataset: Dataset | None = None) -> ExperimentReport:
    """A ``none`` baseline row, then one row per (reducer, size), all on the same split."""
    sizes = list(config.hidden_sizes if sizes is None else sizes)
    if not sizes:
        raise TrendlabError("hidden size list is empty")
    dataset = dataset or prepare_dataset(config)
    train, test = chronological_split(len(dataset), config.train_fraction)
    tasks = [(dataset, train, test, "none", None, config)]
    tasks += [(dataset, train, test, r, h, config) for r in config.reducers if r != "none" for h in sizes]
    return ExperimentReport(_run_all(tasks, jobs), config_echo(config, sizes=sizes), kind="sweep")


def kfold_cv(config: ExperimentConfig, k: int | None = None, jobs: int = 1,
             dataset: Dataset | None = None) -> ExperimentReport:
    """Per reducer (at its ``cv_hidden`` size), test on each fold and train on the rest."""
    k = config.k if k is None else k
    dataset = dataset or prepare_dataset(config)
    folds = kfold_partition(len(dataset), k, config.shuffle_folds, config.seed)
    everything = np.arange(len(dataset))
    tasks = []
    for r in config.reducers:
        hidden = None if r == "none" else config.cv_hidden[r]
        for f, test in enumerate(folds, 1):
            train = np.setdiff1d(everything, test)
            tasks.append((dataset, train, test, r, hidden, config, f))
    return ExperimentReport(_run_all(tasks, jobs), config_echo(config, k=k), kind="kfold")


# --------------------------------------------------------------------------
# reports


def _plain(obj):
    if isinstance(obj, IndicatorSpec):
        return str(obj)
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        if isinstance(obj, BarSeries):
            return f"<BarSeries of {len(obj)} bars>"
        return {f.name: _plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, Mapping):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def config_echo(config: ExperimentConfig, **extra) -> dict:
    echo = _plain(config)
    if isinstance(config.data, SyntheticSpec):
        echo["data"] = {"synthetic": _plain(config.data)}
    if config.manifest:
        echo["manifest"] = [str(s) for s in config.manifest]
    echo.update(_plain(extra))
    return echo


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _report_csv(report: ExperimentReport, include_timing: bool) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(REPORT_COLUMNS)
    for row in report.rows:
        hidden = "all" if row.reducer == "none" else row.hidden
        rsec = _fmt(row.reducer_train_seconds) if include_timing else "NA"
        ssec = _fmt(row.svm_train_seconds) if include_timing else "NA"
        writer.writerow([row.reducer, row.scaler, row.feature_mode, _fmt(hidden), _fmt(row.fold),
                         _fmt(row.accuracy), rsec, ssec, row.seed])
    return out.getvalue()


def _report_json(report: ExperimentReport, include_timing: bool) -> str:
    rows = []
    for row in report.rows:
        d = dataclasses.asdict(row)
        if not include_timing:
            d["reducer_train_seconds"] = d["svm_train_seconds"] = None
        rows.append(d)
    doc = {
        "kind": report.kind,
        "timing_recorded": include_timing,
        "environment": report.environment,
        "config": report.config,
        "rows": rows,
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _accuracy_dat(report: ExperimentReport) -> str:
    """Plot-ready ``hidden accuracy`` blocks per reducer (fold rows averaged)."""
    lines = []
    series: dict[str, dict[int, list[float]]] = {}
    baseline = []
    for row in report.rows:
        if row.reducer == "none":
            baseline.append(row.accuracy)
            continue
        series.setdefault(row.reducer, {}).setdefault(row.hidden, []).append(row.accuracy)
    for reducer in sorted(series):
        lines.append(f"# reducer={reducer}")
        lines.append("# hidden accuracy")
        for hidden in sorted(series[reducer]):
            lines.append(f"{hidden} {float(np.mean(series[reducer][hidden]))!r}")
        lines += ["", ""]
    if baseline:
        lines.append(f"# baseline (no reduction) accuracy {float(np.mean(baseline))!r}")
    return "\n".join(lines) + "\n"


def render_report(report: ExperimentReport, out_dir, include_timing: bool = True) -> list[Path]:
    """Write ``report.csv``, ``report.json`` and ``accuracy_by_hidden.dat``.

    Files are written to temporaries and renamed only once all three exist,
    so a failure leaves no partial report. With ``include_timing=False`` the
    wall-clock columns are written as ``NA`` and the files depend only on
    the configuration and seed.
    """
    if not report.rows:
        raise TrendlabError("report has no rows")
    out_dir = Path(out_dir)
    contents = {
        "report.csv": _report_csv(report, include_timing),
        "report.json": _report_json(report, include_timing),
        "accuracy_by_hidden.dat": _accuracy_dat(report),
    }
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise TrendlabError(f"cannot create report directory {out_dir}: {exc}") from None
    temps: dict[str, str] = {}
    try:
        for name, text in contents.items():
            fd, tmp = tempfile.mkstemp(prefix=f".{name}.", dir=out_dir)
            temps[name] = tmp
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        for name, tmp in temps.items():
            os.replace(tmp, out_dir / name)
    except OSError as exc:
        for tmp in temps.values():
            if os.path.exists(tmp):
                os.unlink(tmp)
        raise TrendlabError(f"cannot write report to {out_dir}: {exc}") from None
    return [out_dir / name for name in contents]
