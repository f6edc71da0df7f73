"""``trendlab`` command line: synth, features, label, sweep, cv.

Exit status is 0 on success, 1 on a runtime error and 2 on a usage error.
``--config FILE`` overlays flat ``key = value`` lines named after the long
flags; flags given on the command line win over the file. The default seed
comes from ``TRENDLAB_SEED`` when set.
"""

from __future__ import annotations

import argparse
import os
import sys
import tempfile
import warnings
from pathlib import Path

from .autoencoder import AeTrainConfig
from .classifier import SvmParams
from .errors import TrendlabError
from .experiment import ExperimentConfig, hidden_size_sweep, kfold_cv, render_report
from .indicators import (
    DEFAULT_FAST_PERIODS,
    DEFAULT_SLOW_PERIODS,
    build_crossover_features,
    build_indicator_matrix,
    default_manifest,
    parse_manifest,
)
from .labeling import assign_labels, filter_trend_periods
from .market_data import SyntheticSpec, generate_synthetic, read_ohlcv_csv, render_ohlcv_csv
from .rbm import RbmTrainConfig

DEFAULT_SWEEP_SIZES = "1,3,5,10,15,25,30,40,50,60,70,80,90"
_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _int_list(text: str) -> tuple[int, ...]:
    try:
        values = tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not values or min(values) < 1:
        raise argparse.ArgumentTypeError(f"expected positive integers, got {text!r}")
    return values


def _key_value(text: str) -> tuple[str, float]:
    key, sep, value = text.partition("=")
    try:
        if not sep:
            raise ValueError
        return key.strip(), float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected KEY=NUMBER, got {text!r}") from None


def _default_seed() -> int:
    raw = os.environ.get("TRENDLAB_SEED")
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise TrendlabError(f"TRENDLAB_SEED must be an integer, got {raw!r}") from None


def _add_common(p: argparse.ArgumentParser, seed: int) -> None:
    p.add_argument("--config", metavar="FILE", help="key = value file; command-line flags take precedence")
    p.add_argument("--seed", type=int, default=seed, help="master seed (env TRENDLAB_SEED)")


def _add_data(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("data source")
    g.add_argument("--data", metavar="CSV", help="OHLCV CSV file")
    g.add_argument("--synth-kind", choices=("gbm", "regime_switch", "sinusoid"),
                   help="use a synthetic series instead of --data")
    g.add_argument("--synth-length", type=int, default=2000, help="synthetic series length")
    g.add_argument("--synth-param", type=_key_value, action="append", default=[], metavar="KEY=VALUE",
                   help="synthetic generator parameter (repeatable)")


def _add_features(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("features")
    g.add_argument("--feature-mode", choices=("full_manifest", "crossovers"), default="full_manifest")
    g.add_argument("--manifest", metavar="FILE", help="indicator manifest (default: built-in manifest)")
    g.add_argument("--no-price-volume", action="store_true", help="omit adj_close and volume columns")
    g.add_argument("--fast-periods", type=_int_list, default=",".join(map(str, DEFAULT_FAST_PERIODS)),
                   metavar="LIST", help="crossover fast SMA periods")
    g.add_argument("--slow-periods", type=_int_list, default=",".join(map(str, DEFAULT_SLOW_PERIODS)),
                   metavar="LIST", help="crossover slow SMA periods")


def _add_experiment(p: argparse.ArgumentParser) -> None:
    _add_data(p)
    _add_features(p)
    g = p.add_argument_group("pipeline")
    g.add_argument("--scaler", choices=("ecdf", "minmax"), default="ecdf")
    g.add_argument("--reducer", choices=("ae", "rbm", "both", "none"), default="both")
    g.add_argument("--train-fraction", type=float, default=0.9, help="hold-out split for sweeps")
    g.add_argument("--min-trend-length", type=int, default=10)
    g.add_argument("--fit-all-rows", action="store_true",
                   help="fit scaler and reducer on all rows, test rows included")
    g.add_argument("--filter-eval", action="store_true",
                   help="apply the trend-period filter to evaluation rows too")
    g = p.add_argument_group("reducer training")
    ae, rb = AeTrainConfig(), RbmTrainConfig()
    g.add_argument("--max-epochs", type=int, default=ae.max_epochs)
    g.add_argument("--batch-size", type=int, default=ae.batch_size)
    g.add_argument("--patience", type=int, default=ae.patience)
    g.add_argument("--ae-learning-rate", type=float, default=ae.learning_rate)
    g.add_argument("--ae-decay", type=float, default=ae.decay_rate)
    g.add_argument("--ae-corruption", type=float, default=ae.corruption_level)
    g.add_argument("--ae-loss", choices=("cross_entropy", "squared"), default=ae.loss)
    g.add_argument("--rbm-learning-rate", type=float, default=rb.learning_rate)
    g.add_argument("--rbm-decay", type=float, default=rb.decay_rate)
    g.add_argument("--gibbs-steps", type=int, default=rb.gibbs_steps)
    g = p.add_argument_group("classifier")
    g.add_argument("--svm-kernel", choices=("rbf", "linear"), default="rbf")
    g.add_argument("--svm-c", type=float, default=1.0)
    g.add_argument("--svm-gamma", type=float, default=None, help="rbf width (default 1/features)")
    g.add_argument("--svm-tol", type=float, default=1e-3)
    g = p.add_argument_group("output")
    g.add_argument("--out-dir", default="report", help="directory for report files")
    g.add_argument("--timings", action="store_true",
                   help="record wall-clock seconds in the report (makes files run-dependent)")
    g.add_argument("--jobs", type=int, default=1, help="concurrent (size, fold) runs")


def build_parser() -> argparse.ArgumentParser:
    seed = _default_seed()
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = argparse.ArgumentParser(prog="trendlab", description=__doc__.splitlines()[0], formatter_class=fmt)
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)

    p = sub.add_parser("synth", help="write a synthetic OHLCV CSV", formatter_class=fmt)
    _add_common(p, seed)
    p.add_argument("--kind", choices=("gbm", "regime_switch", "sinusoid"), required=True)
    p.add_argument("--length", type=int, required=True)
    p.add_argument("--param", type=_key_value, action="append", default=[], metavar="KEY=VALUE",
                   help="generator parameter (repeatable)")
    p.add_argument("--out", required=True, help="output CSV path")

    p = sub.add_parser("features", help="compute the feature matrix of a bar CSV", formatter_class=fmt)
    _add_common(p, seed)
    _add_data(p)
    _add_features(p)
    p.add_argument("--out", required=True, help="output CSV path")

    p = sub.add_parser("label", help="trend labels and eligibility for a bar CSV", formatter_class=fmt)
    _add_common(p, seed)
    _add_data(p)
    p.add_argument("--min-trend-length", type=int, default=10)
    p.add_argument("--out", required=True, help="output CSV path")

    p = sub.add_parser("sweep", help="accuracy against hidden-layer size", formatter_class=fmt)
    _add_common(p, seed)
    _add_experiment(p)
    p.add_argument("--sizes", type=_int_list, default=DEFAULT_SWEEP_SIZES, metavar="LIST",
                   help="hidden sizes to sweep")

    p = sub.add_parser("cv", help="k-fold comparison of the reducers", formatter_class=fmt)
    _add_common(p, seed)
    _add_experiment(p)
    p.add_argument("--k", type=int, default=10, help="number of folds")
    p.add_argument("--shuffle-folds", action="store_true", help="seeded shuffled folds instead of contiguous")
    p.add_argument("--hidden-ae", type=int, default=50)
    p.add_argument("--hidden-rbm", type=int, default=25)
    return parser


# --------------------------------------------------------------------------


def _config_tokens(path: str, subparser: argparse.ArgumentParser) -> list[str]:
    """Translate a ``key = value`` file into argv tokens for ``subparser``."""
    flags = {}
    for action in subparser._actions:
        for opt in action.option_strings:
            if opt.startswith("--"):
                flags[opt[2:]] = action
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise TrendlabError(f"--config {path}: {exc.strerror}") from None
    tokens = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip().replace("_", "-")
        value = value.strip()
        if not sep or key not in flags or key in ("config", "help"):
            subparser.error(f"--config {path} line {lineno}: unknown setting {raw.strip()!r}")
        action = flags[key]
        if isinstance(action, argparse._StoreTrueAction):
            if value.lower() in _TRUE:
                tokens.append(f"--{key}")
            elif value.lower() not in _FALSE:
                subparser.error(f"--config {path} line {lineno}: {key} expects true/false")
        else:
            tokens += [f"--{key}", value]
    return tokens


def parse_args(argv: list[str]) -> argparse.Namespace:
    parser = build_parser()
    wants_config = any(a == "--config" or a.startswith("--config=") for a in argv[1:])
    if argv and not argv[0].startswith("-") and wants_config:
        pre = argparse.ArgumentParser(add_help=False)
        pre.add_argument("--config")
        known, _ = pre.parse_known_args(argv[1:])
        if known.config:
            sub = parser._subparsers._group_actions[0].choices.get(argv[0])
            if sub is not None:
                argv = [argv[0]] + _config_tokens(known.config, sub) + argv[1:]
    return parser.parse_args(argv)


def _write_atomic(path: str, text: str) -> None:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{target.name}.", dir=target.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _data_source(args):
    if args.synth_kind:
        return SyntheticSpec(args.synth_kind, args.synth_length, dict(args.synth_param))
    if not args.data:
        raise TrendlabError("one of --data or --synth-kind is required")
    return args.data


def _bars(args):
    source = _data_source(args)
    if isinstance(source, SyntheticSpec):
        return generate_synthetic(source, args.seed)
    return read_ohlcv_csv(source)


def _manifest(args):
    if not args.manifest:
        return None
    try:
        return tuple(parse_manifest(Path(args.manifest).read_text(encoding="utf-8")))
    except OSError as exc:
        raise TrendlabError(f"--manifest {args.manifest}: {exc.strerror}") from None


def _experiment_config(args, **extra) -> ExperimentConfig:
    reducers = ("ae", "rbm") if args.reducer == "both" else (args.reducer,)
    common = dict(max_epochs=args.max_epochs, batch_size=args.batch_size, patience=args.patience)
    return ExperimentConfig(
        data=_data_source(args),
        feature_mode=args.feature_mode,
        manifest=_manifest(args),
        include_price_volume=not args.no_price_volume,
        fast_periods=args.fast_periods,
        slow_periods=args.slow_periods,
        scaler=args.scaler,
        reducers=reducers,
        ae=AeTrainConfig(learning_rate=args.ae_learning_rate, decay_rate=args.ae_decay,
                         corruption_level=args.ae_corruption, loss=args.ae_loss, **common),
        rbm=RbmTrainConfig(learning_rate=args.rbm_learning_rate, decay_rate=args.rbm_decay,
                           gibbs_steps=args.gibbs_steps, **common),
        svm=SvmParams(kernel=args.svm_kernel, C=args.svm_c, gamma=args.svm_gamma, tolerance=args.svm_tol),
        train_fraction=args.train_fraction,
        fit_all_rows=args.fit_all_rows,
        filter_eval=args.filter_eval,
        min_trend_length=args.min_trend_length,
        seed=args.seed,
        **extra,
    )


def run_command(argv: list[str]) -> int:
    args = parse_args(argv)
    if args.command == "synth":
        bars = generate_synthetic(SyntheticSpec(args.kind, args.length, dict(args.param)), args.seed)
        _write_atomic(args.out, render_ohlcv_csv(bars))
    elif args.command == "features":
        bars = _bars(args)
        if args.feature_mode == "crossovers":
            fm = build_crossover_features(args.fast_periods, args.slow_periods, bars)
        else:
            manifest = list(_manifest(args) or default_manifest())
            fm = build_indicator_matrix(manifest, bars, not args.no_price_volume)
        _write_atomic(args.out, fm.to_csv())
    elif args.command == "label":
        bars = _bars(args)
        labels = assign_labels(bars.close, bars.dates)
        labels = filter_trend_periods(labels, bars.close, args.min_trend_length)
        _write_atomic(args.out, labels.to_csv())
    elif args.command == "sweep":
        config = _experiment_config(args, hidden_sizes=args.sizes)
        report = hidden_size_sweep(config, jobs=args.jobs)
        render_report(report, args.out_dir, include_timing=args.timings)
    elif args.command == "cv":
        config = _experiment_config(args, k=args.k, shuffle_folds=args.shuffle_folds,
                                    cv_hidden={"ae": args.hidden_ae, "rbm": args.hidden_rbm})
        report = kfold_cv(config, jobs=args.jobs)
        render_report(report, args.out_dir, include_timing=args.timings)
    return 0


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return run_command(argv)
    except SystemExit as exc:
        # argparse: 2 for usage errors, 0 for --help
        return exc.code if isinstance(exc.code, int) else 2
    except (TrendlabError, OSError) as exc:
        print(f"trendlab: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
