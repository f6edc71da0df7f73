"""Trend prediction from technical indicators with RBM / auto-encoder feature reduction."""

from .errors import DataError, IndicatorError, ModelError, TrendlabError
from .market_data import BarSeries, SyntheticSpec, chronological_split, generate_synthetic, parse_ohlcv_csv
from .indicators import (
    FeatureMatrix,
    IndicatorSpec,
    build_crossover_features,
    build_indicator_matrix,
    compute_indicator,
    default_manifest,
    drop_warmup,
)
from .labeling import LabelSeries, assign_labels, centered_ma, filter_trend_periods
from .scaling import ScalerModel, apply_scaler, fit_scaler
from .classifier import SvmModel, SvmParams, train_svm
from .experiment import (
    ExperimentConfig,
    ExperimentReport,
    accuracy,
    hidden_size_sweep,
    kfold_cv,
    render_report,
    run_pipeline,
)

__version__ = "0.1.0"
