"""Accuracy against hidden-layer size for the auto-encoder and the RBM.

Run with ``python demos/reducer_sweep.py [out_dir]``. The report files land in
``out_dir`` (default ``sweep_report``); ``accuracy_by_hidden.dat`` is ready
for gnuplot or numpy.loadtxt.
"""

import sys

from trendlab.autoencoder import AeTrainConfig
from trendlab.experiment import ExperimentConfig, hidden_size_sweep, render_report
from trendlab.market_data import SyntheticSpec
from trendlab.rbm import RbmTrainConfig

out_dir = sys.argv[1] if len(sys.argv) > 1 else "sweep_report"

config = ExperimentConfig(
    data=SyntheticSpec("regime_switch", 2000),
    scaler="ecdf",
    reducers=("ae", "rbm"),
    ae=AeTrainConfig(max_epochs=30),
    rbm=RbmTrainConfig(max_epochs=30),
    seed=0,
)
report = hidden_size_sweep(config, sizes=[1, 5, 10, 25, 50])

baseline = report.rows[0]
print(f"no reduction ({baseline.n_train} training rows): {baseline.accuracy:.3f}")
for reducer in ("ae", "rbm"):
    rows = [r for r in report.rows if r.reducer == reducer]
    line = "  ".join(f"{r.hidden:>3}:{r.accuracy:.3f}" for r in rows)
    seconds = sum(r.reducer_train_seconds for r in rows)
    print(f"{reducer:>4}  {line}   ({seconds:.1f} s training)")

for path in render_report(report, out_dir):
    print("wrote", path)
