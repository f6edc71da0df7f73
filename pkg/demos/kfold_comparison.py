"""Ten-fold comparison of the two reducers at their usual sizes.

Run with ``python demos/kfold_comparison.py``. Folds are contiguous blocks of
time, so each fold is a different market regime stretch.
"""

import numpy as np

from trendlab.autoencoder import AeTrainConfig
from trendlab.experiment import ExperimentConfig, kfold_cv, prepare_dataset
from trendlab.market_data import SyntheticSpec
from trendlab.rbm import RbmTrainConfig

config = ExperimentConfig(
    data=SyntheticSpec("regime_switch", 1500),
    reducers=("ae", "rbm", "none"),
    cv_hidden={"ae": 50, "rbm": 25},
    ae=AeTrainConfig(max_epochs=20),
    rbm=RbmTrainConfig(max_epochs=20),
    k=10,
    seed=1,
)
dataset = prepare_dataset(config)
print(f"{len(dataset)} rows x {dataset.X.shape[1]} features")

report = kfold_cv(config, dataset=dataset, jobs=2)
table = {}
for row in report.rows:
    table.setdefault(row.reducer, []).append(row.accuracy)

print("fold  " + "  ".join(f"{r:>6}" for r in table))
for f in range(config.k):
    print(f"{f + 1:>4}  " + "  ".join(f"{table[r][f]:6.3f}" for r in table))
print("mean  " + "  ".join(f"{np.mean(v):6.3f}" for v in table.values()))
print(" std  " + "  ".join(f"{np.std(v):6.3f}" for v in table.values()))
