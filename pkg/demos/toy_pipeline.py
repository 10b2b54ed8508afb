"""End-to-end recognition on a synthetic dataset with an alpha sweep.

Writes a toy dataset, a configuration file and the experiment reports under
``./toy_run``, the same files the ``h2h run`` and ``h2h grid`` commands write.

Run with ``python3 demos/toy_pipeline.py``.
"""

from pathlib import Path

from h2h.experiment import grid_search, load_config
from h2h.synthetic import make_toy_dataset

root = Path("toy_run")
# 3 classes x 5 images; 3 train, 2 test.  Test images share an occluding block.
make_toy_dataset(root / "data", occlusion=(8, 8, 12, 12))

(root / "toy.ini").write_text("""\
[dataset]
protocol = custom
manifest = data/manifest.csv
crop = 32x32

[descriptor]
cell = 8
bins = 9

[solver]
lambda = 0.01

[grid]
alpha = 0.1, 1, 10

[output]
dir = results
""")

best, report = grid_search(load_config(root / "toy.ini"))
print(report.table())
print("best alpha %g with %.1f%% recognition" % (best["alpha"], best["recognition_rate"]))
print("results in", root / "results")
