"""
The command-line pipeline
=========================

The ``specrecon`` command chains gen, augment, train, reconstruct, eval and
bench through files.  Each dataset directory carries its response matrix and
a manifest of seeds and configuration.  This demo drives the same entry point
in-process.
"""

import json
import tempfile
from pathlib import Path

from specrecon.cli import main

work = Path(tempfile.mkdtemp())
cfg = work / "quick.ini"
cfg.write_text("[train]\nbatch_size = 8\niterations = 50\n")


def run(*args):
    code = main([str(a) for a in args])
    print("specrecon", *args[:2], "->", code)


run("gen", "--n", 8, "--seed", 1, "--out", work / "data")
run("augment", work / "data", "--out", work / "aug")
run("train", "--config", cfg, "--out", work / "model.rspn")
run("reconstruct", work / "data", "--checkpoint", work / "model.rspn", "--out", work / "rec_nn.csv")
run("reconstruct", work / "data", "--solver", "nnls", "--out", work / "rec_nnls.csv")
run("eval", work / "data", work / "rec_nnls.csv", "--out", work / "metrics")
run("bench", work / "data", "--methods", "identity,nnls", "--repeats", 3, "--out", work / "bench.json")

###############################################################################
# Outputs are plain CSV and JSON.
m = json.loads((work / "metrics" / "metrics.json").read_text())
print("NNLS MAE", m["mae"], "RMSE", m["rmse"])
for r in json.loads((work / "bench.json").read_text())["results"]:
    print(r["method"], round(r["mean_ms"], 4), "ms")

###############################################################################
# Errors are one JSON line on stderr and a non-zero exit code.
run("gen", "--n", 0, "--out", work / "bad")
