"""Run the benchmark harness end to end in a scratch directory.

Generates feature files with the synthetic collapse generator, writes a
manifest, evaluates a mix of plain and two-stage methods over two seeds,
and renders the in-domain / out-of-domain summary with significance tests.
"""

import json
import os
import tempfile

from oodkit.cli import main
from oodkit.harness import BenchmarkConfig, render_report_text, run_benchmark

workdir = tempfile.mkdtemp(prefix="oodkit-demo-")
features = os.path.join(workdir, "features")

# The synth subcommand trains the linear model and writes both feature
# spaces (supervised = logits + penultimate + head, pretrained = raw) plus a
# ready-to-run manifest.
for seed in (0, 1):
    rc = main(["synth", "--seed", str(seed), "--quick", "--outdir", features])
    assert rc == 0

manifest_path = os.path.join(features, "manifest.json")
manifest = json.load(open(manifest_path))
manifest["seeds"] = [0, 1]
for entry in [manifest["datasets"]["id_train"], manifest["datasets"]["id_test"],
              manifest["datasets"]["adjacent"]] + manifest["datasets"]["far"]:
    for space in ("supervised", "pretrained"):
        entry[space] = entry[space].replace("_s0", "_s{seed}").replace("_s1", "_s{seed}")
manifest["methods"] = ["msp", "knn", "mahalanobis", "pt-knn", "df+knn", "df+mahalanobis"]
json.dump(manifest, open(manifest_path, "w"), indent=2)

report = run_benchmark(BenchmarkConfig.from_json(manifest_path))
print(render_report_text(report.to_dict()))
print(f"rows: {len(report.rows)}  (seeds x methods x OOD sets)")
print(f"report and feature files under {workdir}")
