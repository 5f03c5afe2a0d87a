"""Command-line shell tying the toolkit together.

Subcommands: split, calibrate, eval, sweep, synth, verify-theory, report,
inspect. Exit codes: 0 success, 1 validation/usage error, 2 I/O or file
format error. Diagnostics go to stderr; data goes to files or stdout.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import __version__
from .collapse import SynthConfig, TrainConfig, collapse_experiment, generate_synthetic, make_model_feature_sets, train_linear
from .errors import FeatureFileError, OODKitError, ValidationError
from .harness import (
    BenchmarkConfig,
    EvalReport,
    make_adjacent_split,
    percentile_sweep,
    render_report_text,
    run_benchmark,
)
from .info.sweep import run_theory_verification
from .oodf import inspect_header, read_feature_file, write_feature_file
from .two_stage import fit_domain_filter

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_IO = 2


class _ArgumentParser(argparse.ArgumentParser):
    """argparse that reports usage problems via exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise ValidationError(message)


def build_parser() -> _ArgumentParser:
    p = _ArgumentParser(prog="oodkit", description=__doc__)
    p.add_argument("--version", action="version", version=f"oodkit {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("split", help="deterministic held-out-class split")
    sp.add_argument("--n-classes", type=int, required=True)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--fraction", type=float, default=1.0 / 3.0)
    sp.add_argument("--out", help="write the split record here instead of stdout")

    cp = sub.add_parser("calibrate", help="calibrate a domain-filter threshold")
    cp.add_argument("--train", required=True, help="OODF file with filter-space features")
    cp.add_argument("--k", type=int, default=50)
    cp.add_argument("--p", type=float, default=0.99)
    cp.add_argument("--no-normalize", action="store_true")
    cp.add_argument("--out", help="write the calibration record here instead of stdout")

    ep = sub.add_parser("eval", help="run the benchmark described by a manifest")
    ep.add_argument("--manifest", required=True)
    ep.add_argument("--out", help="report JSON path (default stdout)")
    ep.add_argument("--histograms", action="store_true", help="embed score histograms")

    wp = sub.add_parser("sweep", help="re-run the benchmark over filter percentiles")
    wp.add_argument("--manifest", required=True)
    wp.add_argument("--p-grid", type=float, nargs="+", default=[0.98, 0.99, 0.999])
    wp.add_argument("--out", help="sweep JSON path (default stdout)")

    yp = sub.add_parser("synth", help="synthetic collapse experiment + feature files")
    yp.add_argument("--config", help="JSON file of generator settings")
    yp.add_argument("--seed", type=int, default=0)
    yp.add_argument("--outdir", help="write OODF files and a manifest here")
    yp.add_argument("--report", help="write the experiment report JSON here")
    yp.add_argument("--quick", action="store_true",
                    help="smaller generator preset for pipelines and tests")

    vp = sub.add_parser("verify-theory", help="theorem/lemma/Fano verification sweep")
    vp.add_argument("--trials", type=int, default=200)
    vp.add_argument("--lemma-instances", type=int, default=500)
    vp.add_argument("--seed", type=int, default=0)
    vp.add_argument("--support-min", type=int, default=4)
    vp.add_argument("--support-max", type=int, default=9)
    vp.add_argument("--beta-grid", type=float, nargs="+", default=[0.5, 1.0, 2.0, 10.0])
    vp.add_argument("--z-max", type=int, default=12,
                    help="upper bound on the z alphabet size")
    vp.add_argument("--z-budget", type=int, default=1_200_000,
                    help="per-joint cap on the number of enumerated maps")
    vp.add_argument("--out", help="machine-readable summary JSON path")

    rp = sub.add_parser("report", help="render an eval report as text")
    rp.add_argument("report", help="report JSON produced by `eval`")
    rp.add_argument("--out", help="write text here instead of stdout")

    ip = sub.add_parser("inspect", help="print OODF header fields")
    ip.add_argument("file")

    return p


def _emit(text: str, out_path: str | None) -> None:
    if out_path:
        with open(out_path, "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def _json_dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _cmd_split(args) -> int:
    spec = make_adjacent_split(range(args.n_classes), args.seed, args.fraction)
    _emit(_json_dumps(spec.to_dict()), args.out)
    return EXIT_OK


def _cmd_calibrate(args) -> int:
    fs = read_feature_file(args.train)
    dfilter = fit_domain_filter(
        fs, p=args.p, k=args.k, normalize=not args.no_normalize
    )
    from .oodf import sidecar_path

    with open(sidecar_path(args.train)) as f:
        digest = json.load(f)["digest"]
    record = {
        "t_d": dfilter.t_d,
        "p": dfilter.p,
        "k": dfilter.k,
        "normalize": not args.no_normalize,
        "train_file": args.train,
        "train_digest": digest,
        "n_train": fs.n_rows,
    }
    _emit(_json_dumps(record), args.out)
    return EXIT_OK


def _cmd_eval(args) -> int:
    config = BenchmarkConfig.from_json(args.manifest)
    config.include_histograms = args.histograms
    report = run_benchmark(config)
    _emit(report.to_json(), args.out)
    return EXIT_OK


def _cmd_sweep(args) -> int:
    config = BenchmarkConfig.from_json(args.manifest)
    result = percentile_sweep(config, p_grid=tuple(args.p_grid))
    _emit(_json_dumps(result), args.out)
    return EXIT_OK


_QUICK_SYNTH = dict(n_per_cell=150)


def _cmd_synth(args) -> int:
    settings = {}
    if args.config:
        with open(args.config) as f:
            settings.update(json.load(f))
    if args.quick:
        for k, v in _QUICK_SYNTH.items():
            settings.setdefault(k, v)
    settings["seed"] = args.seed
    train_keys = ("learning_rate", "weight_decay", "epochs", "batch_size",
                  "convergence_tol")
    train_settings = {k: settings.pop(k) for k in train_keys if k in settings}
    cfg = SynthConfig(**settings)
    tcfg = TrainConfig(seed=args.seed, **train_settings)

    report = collapse_experiment(cfg, tcfg)
    sys.stderr.write(report.to_text())
    if args.report:
        _emit(_json_dumps(report.to_dict()), args.report)

    if args.outdir:
        import os

        os.makedirs(args.outdir, exist_ok=True)
        bundle = generate_synthetic(cfg)
        model = train_linear(bundle.train, tcfg)
        sets = make_model_feature_sets(bundle, model)
        paths = {}
        for name, fs in sets.items():
            path = os.path.join(args.outdir, f"{name}_s{args.seed}.oodf")
            write_feature_file(fs, path)
            paths[name] = os.path.basename(path)
        manifest = {
            "version": 1,
            "id_dataset": "synth",
            "seeds": [args.seed],
            "methods": ["msp", "energy", "mahalanobis", "knn", "react",
                        "pt-knn", "df+knn", "df+mahalanobis", "df+react"],
            "params": {"knn_k": 10, "filter_k": 50, "filter_p": 0.99,
                       "knn_normalize": False, "filter_normalize": False},
            "datasets": {
                "id_train": {"supervised": paths["train_sup"],
                             "pretrained": paths["train_pre"]},
                "id_test": {"supervised": paths["id_test_sup"],
                            "pretrained": paths["id_test_pre"]},
                "adjacent": {"name": "synth-heldout",
                             "supervised": paths["adjacent_sup"],
                             "pretrained": paths["adjacent_pre"]},
                "far": [{"name": "synth-far",
                         "supervised": paths["far_sup"],
                         "pretrained": paths["far_pre"]}],
            },
        }
        mpath = os.path.join(args.outdir, "manifest.json")
        with open(mpath, "w") as f:
            f.write(_json_dumps(manifest))
        sys.stderr.write(f"wrote feature files and manifest to {args.outdir}\n")
    return EXIT_OK


def _cmd_verify_theory(args) -> int:
    report = run_theory_verification(
        n_theorem_trials=args.trials,
        n_lemma_instances=args.lemma_instances,
        seed=args.seed,
        support_max=args.support_max,
        support_min=args.support_min,
        betas=tuple(args.beta_grid),
        map_budget=args.z_budget,
        z_max=args.z_max,
    )
    sys.stdout.write(report.to_text())
    if args.out:
        with open(args.out, "w") as f:
            f.write(_json_dumps(report.to_dict()))
    return EXIT_OK if report.ok else EXIT_VALIDATION


def _cmd_report(args) -> int:
    with open(args.report) as f:
        report = json.load(f)
    _emit(render_report_text(report), args.out)
    return EXIT_OK


def _cmd_inspect(args) -> int:
    header = inspect_header(args.file)
    sys.stdout.write(_json_dumps(header))
    return EXIT_OK


_COMMANDS = {
    "split": _cmd_split,
    "calibrate": _cmd_calibrate,
    "eval": _cmd_eval,
    "sweep": _cmd_sweep,
    "synth": _cmd_synth,
    "verify-theory": _cmd_verify_theory,
    "report": _cmd_report,
    "inspect": _cmd_inspect,
}


def cli_dispatch(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except ValidationError as e:
        sys.stderr.write(f"error: {e}\n")
        return EXIT_VALIDATION
    except FeatureFileError as e:
        sys.stderr.write(f"file error: {e}\n")
        return EXIT_IO
    except FileNotFoundError as e:
        sys.stderr.write(f"file error: {e}\n")
        return EXIT_IO
    except OODKitError as e:
        sys.stderr.write(f"error: {e}\n")
        return EXIT_VALIDATION


def main(argv=None) -> int:
    return cli_dispatch(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    sys.exit(main())
