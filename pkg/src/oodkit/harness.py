"""Benchmark construction, orchestration, aggregation, and reporting.

A benchmark manifest names OODF feature files (with optional ``{seed}``
placeholders) for ID train/val/test, an adjacent (in-domain, held-out-class)
set, and one or more far (out-of-domain) sets, plus a seed list and method
list. Each (seed, method, OOD set) cell yields one FPR@95 / AUROC row;
aggregates mirror the in-domain / out-of-domain split, with far means
computed both dataset-first and seed-first.
"""

from __future__ import annotations

import copy
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .detectors import make_detector
from .errors import ConfigError, FileMissingError, FitError, ValidationError
from .features import FeatureSet
from .metrics import auroc, fpr_at_tpr, wilcoxon_signed_rank
from .oodf import read_feature_file
from .rng import GENERATOR_NAME, make_rng
from .two_stage import fit_domain_filter, make_two_stage, two_stage_score_set

SPLIT_STREAM = 7
REPORT_VERSION = 1
DETECTOR_METHODS = ("msp", "energy", "mahalanobis", "knn", "react")
UNAVAILABLE_METHODS = {
    "nci": "method unavailable: no published definition to implement",
}


# -- adjacent split ------------------------------------------------------


@dataclass(frozen=True)
class SplitSpec:
    """Deterministic held-out-class split for the adjacent-OOD benchmark."""

    seed: int
    id_classes: tuple
    heldout_classes: tuple
    fraction: float

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "fraction": self.fraction,
            "id_classes": list(self.id_classes),
            "heldout_classes": list(self.heldout_classes),
            "generator": GENERATOR_NAME,
        }


def make_adjacent_split(labels, seed: int, fraction: float = 1.0 / 3.0) -> SplitSpec:
    """Hold out max(1, round-half-up(fraction * C)) classes after a pinned
    shuffle; same (labels, seed) always yields the same split."""
    classes = list(labels)
    c = len(classes)
    if c < 3:
        raise ValidationError(
            f"need at least 3 classes to hold some out and retain 2, got {c}"
        )
    if not (0.0 < fraction < 1.0):
        raise ValidationError(f"fraction must be in (0, 1), got {fraction}")
    n_held = max(1, int(math.floor(fraction * c + 0.5)))
    if c - n_held < 2:
        raise ValidationError(
            f"holding out {n_held} of {c} classes leaves fewer than 2 ID classes"
        )
    perm = make_rng(seed, stream=SPLIT_STREAM).permutation(c)
    held = tuple(classes[i] for i in perm[:n_held])
    kept = tuple(classes[i] for i in perm[n_held:])
    return SplitSpec(seed=seed, id_classes=kept, heldout_classes=held, fraction=fraction)


# -- manifest ------------------------------------------------------------


@dataclass(frozen=True)
class DatasetEntry:
    name: str
    supervised: str
    pretrained: str | None = None


@dataclass
class BenchmarkConfig:
    id_dataset: str
    seeds: list[int]
    methods: list[str]
    id_train: DatasetEntry
    id_test: DatasetEntry
    adjacent: DatasetEntry | None
    far: list[DatasetEntry]
    id_val: DatasetEntry | None = None
    params: dict = field(default_factory=dict)
    base_dir: str = "."
    include_histograms: bool = False

    @classmethod
    def from_dict(cls, d: dict, base_dir: str = ".") -> "BenchmarkConfig":
        try:
            datasets = d["datasets"]
            entries = {}
            for key in ("id_train", "id_test"):
                entries[key] = _parse_entry(datasets[key], key)
            adjacent = (
                _parse_entry(datasets["adjacent"], "adjacent")
                if "adjacent" in datasets
                else None
            )
            id_val = (
                _parse_entry(datasets["id_val"], "id_val")
                if "id_val" in datasets
                else None
            )
            far = [
                _parse_entry(e, f"far[{i}]") for i, e in enumerate(datasets.get("far", []))
            ]
            return cls(
                id_dataset=d.get("id_dataset", "unnamed"),
                seeds=[int(s) for s in d["seeds"]],
                methods=list(d["methods"]),
                id_train=entries["id_train"],
                id_test=entries["id_test"],
                adjacent=adjacent,
                id_val=id_val,
                far=far,
                params=dict(d.get("params", {})),
                base_dir=base_dir,
                include_histograms=bool(d.get("include_histograms", False)),
            )
        except KeyError as e:
            raise ConfigError(f"manifest is missing entry {e}") from e

    @classmethod
    def from_json(cls, path: str) -> "BenchmarkConfig":
        with open(path) as f:
            d = json.load(f)
        return cls.from_dict(d, base_dir=os.path.dirname(os.path.abspath(path)))


def _parse_entry(d: dict, key: str) -> DatasetEntry:
    if "supervised" not in d:
        raise ConfigError(f"manifest entry datasets.{key} has no 'supervised' path")
    return DatasetEntry(
        name=d.get("name", key),
        supervised=d["supervised"],
        pretrained=d.get("pretrained"),
    )


class _SeedData:
    """Lazy, cached loader resolving {seed} placeholders against base_dir."""

    def __init__(self, config: BenchmarkConfig, seed: int):
        self.config = config
        self.seed = seed
        self._cache: dict[str, FeatureSet] = {}

    def load(self, entry: DatasetEntry, space: str, manifest_key: str) -> FeatureSet:
        template = entry.supervised if space == "supervised" else entry.pretrained
        if template is None:
            raise ConfigError(
                f"manifest entry datasets.{manifest_key} has no '{space}' path "
                f"(required by the requested methods)"
            )
        path = template.format(seed=self.seed)
        if not os.path.isabs(path):
            path = os.path.join(self.config.base_dir, path)
        if path not in self._cache:
            if not os.path.exists(path):
                raise FileMissingError(
                    f"feature file for manifest entry datasets.{manifest_key}.{space} "
                    f"not found: {path}"
                )
            self._cache[path] = read_feature_file(path)
        return self._cache[path]


# -- benchmark run -------------------------------------------------------


def _na_rows(config, method, seed, ood_entries, note):
    rows = []
    for kind, entry in ood_entries:
        rows.append(
            {
                "id_dataset": config.id_dataset,
                "ood_dataset": entry.name,
                "ood_kind": kind,
                "method": method,
                "seed": seed,
                "fpr95": None,
                "auroc": None,
                "n_id": None,
                "n_ood": None,
                "note": note,
            }
        )
    return rows


def _build_scorer(config, data: _SeedData, method: str):
    """Returns (score_set_fn, stage1_flag_rate_or_None)."""
    params = config.params
    knn_k = int(params.get("knn_k", 50))
    knn_normalize = bool(params.get("knn_normalize", True))
    filter_k = int(params.get("filter_k", 50))
    filter_p = float(params.get("filter_p", 0.99))
    filter_normalize = bool(params.get("filter_normalize", True))

    base_params = {
        "k": knn_k,
        "normalize": knn_normalize,
        "temperature": float(params.get("energy_temperature", 1.0)),
        "clip_percentile": float(params.get("react_clip_percentile", 90.0)),
        "shrinkage": params.get("mahalanobis_shrinkage"),
    }

    if method == "pt-knn":
        train_pre = data.load(config.id_train, "pretrained", "id_train")
        det = make_detector(
            "knn", train_pre, k=filter_k, normalize=filter_normalize
        )
        return (lambda sup, pre: det.score_set(pre)), None, ("pretrained",)

    if method.startswith("df+"):
        base = method[3:]
        if base not in DETECTOR_METHODS:
            raise ConfigError(f"unknown second-stage detector {base!r} in {method!r}")
        train_pre = data.load(config.id_train, "pretrained", "id_train")
        train_sup = data.load(config.id_train, "supervised", "id_train")
        dfilter = fit_domain_filter(
            train_pre, p=filter_p, k=filter_k, normalize=filter_normalize
        )
        second = make_detector(base, train_sup, **base_params)
        calib_entry, calib_key = (
            (config.id_val, "id_val") if config.id_val else (config.id_train, "id_train")
        )
        calib = data.load(calib_entry, "supervised", calib_key)
        ts = make_two_stage(dfilter, second, calib)
        return (
            lambda sup, pre: two_stage_score_set(ts, pre, sup),
            dfilter,
            ("supervised", "pretrained"),
        )

    if method in DETECTOR_METHODS:
        train_sup = data.load(config.id_train, "supervised", "id_train")
        det = make_detector(method, train_sup, **base_params)
        return (lambda sup, pre: det.score_set(sup)), None, ("supervised",)

    raise ConfigError(f"unknown method {method!r}")


def _run_cell(config, data: _SeedData, method: str, seed: int, ood_entries):
    if method in UNAVAILABLE_METHODS:
        return _na_rows(config, method, seed, ood_entries, UNAVAILABLE_METHODS[method]), []

    try:
        score_fn, dfilter, spaces = _build_scorer(config, data, method)
    except (FitError, ValidationError) as e:
        if isinstance(e, ConfigError):
            raise
        return _na_rows(config, method, seed, ood_entries, f"not applicable: {e}"), []

    def load_pair(entry, key):
        sup = data.load(entry, "supervised", key) if "supervised" in spaces else None
        pre = data.load(entry, "pretrained", key) if "pretrained" in spaces else None
        return sup, pre

    id_sup, id_pre = load_pair(config.id_test, "id_test")
    try:
        id_scores = np.asarray(score_fn(id_sup, id_pre), dtype=np.float64)
    except (FitError, ValidationError) as e:
        return _na_rows(config, method, seed, ood_entries, f"not applicable: {e}"), []

    flag_rate = None
    if dfilter is not None:
        flag_rate = dfilter.flag_rate(id_pre)

    rows, histograms = [], []
    for kind, entry in ood_entries:
        key = "adjacent" if kind == "adjacent" else entry.name
        ood_sup, ood_pre = load_pair(entry, key)
        try:
            ood_scores = np.asarray(score_fn(ood_sup, ood_pre), dtype=np.float64)
        except (FitError, ValidationError) as e:
            rows.extend(_na_rows(config, method, seed, [(kind, entry)], f"not applicable: {e}"))
            continue
        row = {
            "id_dataset": config.id_dataset,
            "ood_dataset": entry.name,
            "ood_kind": kind,
            "method": method,
            "seed": seed,
            "fpr95": fpr_at_tpr(id_scores, ood_scores),
            "auroc": auroc(id_scores, ood_scores),
            "n_id": int(id_scores.size),
            "n_ood": int(ood_scores.size),
        }
        if flag_rate is not None:
            row["stage1_id_flag_rate"] = flag_rate
        rows.append(row)
        if config.include_histograms:
            histograms.append(
                _histogram_entry(method, seed, entry.name, id_scores, ood_scores)
            )
    return rows, histograms


def _histogram_entry(method, seed, ood_name, id_scores, ood_scores, bins: int = 32):
    pooled = np.concatenate([id_scores, ood_scores])
    lo, hi = float(pooled.min()), float(pooled.max())
    if hi <= lo:
        hi = lo + 1.0
    edges = np.linspace(lo, hi, bins + 1)
    return {
        "method": method,
        "seed": seed,
        "ood_dataset": ood_name,
        "bin_edges": [float(e) for e in edges],
        "id_counts": [int(c) for c in np.histogram(id_scores, edges)[0]],
        "ood_counts": [int(c) for c in np.histogram(ood_scores, edges)[0]],
    }


@dataclass
class EvalReport:
    rows: list[dict]
    aggregates: dict
    significance: dict
    meta: dict
    histograms: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        d = {
            "report_version": REPORT_VERSION,
            "meta": self.meta,
            "rows": self.rows,
            "aggregates": self.aggregates,
            "significance": self.significance,
        }
        if self.histograms:
            d["histograms"] = self.histograms
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def save(self, path: str) -> None:
        with open(path, "w") as f:
            f.write(self.to_json())

    @classmethod
    def from_dict(cls, d: dict) -> "EvalReport":
        return cls(
            rows=d["rows"],
            aggregates=d["aggregates"],
            significance=d["significance"],
            meta=d["meta"],
            histograms=d.get("histograms", []),
        )


def run_benchmark(config: BenchmarkConfig) -> EvalReport:
    """Fit, score, and evaluate every (seed, method, OOD set) cell."""
    if not config.far and config.adjacent is None:
        raise ConfigError("manifest defines no OOD sets")
    ood_entries = []
    if config.adjacent is not None:
        ood_entries.append(("adjacent", config.adjacent))
    ood_entries.extend(("far", e) for e in config.far)

    rows: list[dict] = []
    histograms: list[dict] = []
    for seed in config.seeds:
        data = _SeedData(config, seed)
        for method in config.methods:
            cell_rows, cell_hists = _run_cell(config, data, method, seed, ood_entries)
            rows.extend(cell_rows)
            histograms.extend(cell_hists)

    rows.sort(key=lambda r: (r["method"], r["seed"], r["ood_kind"], r["ood_dataset"]))
    aggregates = _aggregate(rows)
    significance = _significance(config, rows)
    meta = {
        "id_dataset": config.id_dataset,
        "seeds": config.seeds,
        "methods": config.methods,
        "params": config.params,
        "generator": GENERATOR_NAME,
    }
    return EvalReport(
        rows=rows,
        aggregates=aggregates,
        significance=significance,
        meta=meta,
        histograms=histograms,
    )


def _mean(vals):
    vals = [v for v in vals if v is not None]
    return float(np.mean(vals)) if vals else None


def _aggregate(rows: list[dict]) -> dict:
    methods = sorted({r["method"] for r in rows})
    out = {}
    for m in methods:
        mrows = [r for r in rows if r["method"] == m]
        adj = [r for r in mrows if r["ood_kind"] == "adjacent"]
        far = [r for r in mrows if r["ood_kind"] == "far"]
        agg = {
            "adjacent": {
                "fpr95": _mean([r["fpr95"] for r in adj]),
                "auroc": _mean([r["auroc"] for r in adj]),
            }
        }
        seeds = sorted({r["seed"] for r in far})
        datasets = sorted({r["ood_dataset"] for r in far})
        per_seed = [
            _mean([r["fpr95"] for r in far if r["seed"] == s]) for s in seeds
        ]
        per_seed_auroc = [
            _mean([r["auroc"] for r in far if r["seed"] == s]) for s in seeds
        ]
        per_ds = [
            _mean([r["fpr95"] for r in far if r["ood_dataset"] == d]) for d in datasets
        ]
        per_ds_auroc = [
            _mean([r["auroc"] for r in far if r["ood_dataset"] == d]) for d in datasets
        ]
        agg["far_dataset_first"] = {
            "fpr95": _mean(per_seed),
            "auroc": _mean(per_seed_auroc),
        }
        agg["far_seed_first"] = {
            "fpr95": _mean(per_ds),
            "auroc": _mean(per_ds_auroc),
        }
        out[m] = agg
    return out


def _significance(config, rows: list[dict]) -> dict:
    """One-sided paired tests: does the domain filter reduce far-OOD FPR@95."""
    out = {}
    methods = set(config.methods)
    for m in sorted(methods):
        if not m.startswith("df+") or m[3:] not in methods:
            continue
        base = m[3:]
        diffs = []
        for seed in config.seeds:
            b = _mean(
                [r["fpr95"] for r in rows
                 if r["method"] == base and r["seed"] == seed and r["ood_kind"] == "far"]
            )
            f = _mean(
                [r["fpr95"] for r in rows
                 if r["method"] == m and r["seed"] == seed and r["ood_kind"] == "far"]
            )
            if b is not None and f is not None:
                diffs.append(b - f)
        key = f"{m}_vs_{base}"
        if not diffs:
            out[key] = {"p_value": None, "n": 0, "note": "no comparable rows"}
            continue
        try:
            p = wilcoxon_signed_rank(diffs, alternative="greater")
            out[key] = {"p_value": p, "n": len(diffs)}
        except ValidationError as e:
            out[key] = {"p_value": None, "n": len(diffs), "note": str(e)}
    return out


def percentile_sweep(config: BenchmarkConfig, p_grid=(0.98, 0.99, 0.999)) -> dict:
    """Re-run the benchmark at each filter percentile.

    The stage-1 ID flag rate must be non-increasing in p; the diagnostic
    records the rates and whether monotonicity held.
    """
    if not any(m.startswith("df+") or m == "pt-knn" for m in config.methods):
        raise ValidationError("percentile sweep needs a two-stage method in the manifest")
    p_grid = sorted(p_grid)
    sections = {}
    flag_rates: dict[str, dict] = {}
    for p in p_grid:
        cfg = copy.deepcopy(config)
        cfg.params["filter_p"] = p
        report = run_benchmark(cfg)
        sections[_p_key(p)] = report.to_dict()
        for r in report.rows:
            if "stage1_id_flag_rate" in r:
                key = f"{r['method']}/seed{r['seed']}"
                flag_rates.setdefault(key, {})[_p_key(p)] = r["stage1_id_flag_rate"]
    monotone = True
    for key, rates in flag_rates.items():
        seq = [rates[_p_key(p)] for p in p_grid if _p_key(p) in rates]
        if any(b > a + 1e-12 for a, b in zip(seq, seq[1:])):
            monotone = False
    return {
        "p_grid": [float(p) for p in p_grid],
        "sections": sections,
        "diagnostics": {
            "stage1_id_flag_rates": flag_rates,
            "flag_rate_non_increasing_in_p": monotone,
        },
    }


def _p_key(p: float) -> str:
    return format(float(p), "g")


def render_report_text(report: dict) -> str:
    """Human-readable summary mirroring the in-domain / out-of-domain layout."""
    meta = report["meta"]
    lines = [
        f"benchmark: {meta['id_dataset']}   seeds: {len(meta['seeds'])}   "
        f"(adjacent | far, FPR@95% / AUROC%)",
        "",
        f"{'method':<18}{'adjacent FPR/AUROC':>22}{'far FPR/AUROC':>22}",
    ]

    def fmt(agg):
        if agg["fpr95"] is None:
            return "NA"
        return f"{100 * agg['fpr95']:.1f} / {100 * agg['auroc']:.1f}"

    for m in sorted(report["aggregates"]):
        agg = report["aggregates"][m]
        lines.append(
            f"{m:<18}{fmt(agg['adjacent']):>22}{fmt(agg['far_dataset_first']):>22}"
        )
    if report.get("significance"):
        lines.append("")
        lines.append("paired one-sided signed-rank (base minus filtered far FPR@95 > 0):")
        for k in sorted(report["significance"]):
            s = report["significance"][k]
            p = "NA" if s["p_value"] is None else f"{s['p_value']:.5f}"
            lines.append(f"  {k}: p = {p} (n = {s['n']})")
    notes = sorted({r["note"] for r in report["rows"] if r.get("note")})
    if notes:
        lines.append("")
        for n in notes:
            lines.append(f"note: {n}")
    return "\n".join(lines) + "\n"
