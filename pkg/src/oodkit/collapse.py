"""Synthetic end-to-end demonstration of domain feature collapse.

Generates block-structured data where the first feature block determines the
domain and the second determines the class (independently, matching the
collapse theorem's hypotheses), trains a linear softmax classifier from
scratch on a single domain, and measures what the learned representation
retains about the domain via a Fano-certified lower bound from probe error.
The detection half then shows that a distance filter in the raw feature
space fixes far-OOD detection while being useless on held-out classes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .detectors import fit_knn
from .errors import TrainingError, ValidationError
from .features import FeatureSet
from .harness import SplitSpec, make_adjacent_split
from .info.fano import mi_lower_bound_from_error
from .info.joint import xlogx_sum
from .metrics import auroc, fpr_at_tpr
from .rng import GENERATOR_NAME, make_rng
from .two_stage import fit_domain_filter, make_two_stage, two_stage_score_set

_SYNTH_STREAM = 11
_TRAIN_STREAM = 13
_PROBE_STREAM = 17


@dataclass(frozen=True)
class SynthConfig:
    """Geometry of the synthetic (domain-block, class-block) data."""

    d_dim: int = 8
    y_dim: int = 16
    n_classes: int = 6
    n_domains: int = 3
    class_sep: float = 1.5
    domain_sep: float = 28.0
    noise_sigma: float = 1.0
    # Domain features vary on a coarser scale than class features; the
    # larger spread is also what keeps the spurious domain-block weights of
    # a finite-sample ridge fit small.
    domain_noise_sigma: float = 5.0
    n_per_cell: int = 600
    seed: int = 0
    heldout_fraction: float = 1.0 / 3.0

    def __post_init__(self):
        if self.n_classes < 2:
            raise ValidationError("need at least 2 classes")
        if self.n_domains < 2:
            raise ValidationError("need at least 2 domains")
        if self.n_per_cell < 1:
            raise ValidationError("n_per_cell must be positive")
        if self.d_dim < 1 or self.y_dim < 1:
            raise ValidationError("feature blocks must be non-empty")
        if self.noise_sigma <= 0 or self.domain_noise_sigma <= 0:
            raise ValidationError("noise scales must be positive")


@dataclass(frozen=True)
class SynthBundle:
    """Generated splits plus per-row domain labels for the far set."""

    train: FeatureSet
    test_id: FeatureSet
    test_adjacent: FeatureSet
    test_far: FeatureSet
    far_domains: np.ndarray
    split: SplitSpec
    config: SynthConfig


def _unit_rows(rng, n, dim) -> np.ndarray:
    v = rng.standard_normal((n, dim))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def _orthonormal_rows(rng, n, dim) -> np.ndarray:
    if n > dim:
        raise ValidationError(f"cannot place {n} orthogonal means in {dim} dims")
    q, r = np.linalg.qr(rng.standard_normal((dim, n)))
    return (q * np.sign(np.diag(r))).T[:n]


def generate_synthetic(cfg: SynthConfig) -> SynthBundle:
    """Single-domain train/ID-test, held-out-class adjacent set, and a far
    set drawn from the remaining domains (all classes). Deterministic per
    seed."""
    rng = make_rng(cfg.seed, stream=_SYNTH_STREAM)
    class_means = _unit_rows(rng, cfg.n_classes, cfg.y_dim) * cfg.class_sep
    # Orthogonal domain means: pairwise separation is sep * sqrt(2) for
    # every seed, so filter contrast does not hinge on a lucky draw.
    domain_means = _orthonormal_rows(rng, cfg.n_domains, cfg.d_dim) * cfg.domain_sep
    split = make_adjacent_split(range(cfg.n_classes), cfg.seed, cfg.heldout_fraction)
    id_classes = list(split.id_classes)

    def draw(domain: int, classes, relabel: bool):
        xs, ys = [], []
        for new_label, c in enumerate(classes):
            x_d = domain_means[domain] + cfg.domain_noise_sigma * rng.standard_normal(
                (cfg.n_per_cell, cfg.d_dim)
            )
            x_y = class_means[c] + cfg.noise_sigma * rng.standard_normal(
                (cfg.n_per_cell, cfg.y_dim)
            )
            xs.append(np.hstack([x_d, x_y]))
            ys.append(np.full(cfg.n_per_cell, new_label if relabel else c))
        return np.vstack(xs), np.concatenate(ys)

    x_train, y_train = draw(0, id_classes, relabel=True)
    x_id, y_id = draw(0, id_classes, relabel=True)
    x_adj, _ = draw(0, list(split.heldout_classes), relabel=False)

    far_x, far_dom = [], []
    for dom in range(1, cfg.n_domains):
        x, _ = draw(dom, range(cfg.n_classes), relabel=False)
        far_x.append(x)
        far_dom.append(np.full(x.shape[0], dom))
    x_far = np.vstack(far_x)

    def fs(x, labels, split_tag):
        return FeatureSet(
            features=x,
            labels=labels,
            meta={"source": "synth", "split": split_tag, "seed": cfg.seed},
        )

    return SynthBundle(
        train=fs(x_train, y_train, "train"),
        test_id=fs(x_id, y_id, "test_id"),
        test_adjacent=fs(x_adj, None, "test_adjacent"),
        test_far=fs(x_far, None, "test_far"),
        far_domains=np.concatenate(far_dom),
        split=split,
        config=cfg,
    )


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float | None = None  # None: sized from the data curvature
    weight_decay: float = 0.02
    epochs: int = 12000
    batch_size: int = 0  # 0 = full batch
    seed: int = 0
    convergence_tol: float = 1e-6


@dataclass(frozen=True)
class LinearModel:
    """Zero-initialized softmax classifier; weights split [W_d | W_y]."""

    weights: np.ndarray  # C x (d_dim + y_dim)
    bias: np.ndarray
    config: TrainConfig
    epochs_run: int
    final_loss: float

    def logits(self, x) -> np.ndarray:
        return np.asarray(x, dtype=np.float64) @ self.weights.T + self.bias

    def predict(self, x) -> np.ndarray:
        return self.logits(x).argmax(axis=1)

    def accuracy(self, x, labels) -> float:
        return float(np.mean(self.predict(x) == np.asarray(labels)))

    def weight_block_ratio(self, d_dim: int) -> float:
        """||W_d||_F / ||W_y||_F: how much weight the domain block keeps."""
        w_d = np.linalg.norm(self.weights[:, :d_dim])
        w_y = np.linalg.norm(self.weights[:, d_dim:])
        return float(w_d / w_y) if w_y > 0 else float("inf")


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def train_linear(train: FeatureSet, cfg: TrainConfig = TrainConfig()) -> LinearModel:
    """Gradient descent on softmax cross-entropy with L2 weight decay.

    Weights start at zero (so coordinate permutations of uninformative
    blocks act equivariantly); the bias is not decayed. Stops when the loss
    decrease over an epoch falls below convergence_tol or at the epoch cap.
    """
    if train.labels is None:
        raise ValidationError("training set needs labels")
    x = np.asarray(train.features, dtype=np.float64)
    labels = np.asarray(train.labels)
    classes = int(labels.max()) + 1
    if classes < 2:
        raise ValidationError("need at least 2 classes to train")
    n, d = x.shape
    onehot = np.zeros((n, classes))
    onehot[np.arange(n), labels] = 1.0

    w = np.zeros((classes, d))
    b = np.zeros(classes)
    rng = make_rng(cfg.seed, stream=_TRAIN_STREAM)
    lam = cfg.weight_decay
    lr = cfg.learning_rate
    if lr is None:
        # Softmax-CE curvature is bounded by 0.25 * max row norm^2; stay
        # inside the stable-step region even with a large constant offset.
        max_sq = float((x * x).sum(axis=1).max())
        lr = 1.5 / (0.25 * max_sq + 2.0 * lam + 1.0)
    prev_loss = np.inf
    epochs_run = 0
    loss = np.inf

    for epoch in range(cfg.epochs):
        if cfg.batch_size and cfg.batch_size < n:
            order = rng.permutation(n)
            batches = [
                order[i : i + cfg.batch_size] for i in range(0, n, cfg.batch_size)
            ]
        else:
            batches = [slice(None)]
        for idx in batches:
            xb, yb = x[idx], onehot[idx]
            p = _softmax(xb @ w.T + b)
            grad_w = (p - yb).T @ xb / xb.shape[0] + 2.0 * lam * w
            grad_b = (p - yb).mean(axis=0)
            w -= lr * grad_w
            b -= lr * grad_b

        p = _softmax(x @ w.T + b)
        ce = -np.mean(np.log(np.maximum(p[np.arange(n), labels], 1e-300)))
        loss = ce + lam * float((w * w).sum())
        epochs_run = epoch + 1
        if not np.isfinite(loss) or loss > 1e9:
            raise TrainingError(
                f"loss diverged ({loss!r}) at epoch {epochs_run}; "
                f"reduce the learning rate (currently {lr:g})"
            )
        # Stop only on a small positive decrease; an increase means the step
        # is still oscillating, not that training converged.
        if 0.0 <= prev_loss - loss < cfg.convergence_tol:
            break
        prev_loss = loss

    return LinearModel(
        weights=w, bias=b, config=cfg, epochs_run=epochs_run, final_loss=float(loss)
    )


@dataclass(frozen=True)
class ProbeResult:
    mi_bound_nats: float
    error_rate: float
    h_domain_nats: float
    n_heldout: int


def probe_domain_mi_bound(
    representation,
    domain_labels,
    probe_seed: int = 0,
    holdout_fraction: float = 0.3,
    train_cfg: TrainConfig | None = None,
) -> ProbeResult:
    """Fano-certified lower bound on what a representation knows about the
    domain: fit a linear probe on a 70/30 split and convert its held-out
    error into a bound on the mutual information."""
    rep = np.asarray(representation, dtype=np.float64)
    if rep.ndim != 2 or not np.all(np.isfinite(rep)):
        raise ValidationError("representation must be a finite N x K matrix")
    dom = np.asarray(domain_labels)
    uniq, dom_codes = np.unique(dom, return_inverse=True)
    if len(uniq) < 2:
        raise ValidationError("probe needs at least 2 domains present")
    if rep.shape[0] != dom_codes.size:
        raise ValidationError("representation and domain labels differ in length")

    counts = np.bincount(dom_codes)
    h_d = xlogx_sum(counts / counts.sum())

    rng = make_rng(probe_seed, stream=_PROBE_STREAM)
    order = rng.permutation(rep.shape[0])
    n_hold = max(1, int(round(holdout_fraction * rep.shape[0])))
    hold, fit = order[:n_hold], order[n_hold:]
    if len(fit) == 0:
        raise ValidationError("holdout fraction leaves no training rows")

    cfg = train_cfg or TrainConfig(seed=probe_seed)
    probe_set = FeatureSet(features=rep[fit], labels=dom_codes[fit])
    model = train_linear(probe_set, cfg)
    err = 1.0 - model.accuracy(rep[hold], dom_codes[hold])
    err = min(err, 1.0 - 1.0 / len(uniq))
    bound = mi_lower_bound_from_error(err, len(uniq), h_d)
    return ProbeResult(
        mi_bound_nats=bound, error_rate=float(err), h_domain_nats=h_d,
        n_heldout=int(n_hold),
    )


def plugin_binned_mi(x, labels, bins: int = 8) -> float:
    """Plug-in MI estimate between a (possibly multi-column) representation
    and discrete labels, using per-column equal-width bins. Biased upward on
    sparse cells; used only as an estimator-side sanity reference."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if x.shape[0] == 1 and x.ndim == 2 and np.asarray(labels).size != 1:
        x = x.T
    labels = np.asarray(labels)
    _, lab_codes = np.unique(labels, return_inverse=True)
    binned = np.empty_like(x, dtype=np.int64)
    for j in range(x.shape[1]):
        col = x[:, j]
        lo, hi = col.min(), col.max()
        edges = np.linspace(lo, hi, bins + 1)
        edges[-1] = np.nextafter(edges[-1], np.inf)
        binned[:, j] = np.clip(np.searchsorted(edges, col, side="right") - 1, 0, bins - 1)
    _, cell_codes = np.unique(binned, axis=0, return_inverse=True)
    n = x.shape[0]
    h_cell = xlogx_sum(np.bincount(cell_codes) / n)
    h_lab = xlogx_sum(np.bincount(lab_codes) / n)
    pair = cell_codes * (lab_codes.max() + 1) + lab_codes
    h_joint = xlogx_sum(np.bincount(pair) / n)
    return max(0.0, h_cell + h_lab - h_joint)


def _score_histograms(score_sets: dict, bins: int = 32) -> dict:
    """Plot data: shared-bin count histograms of the per-set scores."""
    pooled = np.concatenate(list(score_sets.values()))
    lo, hi = float(pooled.min()), float(pooled.max())
    if hi <= lo:
        hi = lo + 1.0
    edges = np.linspace(lo, hi, bins + 1)
    out = {"bin_edges": [float(e) for e in edges]}
    for name, scores in score_sets.items():
        out[f"{name}_counts"] = [int(c) for c in np.histogram(scores, edges)[0]]
    return out


@dataclass
class CollapseReport:
    config: SynthConfig
    mi_bounds: dict
    detection: dict
    training: dict
    histograms: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "config": {
                k: getattr(self.config, k)
                for k in (
                    "d_dim", "y_dim", "n_classes", "n_domains", "class_sep",
                    "domain_sep", "noise_sigma", "domain_noise_sigma",
                    "n_per_cell", "seed",
                )
            },
            "generator": GENERATOR_NAME,
            "mi_bounds": self.mi_bounds,
            "detection": self.detection,
            "training": self.training,
            "histograms": self.histograms,
            "notes": self.notes,
        }

    def to_text(self) -> str:
        mb, det, tr = self.mi_bounds, self.detection, self.training
        lines = [
            f"collapse experiment (seed {self.config.seed})",
            f"  classifier: {tr['epochs_run']} epochs, train acc "
            f"{tr['train_accuracy']:.3f}, ||W_d||/||W_y|| = {tr['weight_block_ratio']:.4f}",
            f"  H(domain) = {mb['h_domain_nats']:.4f} nats",
            f"  probe bound, raw features      : {mb['raw']['mi_bound_nats']:.4f} nats "
            f"(err {mb['raw']['error_rate']:.3f})",
            f"  probe bound, supervised logits : {mb['logits']['mi_bound_nats']:.4f} nats "
            f"(err {mb['logits']['error_rate']:.3f})",
            "  far-OOD FPR@95:  second-stage only "
            f"{det['second_only']['far_fpr95']:.3f}   two-stage "
            f"{det['two_stage']['far_fpr95']:.3f}",
            "  adjacent-OOD:    filter-only FPR@95 "
            f"{det['filter_only']['adjacent_fpr95']:.3f}, AUROC "
            f"{det['filter_only']['adjacent_auroc']:.3f}",
        ]
        for n in self.notes:
            lines.append(f"  note: {n}")
        return "\n".join(lines) + "\n"


def collapse_experiment(
    cfg: SynthConfig,
    train_cfg: TrainConfig | None = None,
    filter_k: int = 50,
    filter_p: float = 0.99,
    second_stage_k: int = 10,
) -> CollapseReport:
    """Full single-seed run: generate, train, probe both representations,
    and compare second-stage-only vs two-stage detection with the raw
    feature block standing in for a pretrained filter space."""
    bundle = generate_synthetic(cfg)
    tcfg = train_cfg or TrainConfig(seed=cfg.seed)
    model = train_linear(bundle.train, tcfg)

    logit_train = model.logits(bundle.train.features)
    logit_id = model.logits(bundle.test_id.features)
    logit_adj = model.logits(bundle.test_adjacent.features)
    logit_far = model.logits(bundle.test_far.features)

    pool_raw = np.vstack([bundle.test_id.features, bundle.test_far.features])
    pool_logits = np.vstack([logit_id, logit_far])
    pool_domains = np.concatenate(
        [np.zeros(bundle.test_id.n_rows, dtype=np.int64), bundle.far_domains]
    )
    probe_cfg = TrainConfig(
        seed=cfg.seed, epochs=1500, convergence_tol=1e-6,
        weight_decay=tcfg.weight_decay,
    )
    probe_raw = probe_domain_mi_bound(
        pool_raw, pool_domains, probe_seed=cfg.seed, train_cfg=probe_cfg
    )
    probe_log = probe_domain_mi_bound(
        pool_logits, pool_domains, probe_seed=cfg.seed, train_cfg=probe_cfg
    )

    # Detection: stage-1 filter in raw feature space (synthetic stand-in for
    # a pretrained space; unnormalized since the blocks are not embeddings),
    # second stage KNN in the supervised logit space.
    dfilter = fit_domain_filter(
        bundle.train, p=filter_p, k=filter_k, normalize=False
    )
    sup_train = FeatureSet(features=logit_train, labels=bundle.train.labels)
    second = fit_knn(sup_train, k=second_stage_k, normalize=False)
    ts = make_two_stage(dfilter, second, sup_train)

    sup_id = FeatureSet(features=logit_id)
    sup_adj = FeatureSet(features=logit_adj)
    sup_far = FeatureSet(features=logit_far)

    so_id = second.score_set(sup_id)
    so_adj = second.score_set(sup_adj)
    so_far = second.score_set(sup_far)

    ts_id = two_stage_score_set(ts, bundle.test_id, sup_id)
    ts_adj = two_stage_score_set(ts, bundle.test_adjacent, sup_adj)
    ts_far = two_stage_score_set(ts, bundle.test_far, sup_far)

    fo_id = -np.atleast_1d(dfilter.distances(bundle.test_id.features))
    fo_adj = -np.atleast_1d(dfilter.distances(bundle.test_adjacent.features))
    fo_far = -np.atleast_1d(dfilter.distances(bundle.test_far.features))

    detection = {
        "second_only": {
            "far_fpr95": fpr_at_tpr(so_id, so_far),
            "far_auroc": auroc(so_id, so_far),
            "adjacent_fpr95": fpr_at_tpr(so_id, so_adj),
            "adjacent_auroc": auroc(so_id, so_adj),
        },
        "two_stage": {
            "far_fpr95": fpr_at_tpr(ts_id, ts_far),
            "far_auroc": auroc(ts_id, ts_far),
            "adjacent_fpr95": fpr_at_tpr(ts_id, ts_adj),
            "adjacent_auroc": auroc(ts_id, ts_adj),
            "t_d": dfilter.t_d,
            "stage1_id_flag_rate": dfilter.flag_rate(bundle.test_id),
        },
        "filter_only": {
            "far_fpr95": fpr_at_tpr(fo_id, fo_far),
            "far_auroc": auroc(fo_id, fo_far),
            "adjacent_fpr95": fpr_at_tpr(fo_id, fo_adj),
            "adjacent_auroc": auroc(fo_id, fo_adj),
        },
        "params": {"filter_k": filter_k, "filter_p": filter_p,
                   "second_stage_k": second_stage_k},
    }

    histograms = {
        name: _score_histograms(scores)
        for name, scores in [
            ("second_only", {"id": so_id, "adjacent": so_adj, "far": so_far}),
            ("two_stage", {"id": ts_id, "adjacent": ts_adj, "far": ts_far}),
            ("filter_only", {"id": fo_id, "adjacent": fo_adj, "far": fo_far}),
        ]
    }

    report = CollapseReport(
        config=cfg,
        mi_bounds={
            "h_domain_nats": probe_raw.h_domain_nats,
            "raw": probe_raw.__dict__,
            "logits": probe_log.__dict__,
        },
        detection=detection,
        histograms=histograms,
        training={
            "epochs_run": model.epochs_run,
            "final_loss": model.final_loss,
            "train_accuracy": model.accuracy(bundle.train.features, bundle.train.labels),
            "id_test_accuracy": model.accuracy(bundle.test_id.features, bundle.test_id.labels),
            "weight_block_ratio": model.weight_block_ratio(cfg.d_dim),
        },
        notes=[
            "fine-tuning dynamics (catastrophic forgetting of pretrained "
            "domain features) have no linear analog here and are reported "
            "as untested",
        ],
    )
    return report


def make_model_feature_sets(bundle: SynthBundle, model: LinearModel) -> dict:
    """Supervised-space and raw-space FeatureSets for the benchmark pipeline.

    Supervised files carry the logits as their feature matrix plus the raw
    features as penultimate activations with the linear head attached, so
    every detector in the zoo (including ReAct) is applicable. All blocks are
    computed in float32 so stored logits reproduce penultimate @ head + bias
    bit-for-bit.
    """
    w32 = model.weights.astype(np.float32)
    b32 = model.bias.astype(np.float32)

    def sup(fs: FeatureSet, with_labels: bool):
        pen = fs.features.astype(np.float32)
        logits = pen @ w32.T + b32
        return FeatureSet(
            features=logits,
            logits=logits,
            penultimate=pen,
            head_weights=w32,
            head_bias=b32,
            labels=fs.labels if with_labels else None,
            meta=dict(fs.meta, space="supervised"),
        )

    def pre(fs: FeatureSet):
        return FeatureSet(
            features=fs.features,
            meta=dict(fs.meta, space="pretrained"),
        )

    return {
        "train_sup": sup(bundle.train, True),
        "train_pre": pre(bundle.train),
        "id_test_sup": sup(bundle.test_id, True),
        "id_test_pre": pre(bundle.test_id),
        "adjacent_sup": sup(bundle.test_adjacent, False),
        "adjacent_pre": pre(bundle.test_adjacent),
        "far_sup": sup(bundle.test_far, False),
        "far_pre": pre(bundle.test_far),
    }
