"""Adam optimizer, the training recipe, evaluation, and ablation drivers.

One training run is full-batch: every epoch does a forward pass over all
nodes, takes the cross-entropy on the train mask, backpropagates, and applies
one Adam step. Validation accuracy is recorded per epoch with dropout off;
the test score comes from the final-epoch model (no early stopping).
"""

from __future__ import annotations

import csv
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import autodiff as ad
from .autodiff import Tape, Tensor
from .data import GraphBundle, bundle_tensors
from .filters import meixner_basis, meixner_coeffs, chebyshev_basis
from .model import (CHEBY, MEIXNER, NonFiniteActivation, TwoLayerNet,
                    build_net, laplacian_for)
from .rng import DROPOUT, stream

SERIES_HEADER = ("model", "dataset", "K", "hidden", "seed", "epoch", "train_loss", "val_acc")
FINALS_HEADER = ("model", "dataset", "K", "hidden", "seed", "test_acc",
                 "beta_l1", "c_l1", "beta_l2", "c_l2", "wall_ms")


class TrainingDiverged(ArithmeticError):
    """Training loss went non-finite; message carries the diagnostic dump."""


class Adam:
    """Adam with bias correction and coupled (L2-gradient) weight decay.

    Decay touches only the parameters flagged eligible in their spec triple;
    by default that is the linear weights alone.
    """

    def __init__(self, specs, lr=0.01, beta1=0.9, beta2=0.999, eps=1e-8,
                 weight_decay=5e-4):
        self.specs = list(specs)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.weight_decay = weight_decay
        self.step_count = 0
        self._m = []
        self._v = []
        for _, node, _ in self.specs:
            if isinstance(node, Tensor):
                self._m.append(np.zeros_like(node.values))
                self._v.append(np.zeros_like(node.values))
            else:
                self._m.append(0.0)
                self._v.append(0.0)

    def decay_eligible_names(self):
        return [name for name, _, eligible in self.specs if eligible]

    def zero_grad(self):
        for _, node, _ in self.specs:
            node.zero_grad()

    def step(self):
        self.step_count += 1
        t = self.step_count
        bc1 = 1.0 - self.beta1 ** t
        bc2 = 1.0 - self.beta2 ** t
        for i, (name, node, eligible) in enumerate(self.specs):
            if isinstance(node, Tensor):
                g = node.grad if node.grad is not None else np.zeros_like(node.values)
                if not np.isfinite(g).all():
                    raise ValueError(f"non-finite gradient for parameter {name}")
                if eligible and self.weight_decay:
                    g = g + self.weight_decay * node.values
                self._m[i] = self.beta1 * self._m[i] + (1.0 - self.beta1) * g
                self._v[i] = self.beta2 * self._v[i] + (1.0 - self.beta2) * g * g
                m_hat = self._m[i] / bc1
                v_hat = self._v[i] / bc2
                node.values = node.values - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)
            else:
                g = node.grad if node.grad is not None else 0.0
                if not np.isfinite(g):
                    raise ValueError(f"non-finite gradient for parameter {name}")
                if eligible and self.weight_decay:
                    g = g + self.weight_decay * node.value
                self._m[i] = self.beta1 * self._m[i] + (1.0 - self.beta1) * g
                self._v[i] = self.beta2 * self._v[i] + (1.0 - self.beta2) * g * g
                m_hat = self._m[i] / bc1
                v_hat = self._v[i] / bc2
                node.value = node.value - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


@dataclass
class TrainConfig:
    epochs: int = 200
    k: int = 2
    hidden: int = 16
    dropout: float = 0.5
    seed: int = 0
    model: str = MEIXNER
    lr: float = 0.01
    weight_decay: float = 5e-4
    decay_meixner_params: bool = False
    layernorm_affine: bool = True
    normalize: bool = True

    def validate(self):
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.k < 1:
            raise ValueError(f"K must be >= 1, got {self.k}")
        if self.hidden < 1:
            raise ValueError(f"hidden must be >= 1, got {self.hidden}")
        if self.model not in (MEIXNER, CHEBY):
            raise ValueError(f"unknown model kind: {self.model!r}")


@dataclass
class TrainReport:
    config: TrainConfig
    dataset: str
    train_loss: list
    val_acc: list
    test_acc: float
    learned: dict | None
    wall_ms: float
    warnings: list = field(default_factory=list)

    def comparable(self):
        """Everything determinism covers; wall-clock time is excluded."""
        return {"config": self.config, "dataset": self.dataset,
                "train_loss": self.train_loss, "val_acc": self.val_acc,
                "test_acc": self.test_acc, "learned": self.learned,
                "warnings": self.warnings}


def accuracy(logit_values: np.ndarray, labels: np.ndarray, mask: np.ndarray) -> float:
    """Argmax accuracy over masked rows; ties break to the lowest class index."""
    if not mask.any():
        raise ValueError("accuracy mask selects no nodes")
    pred = np.argmax(logit_values, axis=1)
    return float(np.mean(pred[mask] == labels[mask]))


def _eval_accuracy(net: TwoLayerNet, op, x: Tensor, labels, mask) -> float:
    logits = net.forward(op, x, training=False)
    return accuracy(logits.values, labels, mask)


def evaluate(net: TwoLayerNet, bundle: GraphBundle, mask) -> float:
    """Eval-mode accuracy on a bundle; mask is 'train'/'val'/'test' or a bool array."""
    g, x, labels, masks = bundle_tensors(bundle)
    m = masks[mask] if isinstance(mask, str) else np.asarray(mask, dtype=bool)
    op = laplacian_for(net.kind, g)
    return _eval_accuracy(net, op, x, labels, m)


def _check_shape_params(net: TwoLayerNet):
    if net.kind != MEIXNER:
        return
    for layer in (net.layer1, net.layer2):
        beta, c = layer.params.effective_values()
        if not (beta > 0.0 and 0.0 < c < 1.0):
            raise AssertionError(f"{layer.name}: shape params left their domain "
                                 f"(beta={beta}, c={c})")


def _divergence_dump(net: TwoLayerNet, op, x: Tensor, epoch: int) -> str:
    parts = [f"non-finite training loss at epoch {epoch}"]
    learned = net.learned_shape_params()
    if learned is not None:
        parts.append(", ".join(f"{k}={v:.6g}" for k, v in learned.items()))
    if net.kind == MEIXNER:
        coeffs = meixner_coeffs(net.layer1.params, net.k)
        _, diag = meixner_basis(op, x, coeffs, norms=None)
        mags = diag.max_abs
    else:
        bases = chebyshev_basis(op, x, net.k)
        mags = [float(np.abs(t.values).max()) for t in bases]
    parts.append("layer1 basis max-abs=[" + ", ".join(f"{m:.3e}" for m in mags) + "]")
    return "; ".join(parts)


def train(config: TrainConfig, bundle: GraphBundle) -> TrainReport:
    """Run the full recipe and return the per-epoch series plus finals."""
    config.validate()
    g, x, labels, masks = bundle_tensors(bundle)
    net = build_net(config.model, bundle.num_features, config.hidden,
                    bundle.num_classes, config.k, config.seed,
                    dropout_p=config.dropout, affine=config.layernorm_affine,
                    use_layernorm=config.normalize)
    op = laplacian_for(config.model, g)

    specs = []
    for name, node, eligible in net.parameter_specs():
        if config.decay_meixner_params and (name.endswith("beta_raw") or name.endswith("c_raw")):
            eligible = True
        specs.append((name, node, eligible))
    opt = Adam(specs, lr=config.lr, weight_decay=config.weight_decay)

    train_loss, val_acc, warnings = [], [], []
    t0 = time.perf_counter()
    for epoch in range(config.epochs):
        rng = stream(config.seed, DROPOUT, epoch)
        try:
            with Tape() as tape:
                logits = net.forward(op, x, training=True, rng=rng)
                loss = ad.softmax_cross_entropy(logits, labels, masks["train"])
            if not np.isfinite(loss.value):
                raise TrainingDiverged(_divergence_dump(net, op, x, epoch + 1))
            opt.zero_grad()
            ad.backward(loss, tape)
            opt.step()
        except NonFiniteActivation:
            raise TrainingDiverged(_divergence_dump(net, op, x, epoch + 1)) from None
        _check_shape_params(net)
        train_loss.append(loss.value)
        val_acc.append(_eval_accuracy(net, op, x, labels, masks["val"]))
    wall_ms = (time.perf_counter() - t0) * 1000.0

    test_acc = _eval_accuracy(net, op, x, labels, masks["test"])
    report = TrainReport(config=config, dataset=bundle.name, train_loss=train_loss,
                         val_acc=val_acc, test_acc=test_acc,
                         learned=net.learned_shape_params(), wall_ms=wall_ms,
                         warnings=warnings)
    assert len(report.train_loss) == config.epochs
    assert len(report.val_acc) == config.epochs
    report._net = net  # noqa: attribute for checkpointing by callers
    return report


def _run_job(args):
    config, bundle = args
    return train(config, bundle)


def run_many(configs, bundle: GraphBundle, workers: int = 1):
    """Train each config; fan out across processes when workers > 1.

    Counter-based RNG streams never share state, so parallel runs return
    bit-identical reports to a sequential sweep. Results come back in input
    order.
    """
    if workers <= 1 or len(configs) <= 1:
        return [train(c, bundle) for c in configs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_job, [(c, bundle) for c in configs]))


def ablate_k(config: TrainConfig, bundle: GraphBundle, k_values,
             seeds=None, workers: int = 1):
    """Both models across k_values, identical seeds; returns finals rows."""
    k_values = list(k_values)
    if not k_values:
        raise ValueError("k_values must be non-empty")
    seeds = [config.seed] if seeds is None else list(seeds)
    jobs = [replace(config, model=kind, k=k, seed=s)
            for kind in (CHEBY, MEIXNER) for k in k_values for s in seeds]
    reports = run_many(jobs, bundle, workers)
    return [finals_row(r) for r in reports]


def ablate_hidden(config: TrainConfig, bundle: GraphBundle, hidden_values,
                  seeds=None, workers: int = 1):
    """Both models across hidden sizes at the configured K."""
    hidden_values = list(hidden_values)
    if not hidden_values:
        raise ValueError("hidden_values must be non-empty")
    seeds = [config.seed] if seeds is None else list(seeds)
    jobs = [replace(config, model=kind, hidden=h, seed=s)
            for kind in (CHEBY, MEIXNER) for h in hidden_values for s in seeds]
    reports = run_many(jobs, bundle, workers)
    return [finals_row(r) for r in reports]


# ---------------------------------------------------------------------------
# CSV emission


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def series_rows(report: TrainReport):
    c = report.config
    for epoch in range(c.epochs):
        yield {"model": c.model, "dataset": report.dataset, "K": c.k,
               "hidden": c.hidden, "seed": c.seed, "epoch": epoch + 1,
               "train_loss": report.train_loss[epoch],
               "val_acc": report.val_acc[epoch]}


def finals_row(report: TrainReport):
    c = report.config
    learned = report.learned or {}
    return {"model": c.model, "dataset": report.dataset, "K": c.k,
            "hidden": c.hidden, "seed": c.seed, "test_acc": report.test_acc,
            "beta_l1": learned.get("beta_l1"), "c_l1": learned.get("c_l1"),
            "beta_l2": learned.get("beta_l2"), "c_l2": learned.get("c_l2"),
            "wall_ms": report.wall_ms}


def write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(row[key]) for key in header])


def write_series_csv(path, reports):
    write_csv(path, SERIES_HEADER,
              [row for r in reports for row in series_rows(r)])


def write_finals_csv(path, rows):
    write_csv(path, FINALS_HEADER, rows)
