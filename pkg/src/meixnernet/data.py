"""GraphBundle on-disk format, synthetic dataset generator, and checkpoints.

A bundle directory holds five text-first files (see docs/format.md):

    meta.json      {"name", "num_nodes", "num_features", "num_classes", "version": 1}
    edges.tsv      one undirected edge per line, two integer columns
    features.tsv   N lines x F float columns, 17 significant digits
    labels.tsv     N integer lines
    masks.json     {"train": [...], "val": [...], "test": [...]}
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .autodiff import Tensor
from .graph import Graph
from .rng import DATA, stream
from . import model as model_mod

FORMAT_VERSION = 1
CHECKPOINT_VERSION = 1
BUNDLE_FILES = ("meta.json", "edges.tsv", "features.tsv", "labels.tsv", "masks.json")


class BundleError(ValueError):
    """A bundle file is missing, malformed, or violates an invariant."""


class CheckpointError(ValueError):
    """A checkpoint file is missing, corrupt, or from another format version."""


@dataclass
class GraphBundle:
    name: str
    num_nodes: int
    num_features: int
    num_classes: int
    edges: np.ndarray      # (m, 2) int64, undirected pairs as given on disk
    features: np.ndarray   # (n, f) float64
    labels: np.ndarray     # (n,) int64
    train_idx: np.ndarray
    val_idx: np.ndarray
    test_idx: np.ndarray

    def mask(self, which: str) -> np.ndarray:
        idx = {"train": self.train_idx, "val": self.val_idx, "test": self.test_idx}[which]
        m = np.zeros(self.num_nodes, dtype=bool)
        m[idx] = True
        return m


def _require(cond, message):
    if not cond:
        raise BundleError(message)


def _read_int_table(path: Path, columns: int) -> np.ndarray:
    rows = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != columns:
                raise BundleError(f"{path.name} line {lineno}: expected {columns} columns, got {len(parts)}")
            try:
                rows.append([int(p) for p in parts])
            except ValueError:
                raise BundleError(f"{path.name} line {lineno}: non-integer value") from None
    return np.asarray(rows, dtype=np.int64).reshape(-1, columns)


def load_bundle(dir_path) -> GraphBundle:
    """Load and fully validate a bundle directory."""
    d = Path(dir_path)
    _require(d.is_dir(), f"bundle directory not found: {d}")
    for name in BUNDLE_FILES:
        _require((d / name).is_file(), f"missing file: {name}")

    try:
        meta = json.loads((d / "meta.json").read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise BundleError(f"meta.json: invalid JSON ({e})") from None
    for key in ("name", "num_nodes", "num_features", "num_classes", "version"):
        _require(key in meta, f"meta.json: missing key {key!r}")
    _require(meta["version"] == FORMAT_VERSION,
             f"meta.json: unsupported version {meta['version']} (expected {FORMAT_VERSION})")
    n, f, c = int(meta["num_nodes"]), int(meta["num_features"]), int(meta["num_classes"])
    _require(n >= 1 and f >= 1 and c >= 1, "meta.json: num_nodes/num_features/num_classes must be >= 1")

    edges = _read_int_table(d / "edges.tsv", 2)
    for col in (0, 1):
        bad = np.nonzero((edges[:, col] < 0) | (edges[:, col] >= n))[0]
        _require(len(bad) == 0,
                 f"edges.tsv row {bad[0] + 1 if len(bad) else 0}: endpoint out of range [0, {n})")

    try:
        features = np.loadtxt(d / "features.tsv", dtype=np.float64, ndmin=2)
    except ValueError as e:
        raise BundleError(f"features.tsv: {e}") from None
    _require(features.shape == (n, f),
             f"features.tsv shape {features.shape} does not match meta ({n}, {f})")

    labels = _read_int_table(d / "labels.tsv", 1).ravel()
    _require(len(labels) == n, f"labels.tsv has {len(labels)} rows, expected {n}")
    bad = np.nonzero((labels < 0) | (labels >= c))[0]
    _require(len(bad) == 0,
             f"labels.tsv row {bad[0] + 1 if len(bad) else 0}: label out of range [0, {c})")

    try:
        masks = json.loads((d / "masks.json").read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise BundleError(f"masks.json: invalid JSON ({e})") from None
    idx = {}
    for part in ("train", "val", "test"):
        _require(part in masks, f"masks.json: missing key {part!r}")
        arr = np.asarray(masks[part], dtype=np.int64)
        if arr.size:
            _require(arr.min() >= 0 and arr.max() < n,
                     f"masks.json: {part} index out of range [0, {n})")
            uniq, counts = np.unique(arr, return_counts=True)
            dup = uniq[counts > 1]
            _require(len(dup) == 0, f"masks.json: index {dup[0] if len(dup) else 0} duplicated within {part}")
        idx[part] = np.sort(arr)
    for a, b in (("train", "val"), ("train", "test"), ("val", "test")):
        common = np.intersect1d(idx[a], idx[b])
        _require(len(common) == 0,
                 f"masks.json: index {common[0] if len(common) else 0} appears in both {a} and {b}")
    train_classes = set(labels[idx["train"]].tolist())
    missing = sorted(set(range(c)) - train_classes)
    _require(not missing, f"masks.json: class {missing[0] if missing else 0} absent from train mask")

    return GraphBundle(str(meta["name"]), n, f, c, edges, features, labels,
                       idx["train"], idx["val"], idx["test"])


def save_bundle(bundle: GraphBundle, dir_path) -> None:
    """Write a bundle directory; floats carry 17 significant digits."""
    d = Path(dir_path)
    d.mkdir(parents=True, exist_ok=True)
    meta = {"name": bundle.name, "num_nodes": bundle.num_nodes,
            "num_features": bundle.num_features, "num_classes": bundle.num_classes,
            "version": FORMAT_VERSION}
    (d / "meta.json").write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    with open(d / "edges.tsv", "w", encoding="utf-8") as f:
        for u, v in bundle.edges:
            f.write(f"{u}\t{v}\n")
    np.savetxt(d / "features.tsv", bundle.features, fmt="%.17g", delimiter="\t")
    with open(d / "labels.tsv", "w", encoding="utf-8") as f:
        for y in bundle.labels:
            f.write(f"{y}\n")
    masks = {part: getattr(bundle, f"{part}_idx").tolist() for part in ("train", "val", "test")}
    (d / "masks.json").write_text(json.dumps(masks, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def synthetic_two_cluster(n_per_class: int, f: int, p_in: float, p_out: float,
                          noise: float, seed: int) -> GraphBundle:
    """Two-block stochastic graph with one-hot-ish class means plus Gaussian noise.

    Stratified 20/20/60 train/val/test split. p_in == p_out is allowed (then the
    structure carries no class signal, which the degenerate-filter tests rely on).
    """
    if n_per_class < 5:
        raise ValueError("need at least 5 nodes per class for a stratified split")
    if f < 2:
        raise ValueError("need at least 2 feature dimensions")
    if not (0.0 <= p_out <= p_in <= 1.0):
        raise ValueError(f"need 0 <= p_out <= p_in <= 1, got p_in={p_in}, p_out={p_out}")
    if noise < 0:
        raise ValueError(f"noise must be non-negative, got {noise}")

    rng = stream(seed, DATA)
    n = 2 * n_per_class
    labels = np.repeat(np.arange(2, dtype=np.int64), n_per_class)

    prob = np.where(labels[:, None] == labels[None, :], p_in, p_out)
    draws = rng.random((n, n))
    upper = np.triu(np.ones((n, n), dtype=bool), k=1)
    u, v = np.nonzero(upper & (draws < prob))
    edges = np.column_stack([u, v]).astype(np.int64)

    means = np.zeros((2, f))
    means[0, 0] = 1.0
    means[1, 1] = 1.0
    features = means[labels] + noise * rng.standard_normal((n, f))

    train, val, test = [], [], []
    n_tr = max(1, int(round(0.2 * n_per_class)))
    n_val = max(1, int(round(0.2 * n_per_class)))
    for cls in range(2):
        members = np.nonzero(labels == cls)[0]
        order = rng.permutation(members)
        train.extend(order[:n_tr])
        val.extend(order[n_tr:n_tr + n_val])
        test.extend(order[n_tr + n_val:])
    return GraphBundle(name=f"synth2c_n{n_per_class}_seed{seed}", num_nodes=n,
                       num_features=f, num_classes=2, edges=edges, features=features,
                       labels=labels, train_idx=np.sort(np.asarray(train, dtype=np.int64)),
                       val_idx=np.sort(np.asarray(val, dtype=np.int64)),
                       test_idx=np.sort(np.asarray(test, dtype=np.int64)))


# ---------------------------------------------------------------------------
# checkpoints


def save_checkpoint(net, path, seed=None, epochs_completed=None) -> None:
    """JSON checkpoint: architecture, every parameter buffer, RNG provenance."""
    params = {}
    for name, node, _ in net.parameter_specs():
        if isinstance(node, Tensor):
            params[name] = {"shape": list(node.shape), "values": node.values.ravel().tolist()}
        else:
            params[name] = {"value": node.value}
    state = {
        "version": CHECKPOINT_VERSION,
        "kind": net.kind,
        "arch": {
            "f_in": net.layer1.f_in,
            "hidden": net.layer1.f_out,
            "num_classes": net.layer2.f_out,
            "k": net.k,
            "dropout_p": net.dropout_p,
            "affine": bool(net.layer1.norms[0].affine) if getattr(net.layer1, "norms", []) else True,
            "use_layernorm": bool(getattr(net.layer1, "use_layernorm", False)),
        },
        "rng": {"seed": seed, "epochs_completed": epochs_completed},
        "params": params,
    }
    Path(path).write_text(json.dumps(state, sort_keys=True) + "\n", encoding="utf-8")


def load_checkpoint(path):
    """Rebuild the model and restore bit-identical parameter buffers."""
    p = Path(path)
    if not p.is_file():
        raise CheckpointError(f"checkpoint not found: {p}")
    try:
        state = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise CheckpointError(f"corrupt checkpoint {p.name}: {e}") from None
    if not isinstance(state, dict) or state.get("version") != CHECKPOINT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {state.get('version')!r} "
                              f"(expected {CHECKPOINT_VERSION})")
    arch = state["arch"]
    net = model_mod.build_net(state["kind"], arch["f_in"], arch["hidden"], arch["num_classes"],
                              arch["k"], seed=0, dropout_p=arch["dropout_p"],
                              affine=arch["affine"], use_layernorm=arch["use_layernorm"])
    saved = state["params"]
    for name, node, _ in net.parameter_specs():
        if name not in saved:
            raise CheckpointError(f"checkpoint missing parameter {name}")
        entry = saved[name]
        if isinstance(node, Tensor):
            arr = np.asarray(entry["values"], dtype=np.float64).reshape(entry["shape"])
            if arr.shape != node.shape:
                raise CheckpointError(f"parameter {name} shape {arr.shape} != expected {node.shape}")
            node.values = np.ascontiguousarray(arr)
        else:
            node.value = float(entry["value"])
    return net


def read_checkpoint_meta(path) -> dict:
    try:
        state = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise CheckpointError(f"cannot read checkpoint: {e}") from None
    return {"version": state.get("version"), "kind": state.get("kind"),
            "arch": state.get("arch"), "rng": state.get("rng")}


def bundle_tensors(bundle: GraphBundle):
    """Graph + feature Tensor + label/mask arrays ready for training."""
    g = Graph.from_edge_list(bundle.num_nodes, bundle.edges)
    x = Tensor(bundle.features)
    return g, x, bundle.labels, {part: bundle.mask(part) for part in ("train", "val", "test")}
