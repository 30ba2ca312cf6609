#!/usr/bin/env python3
"""One-shot converter: Planetoid citation-network files -> GraphBundle directory.

Reads the standard publicly distributed per-dataset files

    ind.<name>.x          pickled sparse features of the labeled train nodes
    ind.<name>.y          one-hot labels for those nodes
    ind.<name>.allx       features of nodes 0..allx_n-1 (train + val + unlabeled)
    ind.<name>.ally       one-hot labels for the allx nodes
    ind.<name>.tx         features of the test nodes, in test.index file order
    ind.<name>.ty         one-hot labels for the test nodes
    ind.<name>.graph      pickled {node: [neighbor, ...]} over all N nodes
    ind.<name>.test.index test node ids, one per line

and writes the five-file bundle directory documented in the consuming
package's docs/format.md. Node numbering follows the source convention:
allx rows are nodes 0..allx_n-1 and each test row lands at its id from
test.index. Ids inside the test range that never appear in test.index (the
known CiteSeer quirk: some test nodes are isolated and were dropped from the
index file) become zero-feature, class-0 rows that belong to no mask; the
conversion is otherwise faithful.

The split follows the standard convention: train = the y-labeled nodes,
val = the next 500 node ids, test = the sorted index file. When a source is
smaller than train+500 (tiny test fixtures), val shrinks to what exists.

Everything is deterministic, so converting the same source twice produces
byte-identical bundles. Exit codes mirror the consuming CLI: 0 success,
1 runtime failure, 2 usage error.
"""

import argparse
import json
import pickle
import sys
from pathlib import Path

import numpy as np

DATASETS = ("cora", "citeseer", "pubmed")
FORMAT_VERSION = 1
VAL_COUNT = 500
PICKLED_PARTS = ("x", "y", "tx", "ty", "allx", "ally", "graph")


class SourceError(Exception):
    """A source file is missing, unreadable, or internally inconsistent."""


def _log(msg):
    print(msg, file=sys.stderr)


def _load_pickle(path: Path):
    if not path.is_file():
        raise SourceError(f"missing source file: {path.name}")
    try:
        with open(path, "rb") as f:
            # latin1 handles the original python2 pickles; harmless otherwise
            return pickle.load(f, encoding="latin1")
    except Exception as e:
        raise SourceError(f"corrupt source file {path.name}: {e}") from None


def _dense(obj, part) -> np.ndarray:
    arr = obj.toarray() if hasattr(obj, "toarray") else np.asarray(obj)
    arr = np.asarray(arr, dtype=np.float64)
    if arr.ndim != 2:
        raise SourceError(f"source part {part} is not a 2-D matrix")
    return arr


def read_source(name: str, src_dir) -> dict:
    src = Path(src_dir)
    if not src.is_dir():
        raise SourceError(f"source directory not found: {src}")
    raw = {part: _load_pickle(src / f"ind.{name}.{part}") for part in PICKLED_PARTS}

    index_path = src / f"ind.{name}.test.index"
    if not index_path.is_file():
        raise SourceError(f"missing source file: {index_path.name}")
    try:
        raw["test.index"] = [int(tok) for tok in index_path.read_text().split()]
    except ValueError:
        raise SourceError(f"corrupt source file {index_path.name}: "
                          "non-integer id") from None
    return raw


def build_bundle_arrays(name: str, raw: dict) -> dict:
    graph = raw["graph"]
    if not isinstance(graph, dict):
        raise SourceError("graph part is not an adjacency dict")
    allx = _dense(raw["allx"], "allx")
    ally = _dense(raw["ally"], "ally")
    tx = _dense(raw["tx"], "tx")
    ty = _dense(raw["ty"], "ty")
    y = _dense(raw["y"], "y")
    test_ids = raw["test.index"]

    n = len(graph)
    allx_n, f = allx.shape
    c = ally.shape[1]
    train_n = y.shape[0]

    if ally.shape[0] != allx_n:
        raise SourceError(f"ally has {ally.shape[0]} rows, allx has {allx_n}")
    if tx.shape[1] != f:
        raise SourceError(f"tx has {tx.shape[1]} feature columns, allx has {f}")
    if ty.shape[1] != c:
        raise SourceError(f"ty has {ty.shape[1]} classes, ally has {c}")
    if tx.shape[0] != len(test_ids) or ty.shape[0] != len(test_ids):
        raise SourceError(f"test.index lists {len(test_ids)} ids but tx/ty have "
                          f"{tx.shape[0]}/{ty.shape[0]} rows")
    if len(set(test_ids)) != len(test_ids):
        raise SourceError("test.index contains duplicate ids")
    if train_n > allx_n:
        raise SourceError(f"y has {train_n} rows but allx only {allx_n}")
    for t in test_ids:
        if not (allx_n <= t < n):
            raise SourceError(f"test id {t} outside the test range [{allx_n}, {n})")

    features = np.zeros((n, f))
    features[:allx_n] = allx
    labels = np.zeros(n, dtype=np.int64)
    labels[:allx_n] = np.argmax(ally, axis=1)  # all-zero rows fall to class 0
    for node, frow, lrow in zip(test_ids, tx, ty):
        features[node] = frow
        labels[node] = int(np.argmax(lrow))

    edges = set()
    for u, neighbors in graph.items():
        if not (0 <= u < n):
            raise SourceError(f"graph references node {u} outside [0, {n})")
        for v in neighbors:
            if not (0 <= v < n):
                raise SourceError(f"graph references node {v} outside [0, {n})")
            if u != v:
                edges.add((min(u, v), max(u, v)))
    edge_list = sorted(edges)

    train = list(range(train_n))
    val = list(range(train_n, train_n + min(VAL_COUNT, allx_n - train_n)))
    test = sorted(test_ids)

    train_classes = {int(labels[i]) for i in train}
    missing = sorted(set(range(c)) - train_classes)
    if missing:
        raise SourceError(f"class {missing[0]} has no labeled training node")

    return {"name": name, "num_nodes": n, "num_features": f, "num_classes": c,
            "edges": edge_list, "features": features, "labels": labels,
            "train": train, "val": val, "test": test,
            "padded": (n - allx_n) - len(test_ids)}


def write_bundle(bundle: dict, out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    meta = {"name": bundle["name"], "num_nodes": bundle["num_nodes"],
            "num_features": bundle["num_features"],
            "num_classes": bundle["num_classes"], "version": FORMAT_VERSION}
    (out / "meta.json").write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n",
                                   encoding="utf-8")
    with open(out / "edges.tsv", "w", encoding="utf-8") as fh:
        for u, v in bundle["edges"]:
            fh.write(f"{u}\t{v}\n")
    with open(out / "features.tsv", "w", encoding="utf-8") as fh:
        for row in bundle["features"]:
            fh.write("\t".join(format(v, ".17g") for v in row) + "\n")
    with open(out / "labels.tsv", "w", encoding="utf-8") as fh:
        for label in bundle["labels"]:
            fh.write(f"{label}\n")
    masks = {"train": bundle["train"], "val": bundle["val"], "test": bundle["test"]}
    (out / "masks.json").write_text(json.dumps(masks, sort_keys=True, indent=2) + "\n",
                                    encoding="utf-8")


def convert(name: str, src_dir, out_dir) -> dict:
    raw = read_source(name, src_dir)
    bundle = build_bundle_arrays(name, raw)
    write_bundle(bundle, out_dir)
    return bundle


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        description="Convert Planetoid citation files to a GraphBundle directory")
    parser.add_argument("--dataset", required=True, choices=DATASETS)
    parser.add_argument("--src", required=True, help="directory with the ind.* files")
    parser.add_argument("--out", required=True, help="bundle directory to write")
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else 0

    try:
        bundle = convert(args.dataset, args.src, args.out)
    except SourceError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1

    print(f"STAT name={bundle['name']} nodes={bundle['num_nodes']} "
          f"edges={len(bundle['edges'])} features={bundle['num_features']} "
          f"classes={bundle['num_classes']}")
    print(f"STAT train={len(bundle['train'])} val={len(bundle['val'])} "
          f"test={len(bundle['test'])} padded={bundle['padded']}")
    _log(f"wrote bundle to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
