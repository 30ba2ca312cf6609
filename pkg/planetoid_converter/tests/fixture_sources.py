"""Builders for miniature Planetoid-style source directories."""

import pickle

import numpy as np
import scipy.sparse as sp

ALLX_N = 7     # nodes 0..6 carry allx features
TRAIN_N = 4    # nodes 0..3 are the labeled training block
F = 3
C = 2


def _one_hot(labels, c=C):
    eye = np.eye(c, dtype=np.float64)
    return eye[np.asarray(labels)]


def write_fixture(src_dir, name="cora", test_ids=(8, 7, 9), num_nodes=10):
    """Write ind.<name>.* files for a tiny citation-style dataset.

    allx rows are nodes 0..6; ``test_ids`` lists the test nodes in file order
    (scramble them to exercise the reorder, leave holes to exercise padding).
    Feature rows are position-coded: node i's row is [i, i/2, -i] for allx
    nodes and a constant 10+i for test nodes, so tests can verify where each
    row landed. Labels alternate classes by node parity.
    """
    src_dir.mkdir(parents=True, exist_ok=True)
    test_ids = list(test_ids)

    allx = np.stack([[i, i / 2.0, -float(i)] for i in range(ALLX_N)])
    ally = _one_hot([i % C for i in range(ALLX_N)])
    x, y = allx[:TRAIN_N], ally[:TRAIN_N]
    tx = np.stack([np.full(F, 10.0 + t) for t in test_ids])
    ty = _one_hot([t % C for t in test_ids])
    graph = {i: [(i - 1) % num_nodes, (i + 1) % num_nodes]
             for i in range(num_nodes)}

    payloads = {"x": sp.csr_matrix(x), "y": y, "tx": sp.csr_matrix(tx),
                "ty": ty, "allx": sp.csr_matrix(allx), "ally": ally,
                "graph": graph}
    for part, obj in payloads.items():
        with open(src_dir / f"ind.{name}.{part}", "wb") as fh:
            pickle.dump(obj, fh)
    (src_dir / f"ind.{name}.test.index").write_text(
        "".join(f"{t}\n" for t in test_ids))
    return src_dir
