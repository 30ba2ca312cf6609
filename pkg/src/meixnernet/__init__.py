"""Spectral graph convolution with learnable discrete Meixner filters.

Submodules: ``autodiff`` (tape-based reverse mode), ``graph`` (CSR +
normalized Laplacians), ``filters`` (Meixner / Chebyshev bases),
``model`` (conv layers, two-layer classifier), ``train`` (Adam, recipe,
ablations), ``data`` (GraphBundle format, synthetic sets, checkpoints),
``verify`` (oracle suites), ``cli`` (command-line front end).
"""

from .autodiff import Scalar, ScalarParam, Tape, Tensor, backward
from .data import (GraphBundle, load_bundle, load_checkpoint, save_bundle,
                   save_checkpoint, synthetic_two_cluster)
from .filters import MeixnerParams, meixner_basis, meixner_coeffs
from .graph import CsrMatrix, Graph, sym_normalized_laplacian
from .model import CHEBY, MEIXNER, TwoLayerNet, build_net, laplacian_for
from .train import Adam, TrainConfig, TrainReport, evaluate, train

__version__ = "0.1.0"

__all__ = [
    "Adam", "CHEBY", "CsrMatrix", "Graph", "GraphBundle", "MEIXNER",
    "MeixnerParams", "Scalar", "ScalarParam", "Tape", "Tensor", "TrainConfig",
    "TrainReport", "TwoLayerNet", "backward", "build_net", "evaluate",
    "laplacian_for", "load_bundle", "load_checkpoint", "meixner_basis",
    "meixner_coeffs", "save_bundle", "save_checkpoint",
    "sym_normalized_laplacian", "synthetic_two_cluster", "train",
    "__version__",
]
