"""MeixnerConv / ChebConv layers and the two-layer node classifier.

Both convolutions share one pattern: build K polynomial basis features,
concatenate them along the feature axis, and project with a single linear
layer Y = Z W + b where W is (K * F_in) x F_out. The Meixner layer owns its
learnable (beta, c) pair and one LayerNorm per basis order.
"""

from __future__ import annotations

import math

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .filters import (BasisOverflowError, LAYERNORM_EPS, MeixnerParams,
                      chebyshev_basis, meixner_basis, meixner_coeffs)
from .graph import Graph, chebyshev_rescale, scale_laplacian, sym_normalized_laplacian
from .rng import INIT, stream

MEIXNER = "meixner"
CHEBY = "cheby"
LAPLACIAN_SCALE = 0.5   # maps the L_sym spectrum [0, 2] onto [0, 1]
CHEB_LAMBDA_MAX = 2.0   # fixed theoretical bound, not estimated per graph


class NonFiniteActivation(ArithmeticError):
    """Forward pass produced inf/nan; message names layer and basis index."""


def glorot_uniform(rng, fan_in: int, fan_out: int) -> np.ndarray:
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


class LayerNormPair:
    """Per-basis gain/bias; frozen at (1, 0) when affine is disabled."""

    def __init__(self, width: int, affine: bool = True):
        self.gain = Tensor(np.ones((1, width)), requires_grad=affine)
        self.bias = Tensor(np.zeros((1, width)), requires_grad=affine)
        self.affine = affine


class MeixnerConvLayer:
    def __init__(self, f_in: int, f_out: int, k_terms: int, rng, *,
                 affine: bool = True, use_layernorm: bool = True, name: str = "meixner_conv"):
        self.f_in = f_in
        self.f_out = f_out
        self.k = k_terms
        self.name = name
        self.params = MeixnerParams.initial()
        self.use_layernorm = use_layernorm
        self.norms = [LayerNormPair(f_in, affine) for _ in range(k_terms)] if use_layernorm else []
        self.weight = Tensor(glorot_uniform(rng, k_terms * f_in, f_out), requires_grad=True)
        self.bias = Tensor(np.zeros((1, f_out)), requires_grad=True)
        self.last_diagnostics = None

    def forward(self, l_scaled, x: Tensor) -> Tensor:
        coeffs = meixner_coeffs(self.params, self.k)
        norms = [(p.gain, p.bias) for p in self.norms] if self.use_layernorm else None
        try:
            bases, diag = meixner_basis(l_scaled, x, coeffs, norms, LAYERNORM_EPS)
        except BasisOverflowError as e:
            raise NonFiniteActivation(f"{self.name}: basis {e.order} is non-finite") from e
        self.last_diagnostics = diag
        z = bases[0] if self.k == 1 else ad.concat_cols(bases)
        y = ad.add_bias(ad.matmul(z, self.weight), self.bias)
        if not np.isfinite(y.values).all():
            raise NonFiniteActivation(f"{self.name}: projected output is non-finite")
        return y

    def parameter_specs(self):
        """(name, node, weight_decay_eligible) triples; each parameter once."""
        specs = [(f"{self.name}.weight", self.weight, True),
                 (f"{self.name}.bias", self.bias, False),
                 (f"{self.name}.beta_raw", self.params.beta_raw, False),
                 (f"{self.name}.c_raw", self.params.c_raw, False)]
        for k, p in enumerate(self.norms):
            if p.affine:
                specs.append((f"{self.name}.norm{k}.gain", p.gain, False))
                specs.append((f"{self.name}.norm{k}.bias", p.bias, False))
        return specs


class ChebConvLayer:
    def __init__(self, f_in: int, f_out: int, k_terms: int, rng, name: str = "cheb_conv"):
        self.f_in = f_in
        self.f_out = f_out
        self.k = k_terms
        self.name = name
        self.weight = Tensor(glorot_uniform(rng, k_terms * f_in, f_out), requires_grad=True)
        self.bias = Tensor(np.zeros((1, f_out)), requires_grad=True)

    def forward(self, l_hat, x: Tensor) -> Tensor:
        bases = chebyshev_basis(l_hat, x, self.k)
        z = bases[0] if self.k == 1 else ad.concat_cols(bases)
        y = ad.add_bias(ad.matmul(z, self.weight), self.bias)
        if not np.isfinite(y.values).all():
            raise NonFiniteActivation(f"{self.name}: projected output is non-finite")
        return y

    def parameter_specs(self):
        return [(f"{self.name}.weight", self.weight, True),
                (f"{self.name}.bias", self.bias, False)]


class TwoLayerNet:
    """conv -> ReLU -> Dropout(p) -> conv, full-batch over all nodes."""

    def __init__(self, kind: str, layer1, layer2, dropout_p: float = 0.5):
        self.kind = kind
        self.layer1 = layer1
        self.layer2 = layer2
        self.dropout_p = dropout_p

    @property
    def k(self):
        return self.layer1.k

    def forward(self, op, x: Tensor, training: bool = False, rng=None) -> Tensor:
        h = ad.relu(self.layer1.forward(op, x))
        h = ad.dropout(h, self.dropout_p, training, rng)
        return self.layer2.forward(op, h)

    def parameter_specs(self):
        return self.layer1.parameter_specs() + self.layer2.parameter_specs()

    def parameter_count(self) -> int:
        total = 0
        for _, node, _ in self.parameter_specs():
            total += node.values.size if isinstance(node, Tensor) else 1
        return total

    def learned_shape_params(self):
        """Effective (beta, c) per layer, or None for the Chebyshev baseline."""
        if self.kind != MEIXNER:
            return None
        b1, c1 = self.layer1.params.effective_values()
        b2, c2 = self.layer2.params.effective_values()
        return {"beta_l1": b1, "c_l1": c1, "beta_l2": b2, "c_l2": c2}


def build_net(kind: str, f_in: int, hidden: int, num_classes: int, k_terms: int, seed: int, *,
              dropout_p: float = 0.5, affine: bool = True, use_layernorm: bool = True) -> TwoLayerNet:
    """Seeded construction; weight draws happen in a fixed order."""
    rng = stream(seed, INIT)
    if kind == MEIXNER:
        l1 = MeixnerConvLayer(f_in, hidden, k_terms, rng, affine=affine,
                              use_layernorm=use_layernorm, name="layer1")
        l2 = MeixnerConvLayer(hidden, num_classes, k_terms, rng, affine=affine,
                              use_layernorm=use_layernorm, name="layer2")
    elif kind == CHEBY:
        l1 = ChebConvLayer(f_in, hidden, k_terms, rng, name="layer1")
        l2 = ChebConvLayer(hidden, num_classes, k_terms, rng, name="layer2")
    else:
        raise ValueError(f"unknown model kind: {kind!r}")
    return TwoLayerNet(kind, l1, l2, dropout_p)


def laplacian_for(kind: str, g: Graph):
    """The operator each model filters with: 0.5 L_sym for Meixner
    (spectrum in [0, 1]), 2 L_sym / lambda_max - I for Chebyshev."""
    l_sym = sym_normalized_laplacian(g)
    if kind == MEIXNER:
        return scale_laplacian(l_sym, LAPLACIAN_SCALE)
    if kind == CHEBY:
        return chebyshev_rescale(l_sym, CHEB_LAMBDA_MAX)
    raise ValueError(f"unknown model kind: {kind!r}")
