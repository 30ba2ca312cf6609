"""Meixner and Chebyshev polynomial filter bases over a sparse operator.

The Meixner family M_k(x; beta, c) is evaluated in monic three-term
recurrence form with coefficients

    b_k = (k (1 + c) + beta c) / (1 - c)
    c_k = c k (k + beta - 1) / (1 - c)^2

built inside the autodiff graph so both shape parameters stay learnable.
Raw recurrence outputs grow with k; the per-basis LayerNorm hook tames them
before concatenation (normalize-off mode exists for diagnostics only).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .autodiff import Scalar, ScalarParam, Tensor

BETA_FLOOR = 1e-4
C_MARGIN = 1e-4
LAYERNORM_EPS = 1e-5


class BasisOverflowError(ArithmeticError):
    """A normalized polynomial basis came out non-finite."""

    def __init__(self, order: int):
        super().__init__(f"non-finite values in polynomial basis of order {order}")
        self.order = order


@dataclass
class MeixnerParams:
    """Unconstrained pre-images of the Meixner shape parameters.

    Effective values are beta = softplus(beta_raw) + 1e-4 > 0 and
    c = sigmoid(c_raw) clamped to [1e-4, 1 - 1e-4].
    """

    beta_raw: ScalarParam
    c_raw: ScalarParam

    @classmethod
    def initial(cls) -> "MeixnerParams":
        # chosen so the effective starting point is exactly beta=1, c=0.5
        return cls(beta_raw=ScalarParam(math.log(math.expm1(1.0 - BETA_FLOOR))),
                   c_raw=ScalarParam(0.0))

    @classmethod
    def from_effective(cls, beta: float, c: float) -> "MeixnerParams":
        """Pre-images for target effective values (exact up to rounding)."""
        if beta <= BETA_FLOOR:
            raise ValueError(f"beta must exceed {BETA_FLOOR}, got {beta}")
        if not (C_MARGIN <= c <= 1.0 - C_MARGIN):
            raise ValueError(f"c must lie in [{C_MARGIN}, {1.0 - C_MARGIN}], got {c}")
        return cls(beta_raw=ScalarParam(math.log(math.expm1(beta - BETA_FLOOR))),
                   c_raw=ScalarParam(math.log(c / (1.0 - c))))

    def effective(self) -> tuple[Scalar, Scalar]:
        beta = ad.softplus(self.beta_raw) + BETA_FLOOR
        c = ad.clip(ad.sigmoid(self.c_raw), C_MARGIN, 1.0 - C_MARGIN)
        return beta, c

    def effective_values(self) -> tuple[float, float]:
        beta, c = self.effective()
        return beta.value, c.value


@dataclass
class RecurrenceCoeffs:
    """b_k and c_k for k = 0..K-1 as graph nodes; cc[0] = 0 is a placeholder
    kept only for index alignment (the recurrence never uses it)."""

    b: list
    cc: list


def meixner_coeffs(params: MeixnerParams, k_terms: int) -> RecurrenceCoeffs:
    """Recurrence coefficients for K basis terms, differentiable in beta, c."""
    if k_terms < 1:
        raise ValueError(f"need at least one basis term, got K={k_terms}")
    beta, c = params.effective()
    one_minus = 1.0 - c
    denom_sq = one_minus * one_minus
    b = [(k * (1.0 + c) + beta * c) / one_minus for k in range(k_terms)]
    cc = [Scalar(0.0)]
    cc += [(c * float(k)) * (beta + (k - 1.0)) / denom_sq for k in range(1, k_terms)]
    return RecurrenceCoeffs(b=b, cc=cc)


@dataclass
class BasisDiagnostics:
    """Populated in normalize-off (diagnostic) mode."""

    max_abs: list = field(default_factory=list)
    nonfinite_orders: list = field(default_factory=list)

    def warnings(self):
        return [f"non-finite values in raw basis of order {k}" for k in self.nonfinite_orders]


def meixner_basis(l_scaled, x: Tensor, coeffs: RecurrenceCoeffs,
                  norms=None, eps: float = LAYERNORM_EPS):
    """K basis feature matrices via the monic Meixner recurrence.

        Xbar_0 = X
        Xbar_1 = (L - b_0 I) X
        Xbar_k = (L - b_{k-1} I) Xbar_{k-1} - c_{k-1} Xbar_{k-2}

    ``norms``: sequence of K (gain, bias) pairs -> each raw basis goes through
    its own LayerNorm before being returned (non-finite output raises);
    None -> raw bases are returned with overflow diagnostics instead.
    """
    k_terms = len(coeffs.b)
    raw = [x]
    if k_terms >= 2:
        raw.append(ad.axpy_scalar(-coeffs.b[0], x, ad.spmm(l_scaled, x)))
    for k in range(2, k_terms):
        t = ad.axpy_scalar(-coeffs.b[k - 1], raw[k - 1], ad.spmm(l_scaled, raw[k - 1]))
        raw.append(ad.axpy_scalar(-coeffs.cc[k - 1], raw[k - 2], t))

    diag = BasisDiagnostics()
    if norms is None:
        for k, t in enumerate(raw):
            finite = np.isfinite(t.values)
            if finite.all():
                diag.max_abs.append(float(np.abs(t.values).max()))
            else:
                diag.nonfinite_orders.append(k)
                diag.max_abs.append(float(np.abs(t.values[finite]).max(initial=0.0)))
        return raw, diag

    if len(norms) != k_terms:
        raise ValueError(f"need {k_terms} LayerNorm pairs, got {len(norms)}")
    out = []
    for k, (t, (gain, bias)) in enumerate(zip(raw, norms)):
        y = ad.layer_norm(t, gain, bias, eps)
        if not np.isfinite(y.values).all():
            raise BasisOverflowError(k)
        out.append(y)
    return out, diag


def chebyshev_basis(l_hat, x: Tensor, k_terms: int):
    """T_0 = X, T_1 = L X, T_k = 2 L T_{k-1} - T_{k-2}; no normalization."""
    if k_terms < 1:
        raise ValueError(f"need at least one basis term, got K={k_terms}")
    bases = [x]
    if k_terms >= 2:
        bases.append(ad.spmm(l_hat, x))
    for k in range(2, k_terms):
        bases.append(ad.axpy_scalar(-1.0, bases[k - 2],
                                    ad.scale(2.0, ad.spmm(l_hat, bases[k - 1]))))
    return bases


def _monic_meixner_table(xs: np.ndarray, max_order: int, beta: float, c: float) -> list[np.ndarray]:
    """Values of the monic polynomials M_0..M_max at the points xs (plain floats)."""
    one_minus = 1.0 - c
    table = [np.ones_like(xs)]
    if max_order >= 1:
        b0 = beta * c / one_minus
        table.append(xs - b0)
    for k in range(1, max_order):
        bk = (k * (1.0 + c) + beta * c) / one_minus
        ck = c * k * (k + beta - 1.0) / one_minus**2
        table.append((xs - bk) * table[k] - ck * table[k - 1])
    return table


def meixner_orthogonality_check(beta: float, c: float, k: int, j: int, support: int) -> float:
    """Normalized discrete cross-sum |<M_k, M_j>_w| / sqrt(<M_k,M_k> <M_j,M_j>)
    under the negative-binomial weight w(x) = c^x (beta)_x / x! on 0..support.

    Near zero for k != j; exactly 1 for k == j by construction.
    """
    xs = np.arange(support + 1, dtype=np.float64)
    w = np.empty(support + 1)
    w[0] = 1.0
    for x in range(support):
        w[x + 1] = w[x] * c * (beta + x) / (x + 1.0)
    table = _monic_meixner_table(xs, max(k, j), beta, c)
    cross = math.fsum(w * table[k] * table[j])
    norm_k = math.fsum(w * table[k] * table[k])
    norm_j = math.fsum(w * table[j] * table[j])
    return abs(cross) / math.sqrt(norm_k * norm_j)
