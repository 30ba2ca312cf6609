"""Reverse-mode automatic differentiation over dense float64 matrices and scalars.

Forward computation runs on plain numpy. While a :class:`Tape` is active,
every differentiable operation appends a backward closure; ``Tape.backward``
replays the closures in exact reverse recording order. With no active tape
(evaluation mode) the same functions are pure numpy with zero bookkeeping.
"""

from __future__ import annotations

import math

import numpy as np

_active_tape = None


def active_tape():
    return _active_tape


class Tape:
    """Ordered record of one forward pass.

    Operations are recorded in execution order, so every record's inputs
    precede it; replaying in reverse is therefore a valid reverse-mode sweep.
    """

    def __init__(self):
        self._records = []  # (output node, closure pulling output.grad into inputs)

    def __enter__(self):
        global _active_tape
        if _active_tape is not None:
            raise RuntimeError("a Tape is already recording; nested tapes are not supported")
        _active_tape = self
        return self

    def __exit__(self, exc_type, exc, tb):
        global _active_tape
        _active_tape = None
        return False

    def __len__(self):
        return len(self._records)

    def record(self, out, pull):
        self._records.append((out, pull))

    def backward(self, loss):
        """Seed d(loss)/d(loss) = 1 and replay the tape backwards.

        Gradients of leaf parameters accumulate across calls; gradients of
        recorded intermediates are cleared first so each replay is
        self-consistent.
        """
        if not isinstance(loss, Scalar):
            raise TypeError(f"backward expects a Scalar loss, got {type(loss).__name__}")
        for out, _ in self._records:
            out.grad = None
        loss.grad = 1.0
        for out, pull in reversed(self._records):
            if out.grad is None:  # branch not contributing to the loss
                continue
            pull(out.grad)


def backward(loss, tape):
    """Convenience wrapper around ``tape.backward(loss)``."""
    tape.backward(loss)


class Tensor:
    """Dense 2-D float64 value participating in the computation graph."""

    __slots__ = ("values", "requires_grad", "grad")

    def __init__(self, values, requires_grad=False):
        arr = np.ascontiguousarray(values, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError(f"Tensor must be 2-D, got shape {arr.shape}")
        self.values = arr
        self.requires_grad = bool(requires_grad)
        self.grad = None

    @property
    def shape(self):
        return self.values.shape

    def zero_grad(self):
        self.grad = None

    def __repr__(self):
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"


class Scalar:
    """Scalar node; also the result type of scalar arithmetic on the tape."""

    __slots__ = ("value", "requires_grad", "grad")

    def __init__(self, value, requires_grad=False):
        self.value = float(value)
        self.requires_grad = bool(requires_grad)
        self.grad = None

    def zero_grad(self):
        self.grad = None

    def __repr__(self):
        return f"Scalar({self.value!r}, requires_grad={self.requires_grad})"

    def __add__(self, other):
        return sadd(self, other)

    __radd__ = __add__

    def __mul__(self, other):
        return smul(self, other)

    __rmul__ = __mul__

    def __sub__(self, other):
        return ssub(self, other)

    def __rsub__(self, other):
        return ssub(other, self)

    def __truediv__(self, other):
        return sdiv(self, other)

    def __rtruediv__(self, other):
        return sdiv(other, self)

    def __neg__(self):
        return smul(self, -1.0)


class ScalarParam(Scalar):
    """Learnable scalar leaf (e.g. the unconstrained pre-images of beta, c)."""

    def __init__(self, value):
        super().__init__(value, requires_grad=True)


def _record(out, pull):
    if _active_tape is not None and out.requires_grad:
        _active_tape.record(out, pull)


def _add_grad(t: Tensor, delta):
    if not t.requires_grad:
        return
    if t.grad is None:
        t.grad = np.zeros_like(t.values)
    t.grad += delta


def _add_sgrad(s: Scalar, delta):
    if not s.requires_grad:
        return
    s.grad = (0.0 if s.grad is None else s.grad) + float(delta)


def _as_scalar(x):
    if isinstance(x, Scalar):
        return x
    if isinstance(x, (int, float, np.floating, np.integer)):
        return Scalar(x)
    raise TypeError(f"expected Scalar or number, got {type(x).__name__}")


# ---------------------------------------------------------------------------
# scalar arithmetic


def sadd(a, b):
    a, b = _as_scalar(a), _as_scalar(b)
    out = Scalar(a.value + b.value, a.requires_grad or b.requires_grad)

    def pull(g):
        _add_sgrad(a, g)
        _add_sgrad(b, g)

    _record(out, pull)
    return out


def ssub(a, b):
    a, b = _as_scalar(a), _as_scalar(b)
    out = Scalar(a.value - b.value, a.requires_grad or b.requires_grad)

    def pull(g):
        _add_sgrad(a, g)
        _add_sgrad(b, -g)

    _record(out, pull)
    return out


def smul(a, b):
    a, b = _as_scalar(a), _as_scalar(b)
    out = Scalar(a.value * b.value, a.requires_grad or b.requires_grad)

    def pull(g):
        _add_sgrad(a, g * b.value)
        _add_sgrad(b, g * a.value)

    _record(out, pull)
    return out


def sdiv(a, b):
    a, b = _as_scalar(a), _as_scalar(b)
    out = Scalar(a.value / b.value, a.requires_grad or b.requires_grad)

    def pull(g):
        _add_sgrad(a, g / b.value)
        _add_sgrad(b, -g * a.value / (b.value * b.value))

    _record(out, pull)
    return out


def _sigmoid_value(v):
    if v >= 0:
        return 1.0 / (1.0 + math.exp(-v))
    e = math.exp(v)
    return e / (1.0 + e)


def sigmoid(a):
    a = _as_scalar(a)
    s = _sigmoid_value(a.value)
    out = Scalar(s, a.requires_grad)

    def pull(g):
        _add_sgrad(a, g * s * (1.0 - s))

    _record(out, pull)
    return out


def softplus(a):
    a = _as_scalar(a)
    out = Scalar(np.logaddexp(0.0, a.value), a.requires_grad)

    def pull(g):
        _add_sgrad(a, g * _sigmoid_value(a.value))

    _record(out, pull)
    return out


def clip(a, lo, hi):
    """Clamp to [lo, hi]; gradient passes only on the open interior."""
    a = _as_scalar(a)
    v = min(max(a.value, lo), hi)
    out = Scalar(v, a.requires_grad)
    interior = lo < a.value < hi

    def pull(g):
        if interior:
            _add_sgrad(a, g)

    _record(out, pull)
    return out


# ---------------------------------------------------------------------------
# tensor operations


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"matmul dimension mismatch: {a.shape} x {b.shape}")
    out = Tensor(a.values @ b.values, a.requires_grad or b.requires_grad)

    def pull(g):
        _add_grad(a, g @ b.values.T)
        _add_grad(b, a.values.T @ g)

    _record(out, pull)
    return out


def spmm(s, x: Tensor) -> Tensor:
    """Sparse-dense product s @ x.

    ``s`` holds constants (a symmetric Laplacian-type operator); no gradient
    is computed for its entries. The backward rule dX = S^T dY is realized as
    S dY, which requires s to be symmetric.
    """
    if s.cols != x.shape[0]:
        raise ValueError(f"spmm dimension mismatch: {s.rows}x{s.cols} sparse vs {x.shape} dense")
    out = Tensor(s.matmat(x.values), x.requires_grad)

    def pull(g):
        _add_grad(x, s.matmat(g))

    _record(out, pull)
    return out


def axpy_scalar(alpha, x: Tensor, y: Tensor) -> Tensor:
    """alpha * x + y with a (possibly learnable) scalar alpha."""
    alpha = _as_scalar(alpha)
    if x.shape != y.shape:
        raise ValueError(f"axpy_scalar shape mismatch: {x.shape} vs {y.shape}")
    out = Tensor(alpha.value * x.values + y.values,
                 alpha.requires_grad or x.requires_grad or y.requires_grad)

    def pull(g):
        if alpha.requires_grad:
            _add_sgrad(alpha, np.sum(x.values * g))
        _add_grad(x, alpha.value * g)
        _add_grad(y, g)

    _record(out, pull)
    return out


def scale(alpha, x: Tensor) -> Tensor:
    """alpha * x."""
    alpha = _as_scalar(alpha)
    out = Tensor(alpha.value * x.values, alpha.requires_grad or x.requires_grad)

    def pull(g):
        if alpha.requires_grad:
            _add_sgrad(alpha, np.sum(x.values * g))
        _add_grad(x, alpha.value * g)

    _record(out, pull)
    return out


def add_bias(x: Tensor, b: Tensor) -> Tensor:
    """x + b with b a 1 x f row vector broadcast over rows."""
    if b.shape != (1, x.shape[1]):
        raise ValueError(f"bias shape {b.shape} incompatible with {x.shape}")
    out = Tensor(x.values + b.values, x.requires_grad or b.requires_grad)

    def pull(g):
        _add_grad(x, g)
        _add_grad(b, g.sum(axis=0, keepdims=True))

    _record(out, pull)
    return out


def concat_cols(xs) -> Tensor:
    """Concatenate tensors along the feature axis, blocks in argument order."""
    xs = list(xs)
    n = xs[0].shape[0]
    for t in xs:
        if t.shape[0] != n:
            raise ValueError(f"concat_cols row mismatch: {t.shape[0]} vs {n}")
    out = Tensor(np.hstack([t.values for t in xs]), any(t.requires_grad for t in xs))
    widths = [t.shape[1] for t in xs]

    def pull(g):
        off = 0
        for t, w in zip(xs, widths):
            _add_grad(t, g[:, off:off + w])
            off += w

    _record(out, pull)
    return out


def relu(x: Tensor) -> Tensor:
    out = Tensor(np.maximum(x.values, 0.0), x.requires_grad)
    mask = x.values > 0

    def pull(g):
        _add_grad(x, g * mask)

    _record(out, pull)
    return out


def layer_norm(x: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-5) -> Tensor:
    """Row-wise normalization to zero mean / unit population variance,
    then affine scale and shift by 1 x f gain and bias."""
    if eps <= 0:
        raise ValueError("layer_norm eps must be positive")
    f = x.shape[1]
    if gain.shape != (1, f) or bias.shape != (1, f):
        raise ValueError(f"layer_norm affine shapes {gain.shape}/{bias.shape} incompatible with {x.shape}")
    mu = x.values.mean(axis=1, keepdims=True)
    var = x.values.var(axis=1, keepdims=True)  # population variance
    inv = 1.0 / np.sqrt(var + eps)
    xhat = (x.values - mu) * inv
    out = Tensor(xhat * gain.values + bias.values,
                 x.requires_grad or gain.requires_grad or bias.requires_grad)

    def pull(g):
        _add_grad(gain, (g * xhat).sum(axis=0, keepdims=True))
        _add_grad(bias, g.sum(axis=0, keepdims=True))
        if x.requires_grad:
            dxhat = g * gain.values
            m1 = dxhat.mean(axis=1, keepdims=True)
            m2 = (dxhat * xhat).mean(axis=1, keepdims=True)
            _add_grad(x, inv * (dxhat - m1 - xhat * m2))

    _record(out, pull)
    return out


def dropout(x: Tensor, p: float, training: bool, rng=None) -> Tensor:
    """Inverted dropout: kept entries scaled by 1/(1-p). Identity at eval."""
    if not 0.0 <= p < 1.0:
        raise ValueError(f"dropout probability must be in [0, 1), got {p}")
    if not training or p == 0.0:
        return x
    if rng is None:
        raise ValueError("dropout in training mode requires an rng")
    keep = rng.random(x.shape) >= p
    factor = 1.0 / (1.0 - p)
    out = Tensor(x.values * keep * factor, x.requires_grad)

    def pull(g):
        _add_grad(x, g * keep * factor)

    _record(out, pull)
    return out


def softmax_cross_entropy(logits: Tensor, labels, mask) -> Scalar:
    """Mean negative log-softmax over masked nodes."""
    labels = np.asarray(labels, dtype=np.int64)
    mask = np.asarray(mask, dtype=bool)
    n, c = logits.shape
    if labels.shape != (n,) or mask.shape != (n,):
        raise ValueError(f"labels/mask length must equal {n} rows")
    if not mask.any():
        raise ValueError("loss mask selects no nodes")
    if labels.min() < 0 or labels.max() >= c:
        raise ValueError(f"labels must lie in [0, {c})")
    z = logits.values
    zmax = z.max(axis=1, keepdims=True)
    logsum = zmax + np.log(np.exp(z - zmax).sum(axis=1, keepdims=True))
    logp = z - logsum
    rows = np.nonzero(mask)[0]
    m = len(rows)
    out = Scalar(-logp[rows, labels[rows]].sum() / m, logits.requires_grad)

    def pull(g):
        d = np.zeros_like(z)
        d[rows] = np.exp(logp[rows])
        d[rows, labels[rows]] -= 1.0
        _add_grad(logits, (g / m) * d)

    _record(out, pull)
    return out
