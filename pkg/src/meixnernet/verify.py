"""Self-contained verification suites: gradient check, eigendecomposition
equivalence, orthogonality, and the stabilization scan.

Each suite returns (check_name, passed, detail) triples so the CLI can print
one line per check. The eigendecomposition oracle deliberately avoids the
production code path: a hand-rolled cyclic Jacobi solver diagonalizes the
densified Laplacian and the polynomial is applied to eigenvalues directly.
"""

from __future__ import annotations

import math

import numpy as np

from . import autodiff as ad
from .autodiff import Scalar, Tape, Tensor
from .data import synthetic_two_cluster
from .filters import (LAYERNORM_EPS, MeixnerParams, RecurrenceCoeffs,
                      _monic_meixner_table, chebyshev_basis, meixner_basis,
                      meixner_coeffs, meixner_orthogonality_check)
from .graph import Graph, scale_laplacian, sym_normalized_laplacian, chebyshev_rescale
from .model import LAPLACIAN_SCALE, CHEB_LAMBDA_MAX, MEIXNER, build_net, laplacian_for
from .rng import DATA, stream

GRADCHECK_REL_TOL = 1e-4
FD_STEP = 1e-6
# relative-error denominator floor: grads below this magnitude are compared
# absolutely, keeping finite-difference roundoff (~1e-10) from dominating
REL_FLOOR = 1e-4


def jacobi_eigh(a: np.ndarray, tol: float = 1e-12, max_sweeps: int = 100):
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns (eigenvalues ascending, eigenvectors as columns). Independent of
    numpy's LAPACK path on purpose; meant for small oracle matrices.
    """
    a = np.array(a, dtype=np.float64)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError(f"matrix must be square, got {a.shape}")
    if not np.allclose(a, a.T, atol=1e-12):
        raise ValueError("matrix must be symmetric")
    v = np.eye(n)
    for _ in range(max_sweeps):
        off = math.sqrt(float(np.sum(np.tril(a, -1) ** 2)))
        if off <= tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= tol / max(n, 1):
                    continue
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = (1.0 if tau >= 0 else -1.0) / (abs(tau) + math.hypot(1.0, tau))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                rot_p = c * a[:, p] - s * a[:, q]
                rot_q = s * a[:, p] + c * a[:, q]
                a[:, p], a[:, q] = rot_p, rot_q
                rot_p = c * a[p, :] - s * a[q, :]
                rot_q = s * a[p, :] + c * a[q, :]
                a[p, :], a[q, :] = rot_p, rot_q
                rot_p = c * v[:, p] - s * v[:, q]
                rot_q = s * v[:, p] + c * v[:, q]
                v[:, p], v[:, q] = rot_p, rot_q
    lam = np.diag(a).copy()
    order = np.argsort(lam)
    return lam[order], v[:, order]


def _random_graph(rng, n: int, p: float = 0.35) -> Graph:
    draws = rng.random((n, n))
    u, v = np.nonzero(np.triu(draws < p, k=1))
    return Graph.from_edge_list(n, np.column_stack([u, v]))


# ---------------------------------------------------------------------------
# gradient check


def _gradcheck_fixture():
    """Fixed small problem: N=12, F=5, hidden=4, C=3, K=3."""
    rng = stream(123, DATA)
    g = _random_graph(rng, 12)
    x = Tensor(rng.standard_normal((12, 5)))
    labels = np.array([0, 1, 2, 0, 1, 2, 0, 1, 2, 0, 1, 2], dtype=np.int64)
    mask = np.zeros(12, dtype=bool)
    mask[:8] = True
    net = build_net(MEIXNER, 5, 4, 3, k_terms=3, seed=11)
    op = laplacian_for(MEIXNER, g)
    return net, op, x, labels, mask


def _loss_value(net, op, x, labels, mask) -> float:
    logits = net.forward(op, x, training=False)
    return ad.softmax_cross_entropy(logits, labels, mask).value


def suite_gradcheck():
    """Analytic gradients vs central finite differences, every parameter."""
    net, op, x, labels, mask = _gradcheck_fixture()
    with Tape() as tape:
        logits = net.forward(op, x, training=False)
        loss = ad.softmax_cross_entropy(logits, labels, mask)
    for _, node, _ in net.parameter_specs():
        node.zero_grad()
    ad.backward(loss, tape)

    checks = []
    h = FD_STEP
    for name, node, _ in net.parameter_specs():
        if isinstance(node, Tensor):
            analytic = node.grad if node.grad is not None else np.zeros_like(node.values)
            worst = 0.0
            flat = node.values.ravel()
            for i in range(flat.size):
                keep = flat[i]
                flat[i] = keep + h
                up = _loss_value(net, op, x, labels, mask)
                flat[i] = keep - h
                down = _loss_value(net, op, x, labels, mask)
                flat[i] = keep
                fd = (up - down) / (2.0 * h)
                a = analytic.ravel()[i]
                worst = max(worst, abs(a - fd) / max(abs(a), abs(fd), REL_FLOOR))
        else:
            a = node.grad if node.grad is not None else 0.0
            keep = node.value
            node.value = keep + h
            up = _loss_value(net, op, x, labels, mask)
            node.value = keep - h
            down = _loss_value(net, op, x, labels, mask)
            node.value = keep
            fd = (up - down) / (2.0 * h)
            worst = abs(a - fd) / max(abs(a), abs(fd), REL_FLOOR)
        checks.append((name, worst < GRADCHECK_REL_TOL, f"max rel err {worst:.3e}"))
    return checks


# ---------------------------------------------------------------------------
# eigendecomposition equivalence


def _coeffs_for(beta: float, c: float, k_terms: int, perturb: float = 0.0) -> RecurrenceCoeffs:
    coeffs = meixner_coeffs(MeixnerParams.from_effective(beta, c), k_terms)
    if perturb:
        coeffs = RecurrenceCoeffs(b=[Scalar(s.value + perturb) for s in coeffs.b],
                                  cc=[Scalar(s.value) for s in coeffs.cc])
    return coeffs


def suite_eigen(coeff_perturbation: float = 0.0):
    """Sparse recurrence vs U f(Lambda) U^T X on 20 random graphs, N <= 16.

    ``coeff_perturbation`` shifts the recurrence's b_k (never the oracle's);
    any nonzero value must make the Meixner checks fail.
    """
    rng = stream(2024, DATA)
    k_terms = 6
    shapes = [(1.0, 0.5), (2.0, 0.3)]
    worst_meixner = 0.0
    worst_cheby = 0.0
    for _ in range(20):
        n = int(rng.integers(4, 17))
        g = _random_graph(rng, n)
        x = Tensor(rng.standard_normal((n, 3)))

        l_scaled = scale_laplacian(sym_normalized_laplacian(g), LAPLACIAN_SCALE)
        lam, u = jacobi_eigh(l_scaled.densify())
        for beta, c in shapes:
            coeffs = _coeffs_for(beta, c, k_terms, coeff_perturbation)
            bases, _ = meixner_basis(l_scaled, x, coeffs, norms=None)
            table = _monic_meixner_table(lam, k_terms - 1, beta, c)
            for k in range(k_terms):
                oracle = u @ (table[k][:, None] * (u.T @ x.values))
                worst_meixner = max(worst_meixner,
                                    float(np.abs(bases[k].values - oracle).max()))

        l_hat = chebyshev_rescale(sym_normalized_laplacian(g), CHEB_LAMBDA_MAX)
        lam, u = jacobi_eigh(l_hat.densify())
        theta = np.arccos(np.clip(lam, -1.0, 1.0))
        bases = chebyshev_basis(l_hat, x, k_terms)
        for k in range(k_terms):
            oracle = u @ (np.cos(k * theta)[:, None] * (u.T @ x.values))
            worst_cheby = max(worst_cheby,
                              float(np.abs(bases[k].values - oracle).max()))
    return [
        ("meixner_recurrence_vs_eigh", worst_meixner < 1e-8, f"max abs err {worst_meixner:.3e}"),
        ("chebyshev_recurrence_vs_cos", worst_cheby < 1e-10, f"max abs err {worst_cheby:.3e}"),
    ]


# ---------------------------------------------------------------------------
# orthogonality


def suite_ortho():
    """Normalized cross-sums < 1e-6 for 0 <= j < k <= 5 at two shape settings."""
    checks = []
    for beta, c in [(1.0, 0.5), (2.0, 0.3)]:
        worst = 0.0
        for k in range(6):
            for j in range(k):
                worst = max(worst, meixner_orthogonality_check(beta, c, k, j, support=300))
        checks.append((f"cross_terms_beta{beta:g}_c{c:g}", worst < 1e-6,
                       f"max normalized cross-sum {worst:.3e}"))
        diag = meixner_orthogonality_check(beta, c, 3, 3, support=300)
        checks.append((f"self_term_beta{beta:g}_c{c:g}", diag == 1.0, f"value {diag!r}"))
    return checks


# ---------------------------------------------------------------------------
# stabilization


def suite_stability():
    """Normalized K=8 forward stays unit-scale; raw recurrence on the
    unscaled Laplacian blows up by >= 1e3 between K=2 and K=8."""
    bundle = synthetic_two_cluster(n_per_class=100, f=16, p_in=0.05, p_out=0.01,
                                   noise=1.0, seed=0)
    g = Graph.from_edge_list(bundle.num_nodes, bundle.edges)
    x = Tensor(bundle.features)
    params = MeixnerParams.initial()
    checks = []

    l_scaled = scale_laplacian(sym_normalized_laplacian(g), LAPLACIAN_SCALE)
    coeffs = meixner_coeffs(params, 8)
    gain = Tensor(np.ones((1, 16)))
    bias = Tensor(np.zeros((1, 16)))
    bases, _ = meixner_basis(l_scaled, x, coeffs, norms=[(gain, bias)] * 8,
                             eps=LAYERNORM_EPS)
    finite = all(np.isfinite(t.values).all() for t in bases)
    checks.append(("normalized_k8_finite", finite, "all 8 bases finite"))
    var_lo = min(float(np.var(t.values, axis=1).min()) for t in bases)
    var_hi = max(float(np.var(t.values, axis=1).max()) for t in bases)
    checks.append(("normalized_k8_row_variance", 0.9 <= var_lo and var_hi <= 1.1,
                   f"per-row variance in [{var_lo:.4f}, {var_hi:.4f}]"))

    l_raw = sym_normalized_laplacian(g)
    _, diag8 = meixner_basis(l_raw, x, meixner_coeffs(params, 8), norms=None)
    _, diag2 = meixner_basis(l_raw, x, meixner_coeffs(params, 2), norms=None)
    mag8 = max(diag8.max_abs)
    mag2 = max(diag2.max_abs)
    ratio = mag8 / mag2 if mag2 > 0 else math.inf
    checks.append(("raw_growth_ratio", ratio >= 1e3,
                   f"K=8 max magnitude {mag8:.3e} vs K=2 {mag2:.3e} (ratio {ratio:.3e})"))
    return checks


SUITES = {
    "gradcheck": suite_gradcheck,
    "eigen": suite_eigen,
    "ortho": suite_ortho,
    "stability": suite_stability,
}


def run_suites(names=None, coeff_perturbation: float = 0.0):
    """Run the named suites (all by default) -> {suite: [(check, ok, detail)]}."""
    names = list(SUITES) if names is None else list(names)
    results = {}
    for name in names:
        if name not in SUITES:
            raise ValueError(f"unknown suite: {name!r} (choose from {', '.join(SUITES)})")
        if name == "eigen":
            results[name] = suite_eigen(coeff_perturbation)
        else:
            results[name] = SUITES[name]()
    return results
