"""A first look at the Meixner recurrence on a real graph.

Builds a tiny two-community graph, prints the recurrence coefficient table at
the initial shape (beta=1, c=0.5), evaluates the raw polynomial bases of the
scaled Laplacian, and cross-checks order by order against a dense
eigendecomposition. The two routes agree to ~1e-12, which is the whole point:
the sparse recurrence never touches an eigensolver but computes the same
filter.
"""

import numpy as np

from meixnernet.data import synthetic_two_cluster
from meixnernet.autodiff import Tensor
from meixnernet.filters import MeixnerParams, meixner_coeffs, meixner_basis
from meixnernet.graph import Graph, scale_laplacian, sym_normalized_laplacian
from meixnernet.model import LAPLACIAN_SCALE
from meixnernet.verify import jacobi_eigh

K = 5

bundle = synthetic_two_cluster(n_per_class=8, f=3, p_in=0.5, p_out=0.08,
                               noise=0.2, seed=42)
g = Graph.from_edge_list(bundle.num_nodes, bundle.edges)
print(f"graph: {g.num_nodes} nodes, {len(g.edges)} edges")

# --- the coefficient table -------------------------------------------------
params = MeixnerParams.initial()          # beta = 1, c = 0.5 exactly
beta, c = params.effective_values()
coeffs = meixner_coeffs(params, K)
print(f"\nrecurrence coefficients at beta={beta:g}, c={c:g}:")
print("  k    b_k      c_k")
for k in range(K):
    print(f"  {k}   {coeffs.b[k].value:5.1f}   {coeffs.cc[k].value:6.1f}")
print("b_k climbs linearly and c_k quadratically; that growth is what will")
print("blow the raw recurrence up in the stabilization demo.")

# --- recurrence vs eigendecomposition --------------------------------------
l_scaled = scale_laplacian(sym_normalized_laplacian(g), LAPLACIAN_SCALE)
x = Tensor(np.random.default_rng(0).standard_normal((g.num_nodes, 3)))
bases, _ = meixner_basis(l_scaled, x, coeffs, norms=None)

lam, u = jacobi_eigh(l_scaled.densify())
print(f"\nscaled Laplacian spectrum: [{lam[0]:.4f}, {lam[-1]:.4f}]  (inside [0, 1])")

# monic three-term recurrence applied directly to the eigenvalues
table = [np.ones_like(lam), lam - coeffs.b[0].value]
for k in range(2, K):
    table.append((lam - coeffs.b[k - 1].value) * table[k - 1]
                 - coeffs.cc[k - 1].value * table[k - 2])

print("\norder   max |recurrence - U f(Lambda) U^T X|")
for k in range(K):
    oracle = u @ (table[k][:, None] * (u.T @ x.values))
    err = np.abs(bases[k].values - oracle).max()
    print(f"  {k}     {err:.3e}")
