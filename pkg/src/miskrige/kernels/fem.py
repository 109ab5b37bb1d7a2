"""Lagrange finite-element kernel on the unit interval.

The kernel of the generalized eigenexpansion sum_i (1 + lambda_i)^{-1}
psi_i(x) psi_i(y), with (lambda_i, psi_i) the stiffness-mass eigenpairs of
the mesh, is evaluated without any eigensolve through the algebraic identity

    K(x, y) = B(x)^T (M + A)^{-1} B(y),

where B(x) collects the nodal basis values at x.  M + A is the sparse
precision matrix of the model: symmetric positive definite and banded with
2p+1 nodal diagonals, so evaluation costs one banded triangular solve.  The
eigen-expansion itself is kept available (``fem_eigendecompose``) as an
independent oracle.
"""

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.linalg import cho_solve_banded, cholesky_banded, eigh

from .base import Kernel, FemSpec, as_coords, mirror_upper


def element_mass(p, h):
    """Exact element mass matrix of degree-p Lagrange basis on a length-h cell."""
    if p == 1:
        return h / 6.0 * np.array([[2.0, 1.0], [1.0, 2.0]])
    return h / 30.0 * np.array([[4.0, 2.0, -1.0], [2.0, 16.0, 2.0], [-1.0, 2.0, 4.0]])


def element_stiffness(p, h):
    """Exact element stiffness matrix of degree-p Lagrange basis on a length-h cell."""
    if p == 1:
        return 1.0 / h * np.array([[1.0, -1.0], [-1.0, 1.0]])
    return 1.0 / (3.0 * h) * np.array(
        [[7.0, -8.0, 1.0], [-8.0, 16.0, -8.0], [1.0, -8.0, 7.0]]
    )


@dataclass(frozen=True)
class FemAssembly:
    """Mesh, exact mass/stiffness matrices, and the factored precision Q = M + A."""

    N: int
    p: int
    nodes: np.ndarray
    mass: sparse.csr_matrix
    stiffness: sparse.csr_matrix
    precision: sparse.csr_matrix
    cho: np.ndarray  # banded Cholesky factor of Q (upper form)
    bandwidth: int   # number of nonzero diagonals of Q

    @property
    def dim(self):
        return self.N * self.p + 1

    def solve(self, B):
        return cho_solve_banded((self.cho, False), B)


def fem_assemble(N, p=1):
    """Assemble exact mass and stiffness on the uniform N-cell mesh of (0, 1)."""
    spec = FemSpec(N=N, p=p)  # validates N, p
    N, p = spec.N, spec.p
    dim = N * p + 1
    nodes = np.arange(dim) / (N * p)
    h = 1.0 / N
    me = element_mass(p, h)
    ke = element_stiffness(p, h)
    local = p + 1
    rows = np.empty(N * local * local, dtype=np.int64)
    cols = np.empty_like(rows)
    mv = np.empty(len(rows))
    av = np.empty(len(rows))
    pos = 0
    for e in range(N):
        g = p * e + np.arange(local)
        for a in range(local):
            for b in range(local):
                rows[pos] = g[a]
                cols[pos] = g[b]
                mv[pos] = me[a, b]
                av[pos] = ke[a, b]
                pos += 1
    M = sparse.csr_matrix((mv, (rows, cols)), shape=(dim, dim))
    A = sparse.csr_matrix((av, (rows, cols)), shape=(dim, dim))
    Q = (M + A).tocsr()

    halfwidth = p
    ab = np.zeros((halfwidth + 1, dim))
    Qd = Q.todia()
    for off, data in zip(Qd.offsets, Qd.data):
        if off >= 0:
            ab[halfwidth - off, :] = data
    try:
        cho = cholesky_banded(ab, lower=False)
    except np.linalg.LinAlgError as exc:  # Q is provably SPD; reaching this is a bug
        raise RuntimeError("precision matrix failed its SPD factorization; assembly bug") from exc
    coo = Q.tocoo()
    bandwidth = 2 * int(np.max(np.abs(coo.row - coo.col))) + 1
    nodes.setflags(write=False)
    return FemAssembly(
        N=N, p=p, nodes=nodes, mass=M, stiffness=A, precision=Q, cho=cho, bandwidth=bandwidth
    )


def fem_basis_matrix(assembly, X):
    """Sparse matrix of nodal basis evaluations, one row per query point."""
    x = as_coords(X)
    if np.any(x < 0.0) or np.any(x > 1.0):
        raise ValueError("finite-element kernel arguments must lie in [0, 1]")
    N, p = assembly.N, assembly.p
    e = np.minimum(np.floor(x * N).astype(np.int64), N - 1)
    t = x * N - e
    if p == 1:
        vals = np.column_stack([1.0 - t, t])
        cols = np.column_stack([e, e + 1])
    else:
        vals = np.column_stack([(2.0 * t - 1.0) * (t - 1.0), 4.0 * t * (1.0 - t), t * (2.0 * t - 1.0)])
        cols = np.column_stack([2 * e, 2 * e + 1, 2 * e + 2])
    rows = np.repeat(np.arange(len(x)), p + 1)
    return sparse.csr_matrix((vals.ravel(), (rows, cols.ravel())), shape=(len(x), assembly.dim))


def fem_eigendecompose(assembly, count=None):
    """Generalized eigenpairs A v = lambda M v, ascending, M-orthonormal vectors.

    The lowest eigenvalue is zero with the constant eigenvector (the natural
    boundary condition keeps constants in the stiffness kernel).  Dense
    solve; intended for moderate meshes and as the oracle for the kernel's
    precision-based evaluation.
    """
    if count is None:
        count = assembly.dim
    if count > assembly.dim:
        raise ValueError("cannot request more eigenpairs than the space dimension")
    lams, vecs = eigh(assembly.stiffness.toarray(), assembly.mass.toarray())
    return lams[:count], vecs[:, :count]


class FemKernel(Kernel):
    def __init__(self, spec):
        if not isinstance(spec, FemSpec):
            raise TypeError("FemKernel requires a FemSpec")
        self.spec = spec
        self.assembly = fem_assemble(spec.N, spec.p)

    def eval(self, x, y):
        return float(self.matrix([float(as_coords(x)[0])], [float(as_coords(y)[0])])[0, 0])

    def matrix(self, X, Y=None):
        BX = fem_basis_matrix(self.assembly, X)
        BY = BX if Y is None else fem_basis_matrix(self.assembly, Y)
        Z = self.assembly.solve(np.asarray(BY.T.todense()))
        K = BX @ Z
        return mirror_upper(K) if Y is None else K

    def diag(self, X):
        BX = fem_basis_matrix(self.assembly, X)
        Z = self.assembly.solve(np.asarray(BX.T.todense()))
        return np.einsum("ij,ji->i", BX.toarray(), Z)
