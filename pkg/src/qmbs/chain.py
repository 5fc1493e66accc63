"""Spin-chain assembly: embedding local terms, odd/even layer splitting,
and the structured eigenvector matrix of the quantum problem.

Tensor convention: site 1 is the slowest-varying index (leftmost kron
factor). Local eigenvector matrices follow the numpy convention (columns
are eigenvectors), so a local term decomposes as h = Q diag(lam) Q†.
In the basis that diagonalizes the odd layer, the full chain becomes
diag(A) + Q_q diag(B) Q_q† with Q_q = (Q_q^(odd))† Q_q^(even).
"""

import numpy as np
import scipy.sparse as sp

__all__ = [
    "ChainSpec",
    "SparseOperator",
    "embed_local",
    "split_odd_even",
    "assemble_AB",
    "build_Qq",
    "layer_multiplicities",
]


class ChainSpec:
    """Geometry of an open chain of N qudits with range-L interactions."""

    def __init__(self, N, d, L=2, beta=1, seed=0):
        if N < 2 or d < 2:
            raise ValueError("need N >= 2 and d >= 2")
        if L > N:
            raise ValueError("interaction range exceeds chain length")
        if beta not in (1, 2):
            raise ValueError("beta must be 1 or 2")
        self.N, self.d, self.L, self.beta, self.seed = N, d, L, beta, seed
        self.m = d ** N

    @property
    def n_terms(self):
        return self.N - self.L + 1


class SparseOperator:
    """Immutable Hermitian sparse operator (CSR storage)."""

    def __init__(self, mat):
        mat = sp.csr_matrix(mat)
        mat.sum_duplicates()
        self.mat = mat
        self.dim = mat.shape[0]

    @property
    def nnz(self):
        return self.mat.nnz

    def to_dense(self):
        return self.mat.toarray()

    def __add__(self, other):
        return SparseOperator(self.mat + other.mat)


def embed_local(h, l, spec):
    """I ⊗ h ⊗ I with h acting on sites l..l+L-1 (1-based)."""
    d, N, L = spec.d, spec.N, spec.L
    h = np.asarray(h)
    if h.shape != (d ** L, d ** L):
        raise ValueError("local term has wrong dimension")
    if not (1 <= l <= N - L + 1):
        raise ValueError("site index out of range")
    left = sp.identity(d ** (l - 1), format="csr")
    right = sp.identity(d ** (N - l - L + 1), format="csr")
    return SparseOperator(sp.kron(sp.kron(left, sp.csr_matrix(h)), right))


def split_odd_even(terms, spec):
    """Sum nearest-neighbor terms into the two commuting layers.

    terms: iterable of (l, h_l) with l = 1..N-1. Returns (H_odd, H_even)
    where the odd layer collects l = 1,3,5,... .
    """
    m = spec.m
    H_odd = sp.csr_matrix((m, m))
    H_even = sp.csr_matrix((m, m))
    for l, h in terms:
        emb = embed_local(h, l, spec).mat
        if l % 2 == 1:
            H_odd = H_odd + emb
        else:
            H_even = H_even + emb
    return SparseOperator(H_odd), SparseOperator(H_even)


def layer_multiplicities(spec):
    """Eigenvalue multiplicities of the (odd, even) layer direct sums.

    For N odd both layers leave one site untouched (multiplicity d each);
    for N even the odd layer covers every site (multiplicity 1) and the
    even layer leaves both boundary sites untouched (multiplicity d^2).
    """
    d = spec.d
    if spec.N % 2 == 1:
        return d, d
    return 1, d * d


def _layer_sites(spec):
    """1-based left sites of the odd-layer and even-layer terms."""
    odd = list(range(1, spec.N, 2))
    even = list(range(2, spec.N, 2))
    return odd, even


def assemble_AB(lams, spec):
    """Diagonal vectors A, B of the odd/even layers in their eigenbases.

    lams: dict or list mapping l -> length-d^2 eigenvalue array of the term
    at bond l. The vectors are the direct-sum spectra
    A = sum_{l odd} 1 ⊗ lam_l ⊗ 1 and likewise B over even bonds.
    """
    d, N, m = spec.d, spec.N, spec.m
    if not isinstance(lams, dict):
        lams = {l: lam for l, lam in lams}
    out = []
    for parity in (1, 0):
        vec = np.zeros(m)
        for l, lam in lams.items():
            if l % 2 != parity:
                continue
            lam = np.asarray(lam, dtype=float)
            if lam.shape != (d * d,):
                raise ValueError("each eigenvalue block must have d^2 entries")
            block = np.kron(np.kron(np.ones(d ** (l - 1)), lam),
                            np.ones(d ** (N - l - 1)))
            vec = vec + block
        out.append(vec)
    return out[0], out[1]


def _kron_all(mats):
    out = np.array([[1.0]])
    for m in mats:
        out = np.kron(out, m)
    return out


def build_Qq(Q_odd, Q_even, spec):
    """Structured eigenvector matrix Q_q = (Q_q^(odd))† Q_q^(even).

    Q_odd / Q_even: lists of d^2 x d^2 local eigenvector matrices for the
    odd-layer and even-layer bonds in left-to-right order. The placement
    depends on the parity of N: for N odd,
    Q^(odd) = (⊗ Q_odd) ⊗ I_d and Q^(even) = I_d ⊗ (⊗ Q_even);
    for N even, Q^(odd) = ⊗ Q_odd and Q^(even) = I_d ⊗ (⊗ Q_even) ⊗ I_d.
    """
    d, N = spec.d, spec.N
    odd_sites, even_sites = _layer_sites(spec)
    if len(Q_odd) != len(odd_sites) or len(Q_even) != len(even_sites):
        raise ValueError("wrong number of local eigenvector matrices")
    for q in list(Q_odd) + list(Q_even):
        if np.shape(q) != (d * d, d * d):
            raise ValueError("each local eigenvector matrix must be d^2 x d^2")
    eye = np.eye(d)
    if N % 2 == 1:
        QA = np.kron(_kron_all(Q_odd), eye)
        QB = np.kron(eye, _kron_all(Q_even))
    else:
        QA = _kron_all(Q_odd)
        QB = np.kron(np.kron(eye, _kron_all(Q_even)), eye)
    return QA.conj().T @ QB
