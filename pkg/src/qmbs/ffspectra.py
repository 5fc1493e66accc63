"""Frustration-free chain Hamiltonians and their spectra: the 3-letter
bracket chain, the 4-letter mirror gas, and chains of generic random
rank-r projectors; sparse ground/gap solvers with optional sector
restriction; the ground-space degeneracy recursion and the transfer
constraint matrices that realize it.

Basis convention: site 1 is the slowest-varying index. The 3-letter
alphabet maps (0, l, r) -> digits (0, 1, 2); the 4-letter alphabet maps
(0, a, b, g) -> digits (0, 1, 2, 3).
"""

import cmath
import math

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .chain import ChainSpec, SparseOperator, embed_local
from . import motzkin as _mz
from .randmat import RngStream, sample_haar

__all__ = [
    "ProjectorTerm",
    "RegimeReport",
    "GapResult",
    "to_projector_form",
    "build_motzkin_H",
    "motzkin_state",
    "build_d4_H",
    "good_mirror_state",
    "sector_indices",
    "ground_and_gap",
    "degeneracy_recursion",
    "generic_ff_chain",
    "ground_dim_numeric",
    "constraint_matrix",
    "kernel_step",
    "initial_gamma",
]

KERNEL_RTOL = 1e-8  # eigenvalues below KERNEL_RTOL * ||H|| count as zero


class ProjectorTerm:
    """Rank-r local projector stored by its excited-subspace vectors.

    vectors: (r, d^2) array with orthonormal rows; the projector is
    P = vectors† vectors. ambiguous marks a near-degenerate split.
    """

    def __init__(self, vectors, ambiguous=False):
        vectors = np.atleast_2d(np.asarray(vectors))
        if vectors.shape[0] and vectors.shape[1]:
            gram = vectors @ vectors.conj().T
            if np.abs(gram - np.eye(vectors.shape[0])).max() > 1e-10:
                raise ValueError("excited vectors must be orthonormal")
        self.vectors = vectors
        self.rank = vectors.shape[0] if vectors.size else 0
        self.dim = vectors.shape[1]
        self.ambiguous = ambiguous

    def projector(self):
        if self.rank == 0:
            return np.zeros((self.dim, self.dim))
        return self.vectors.conj().T @ self.vectors


def to_projector_form(h, gap_tol=1e-10):
    """Replace a Hermitian local term by the projector onto its excited space.

    The ground eigenvalue (within gap_tol of the minimum) maps to zero;
    everything above maps to the rank-r projector with the same kernel.
    A split smaller than gap_tol right at the threshold sets ambiguous.
    """
    h = np.asarray(h)
    vals, vecs = np.linalg.eigh((h + h.conj().T) / 2.0)
    scale = max(abs(vals[0]), abs(vals[-1]), 1.0)
    ground = vals <= vals[0] + gap_tol * scale
    k = int(ground.sum())
    ambiguous = k < len(vals) and vals[k] - vals[k - 1] < gap_tol * scale
    excited = vecs[:, k:].T.conj() if k < len(vals) else np.zeros((0, len(vals)))
    return ProjectorTerm(excited, ambiguous=ambiguous)


# ---------------------------------------------------------------------------
# Explicit chains
# ---------------------------------------------------------------------------

def _rank1(vec):
    v = np.asarray(vec, dtype=float)
    v = v / np.linalg.norm(v)
    return np.outer(v, v)


def _basis2(d, i, j):
    e = np.zeros(d * d)
    e[i * d + j] = 1.0
    return e


def _embed_site(diag_vec, site, n, d):
    """Single-site diagonal term I ⊗ diag(diag_vec) ⊗ I (1-based site)."""
    left = sp.identity(d ** (site - 1), format="csr")
    right = sp.identity(d ** (n - site), format="csr")
    return sp.kron(sp.kron(left, sp.diags(diag_vec)), right, format="csr")


def build_motzkin_H(n):
    """Bracket-chain Hamiltonian on n qutrits (dim 3^n, sparse).

    H = |r><r|_1 + |l><l|_n + sum_j Pi_{j,j+1} with Pi the rank-3
    projector spanned by |00>-|lr>, |0l>-|l0>, |0r>-|r0> (normalized).
    Its kernel is the uniform superposition of balanced strings.
    """
    if not (2 <= n <= 13):
        raise ValueError("supported for 2 <= n <= 13")
    d = 3
    zero, ell, arr = 0, 1, 2
    pi = (_rank1(_basis2(d, zero, zero) - _basis2(d, ell, arr))
          + _rank1(_basis2(d, zero, ell) - _basis2(d, ell, zero))
          + _rank1(_basis2(d, zero, arr) - _basis2(d, arr, zero)))
    spec = ChainSpec(n, d, L=2)
    H = sp.csr_matrix((d ** n, d ** n))
    for j in range(1, n):
        H = H + embed_local(pi, j, spec).mat
    e_r = np.zeros(d); e_r[arr] = 1.0
    e_l = np.zeros(d); e_l[ell] = 1.0
    H = H + _embed_site(e_r, 1, n, d) + _embed_site(e_l, n, n, d)
    return SparseOperator(H)


_D3_DIGIT = {"0": 0, "l": 1, "r": 2}


def _string_index(s, digits, d):
    idx = 0
    for ch in s:
        idx = idx * d + digits[ch]
    return idx


def motzkin_state(n):
    """Normalized uniform superposition of balanced bracket strings."""
    vec = np.zeros(3 ** n)
    for s in _mz.motzkin_strings(n):
        vec[_string_index(s, _D3_DIGIT, 3)] = 1.0
    return vec / np.linalg.norm(vec)


def build_d4_H(n):
    """Mirror-gas Hamiltonian on 2n ququarts (dim 4^{2n}, sparse).

    Sum of the three propagation terms (bulk of half A, bulk of half B,
    boundary pair) and the three constraint terms (no messenger at the
    outer edges, no unlike pair at the boundary). Unique zero mode: the
    uniform superposition of good mirror strings.
    """
    if not (1 <= n <= 5):
        raise ValueError("supported for 1 <= n <= 5")
    d = 4
    zero, a, b, g = 0, 1, 2, 3
    N = 2 * n

    def m_move(x):  # |0x> - |x0>
        return _rank1(_basis2(d, zero, x) - _basis2(d, x, zero))

    def c_pair(x):  # |00> - |xx>
        return _rank1(_basis2(d, zero, zero) - _basis2(d, x, x))

    minus = np.zeros(d)
    minus[zero], minus[g] = 1.0, -1.0
    minus /= np.sqrt(2.0)
    P_minus = np.outer(minus, minus)

    def occ(x):
        e = np.zeros(d)
        e[x] = 1.0
        return np.diag(e)

    moves = m_move(a) + m_move(b) + m_move(g)
    emit_right = np.kron(occ(a), P_minus) + np.kron(occ(b), P_minus)
    emit_left = np.kron(P_minus, occ(a)) + np.kron(P_minus, occ(b))
    h_bulk_A = moves + emit_right
    h_bulk_B = moves + emit_left
    h_boundary = (m_move(g) + emit_right + emit_left
                  + c_pair(a) + c_pair(b))
    # unlike pairs forbidden at the boundary
    h_boundary = h_boundary + np.diag(_basis2(d, a, b)) + np.diag(_basis2(d, b, a))

    spec = ChainSpec(N, d, L=2)
    H = sp.csr_matrix((d ** N, d ** N))
    for j in range(1, n):
        H = H + embed_local(h_bulk_A, j, spec).mat
    for j in range(n + 1, N):
        H = H + embed_local(h_bulk_B, j, spec).mat
    H = H + embed_local(h_boundary, n, spec).mat
    e_g = np.zeros(d); e_g[g] = 1.0
    H = H + _embed_site(e_g, 1, N, d) + _embed_site(e_g, N, N, d)
    return SparseOperator(H)


_D4_DIGIT = {"0": 0, "a": 1, "b": 2, "g": 3}


def good_mirror_state(n):
    """Normalized uniform superposition of good mirror strings (2n sites)."""
    from itertools import product as _product

    vec = np.zeros(4 ** (2 * n))
    for letters in _product("0abg", repeat=2 * n):
        s = "".join(letters)
        if _mz.is_good_mirror(s):
            vec[_string_index(s, _D4_DIGIT, 4)] = 1.0
    return vec / np.linalg.norm(vec)


# ---------------------------------------------------------------------------
# Ground states and gaps
# ---------------------------------------------------------------------------

def sector_indices(n, p, q):
    """Basis indices (3-letter chain) of the canonical class (p, q)."""
    dim = 3 ** n
    digits = np.zeros((dim, n), dtype=np.int8)
    idx = np.arange(dim)
    for j in range(n - 1, -1, -1):
        digits[:, j] = idx % 3
        idx = idx // 3
    pp = np.zeros(dim, dtype=np.int64)
    qq = np.zeros(dim, dtype=np.int64)
    for j in range(n):
        is_l = digits[:, j] == 1
        is_r = digits[:, j] == 2
        qq[is_l] += 1
        hit = is_r & (qq > 0)
        qq[hit] -= 1
        pp[is_r & ~hit] += 1
    return np.nonzero((pp == p) & (qq == q))[0]


class GapResult:
    """Lowest eigenpairs of a (sector-restricted) sparse Hamiltonian."""

    def __init__(self, eigenvalues, residuals, sector, dim, norm_bound):
        order = np.argsort(eigenvalues)
        self.eigenvalues = np.asarray(eigenvalues)[order]
        self.residuals = np.asarray(residuals)[order]
        self.sector = sector
        self.dim = dim
        self.norm_bound = norm_bound
        self.lam1 = float(self.eigenvalues[0])
        self.lam2 = float(self.eigenvalues[1]) if len(self.eigenvalues) > 1 else None

    @property
    def gap(self):
        return None if self.lam2 is None else self.lam2 - self.lam1


def _operator_norm_bound(H):
    """max absolute row sum, an upper bound on the spectral norm."""
    return float(np.abs(H).sum(axis=1).max())


def ground_and_gap(H, sector=None, k_eig=2, dense_cutoff=1200, maxiter=None):
    """k_eig lowest eigenvalues of H (PSD sparse), residual-checked.

    sector: optional (p, q) canonical class of the 3-letter chain; the
    Hamiltonian is then restricted to that class's basis block before
    solving. Dense solve below dense_cutoff, Lanczos (smallest
    algebraic, shift-free) above. Residuals must satisfy
    ||Hv - lam v|| <= 1e-8 ||H||.
    """
    mat = H.mat if isinstance(H, SparseOperator) else sp.csr_matrix(H)
    label = None
    if sector is not None:
        p, q = sector
        n = round(math.log(mat.shape[0]) / math.log(3))
        if 3 ** n != mat.shape[0]:
            raise ValueError("sector restriction requires a 3^n-dim operator")
        ix = sector_indices(n, p, q)
        mat = mat[ix][:, ix].tocsr()
        label = (p, q)
    dim = mat.shape[0]
    if k_eig >= dim:
        raise ValueError("k_eig must be below the (restricted) dimension")
    norm_bound = _operator_norm_bound(mat)
    if dim <= dense_cutoff:
        vals, vecs = np.linalg.eigh(mat.toarray())
        vals, vecs = vals[:k_eig], vecs[:, :k_eig]
    else:
        ncv = min(dim - 1, max(60, 6 * k_eig))
        vals, vecs = spla.eigsh(mat, k=k_eig, which="SA", ncv=ncv,
                                maxiter=maxiter or 100 * dim, tol=0)
    residuals = np.linalg.norm(mat @ vecs - vecs * vals[None, :], axis=0)
    if residuals.max() > 1e-8 * max(norm_bound, 1.0):
        raise RuntimeError(f"eigensolver residual too large: {residuals.max():g}")
    return GapResult(vals, residuals, label, dim, norm_bound)


# ---------------------------------------------------------------------------
# Degeneracy recursion and regimes
# ---------------------------------------------------------------------------

class RegimeReport:
    """Ground-space dimensions D_n and the (d, r) regime up to length N."""

    def __init__(self, d, r, D, f, g, regime):
        self.d, self.r = d, r
        self.D = D
        self.f, self.g = f, g
        self.regime = regime

    def closed_form(self, n):
        """D_n from the characteristic roots (float/complex-safe)."""
        f, g = self.f, self.g
        if abs(f - g) < 1e-12:
            return (self.d / 2.0) ** n * (n + 1)
        val = (f ** (n + 1) - g ** (n + 1)) / (f - g)
        return val.real if isinstance(val, complex) else val


def degeneracy_recursion(N, d, r):
    """Exact D_n = d·D_{n-1} - r·D_{n-2} (D_0=1, D_1=d) and the regime.

    frustrated: some D_n < 0 for n <= N (no zero modes at that size);
    ff_product: r < d (zero modes exist, product states among them);
    ff_entangled: d <= r <= d^2/4 (zero modes, all entangled).
    """
    if d < 2 or not (1 <= r <= d * d):
        raise ValueError("need d >= 2 and 1 <= r <= d^2")
    D = [1, d]
    for _ in range(2, N + 1):
        D.append(d * D[-1] - r * D[-2])
    disc = d * d - 4 * r
    root = math.sqrt(disc) if disc >= 0 else cmath.sqrt(disc)
    f, g = (d + root) / 2.0, (d - root) / 2.0
    if any(x < 0 for x in D):
        regime = "frustrated"
    elif r < d:
        regime = "ff_product"
    else:
        regime = "ff_entangled"
    return RegimeReport(d, r, D[:N + 1], f, g, regime)


def generic_ff_chain(N, d, r, seed=0, weights=None):
    """Chain of independent Haar-random rank-r bond projectors (sparse).

    weights: optional positive per-bond coefficients (default 1); the
    kernel must not depend on them.
    """
    if d ** N > 5 * 10 ** 5:
        raise ValueError("dimension d^N exceeds 5e5")
    if not (1 <= r <= d * d):
        raise ValueError("need 1 <= r <= d^2")
    rng = RngStream(seed)
    spec = ChainSpec(N, d, L=2)
    if weights is None:
        weights = np.ones(N - 1)
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (N - 1,) or weights.min() <= 0:
        raise ValueError("need N-1 positive bond weights")
    H = sp.csr_matrix((d ** N, d ** N))
    for j in range(1, N):
        q = sample_haar(d * d, beta=1, rng=rng.substream(j))
        proj = ProjectorTerm(q[:r]).projector()
        H = H + weights[j - 1] * embed_local(proj, j, spec).mat
    return SparseOperator(H)


def ground_dim_numeric(H):
    """Dimension of the numeric kernel: eigenvalues < 1e-8 ||H||."""
    mat = H.mat if isinstance(H, SparseOperator) else sp.csr_matrix(H)
    dim = mat.shape[0]
    thresh = KERNEL_RTOL * max(_operator_norm_bound(mat), 1.0)
    if dim <= 5000:
        vals = np.linalg.eigvalsh(mat.toarray())
        return int((vals < thresh).sum())
    k = 40
    while True:
        vals = spla.eigsh(mat, k=min(k, dim - 2), which="SA",
                          return_eigenvectors=False)
        below = int((vals < thresh).sum())
        if below < len(vals) or k >= dim - 2:
            return below
        k *= 2


# ---------------------------------------------------------------------------
# Transfer constraint matrices
# ---------------------------------------------------------------------------

def initial_gamma(d):
    """Level-1 solution tensor: shape (D_0, d, D_1) = (1, d, d) identity."""
    return np.eye(d)[None, :, :]


def constraint_matrix(gamma, vs):
    """Linear system for extending ground states by one site.

    gamma: (D_{n-1}, d, D_n) solution tensor of the length-n kernel;
    vs: (r, d, d) excited vectors of the new bond as d×d matrices
    v[p][j, i] (j = last old site, i = new site). Returns C of shape
    (r·D_{n-1}, d·D_n): rows are the annihilation constraints, columns
    index the (old solution, new letter) coefficients.
    """
    gamma = np.asarray(gamma)
    vs = np.asarray(vs)
    if gamma.ndim != 3 or vs.ndim != 3 or vs.shape[1] != vs.shape[2]:
        raise ValueError("gamma must be (D_prev, d, D_cur), vs (r, d, d)")
    d = vs.shape[1]
    if gamma.shape[1] != d:
        raise ValueError("letter dimensions of gamma and vs disagree")
    C = np.einsum("pji,bja->pbai", vs.conj(), gamma)
    r, D_prev = vs.shape[0], gamma.shape[0]
    return C.reshape(r * D_prev, gamma.shape[2] * d)


def kernel_step(C, d, rtol=1e-10):
    """Orthonormal kernel basis of C reshaped to the next solution tensor.

    Input C of shape (r·D_{n-1}, d·D_n) with columns ordered (a, i) for
    old solution a and new letter i; output gamma of shape
    (D_n, d, D_{n+1}). Raises if the singular spectrum has no clean
    rank cut at rtol.
    """
    C = np.asarray(C)
    cols = C.shape[1]
    if cols % d != 0:
        raise ValueError("column count must be divisible by d")
    _, s, vh = np.linalg.svd(C, full_matrices=True)
    cutoff = rtol * (s[0] if s.size else 1.0)
    rank = int((s > cutoff).sum())
    if rank and s[rank - 1] < 1e3 * cutoff:
        raise RuntimeError("ambiguous numerical rank in constraint matrix")
    kernel = vh[rank:].conj().T  # (cols, cols - rank), orthonormal columns
    return kernel.reshape(cols // d, d, kernel.shape[1])
