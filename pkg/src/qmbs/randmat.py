"""Seed-deterministic sampling of random matrices and eigenvalue statistics.

Provides Haar-distributed orthogonal/unitary matrices, Wishart / GOE /
binary-spectrum local terms, uniform permutations, and moment/cumulant
summaries of eigenvalue samples.
"""

import numpy as np

__all__ = [
    "RngStream",
    "MomentSummary",
    "sample_haar",
    "sample_gaussian_matrix",
    "sample_local_term",
    "sample_permutation",
    "eigvals_sym",
    "moment_summary",
    "haar_q4_expectation",
]

VALID_BETAS = (1, 2)


class RngStream:
    """A splittable random stream keyed by (master_seed, stream_index).

    Equal keys reproduce identical sequences; distinct stream indices give
    statistically independent streams (SeedSequence spawn-key derivation).
    """

    def __init__(self, master_seed, stream_index=0):
        if stream_index < 0:
            raise ValueError("stream_index must be nonnegative")
        self.master_seed = int(master_seed)
        self.stream_index = int(stream_index)
        seq = np.random.SeedSequence(self.master_seed,
                                     spawn_key=(self.stream_index,))
        self.gen = np.random.Generator(np.random.PCG64(seq))

    def substream(self, index):
        """Derive an independent child stream; deterministic in (seed, index)."""
        seq = np.random.SeedSequence(self.master_seed,
                                     spawn_key=(self.stream_index, int(index)))
        child = RngStream.__new__(RngStream)
        child.master_seed = self.master_seed
        child.stream_index = self.stream_index
        child.gen = np.random.Generator(np.random.PCG64(seq))
        return child


def _check_beta(beta):
    if beta not in VALID_BETAS:
        raise ValueError(f"beta must be 1 (real) or 2 (complex), got {beta!r}")


def sample_gaussian_matrix(rows, cols, beta, rng):
    """Standard Gaussian matrix; complex entries (unit variance) for beta=2."""
    _check_beta(beta)
    g = rng.gen.standard_normal((rows, cols))
    if beta == 2:
        g = (g + 1j * rng.gen.standard_normal((rows, cols))) / np.sqrt(2.0)
    return g


def sample_haar(m, beta, rng, size=None):
    """Haar-distributed orthogonal (beta=1) or unitary (beta=2) matrix.

    QR decomposition of a Gaussian matrix with the R diagonal sign/phase
    absorbed into Q, which makes the factorization unique and the resulting
    Q exactly Haar distributed. With ``size`` set, returns a stacked batch
    of shape (size, m, m).
    """
    _check_beta(beta)
    if m < 1:
        raise ValueError("matrix size must be >= 1")
    shape = (m, m) if size is None else (size, m, m)
    g = rng.gen.standard_normal(shape)
    if beta == 2:
        g = g + 1j * rng.gen.standard_normal(shape)
    q, r = np.linalg.qr(g)
    d = np.diagonal(r, axis1=-2, axis2=-1)
    phase = d / np.abs(d)
    q = q * phase.conj()[..., None, :]
    return q


def sample_permutation(m, rng):
    """Uniformly random permutation of {0..m-1} (Fisher–Yates)."""
    if m < 1:
        raise ValueError("m must be >= 1")
    return rng.gen.permutation(m)


def sample_local_term(kind, d, rng, r=None, beta=1, eigenvalues=None,
                      matrix=None):
    """Hermitian d^2 x d^2 local interaction term.

    kind: one of 'wishart' (rank r PSD), 'goe' (symmetrized Gaussian),
    'binary_pm' (Haar eigenvectors, eigenvalues ±1), 'haar_eigs' (Haar
    eigenvectors with prescribed eigenvalues), 'explicit' (fixed matrix).
    """
    _check_beta(beta)
    n = d * d
    if kind == "wishart":
        if r is None or not (1 <= r <= n):
            raise ValueError("wishart rank must satisfy 1 <= r <= d^2")
        w = sample_gaussian_matrix(r, n, beta, rng)
        return w.conj().T @ w
    if kind == "goe":
        g = rng.gen.standard_normal((n, n))
        return (g + g.T) / 2.0
    if kind == "binary_pm":
        q = sample_haar(n, beta, rng)
        lam = rng.gen.choice([-1.0, 1.0], size=n)
        return (q.conj().T * lam) @ q
    if kind == "haar_eigs":
        lam = np.asarray(eigenvalues, dtype=float)
        if lam.shape != (n,):
            raise ValueError("need d^2 eigenvalues")
        q = sample_haar(n, beta, rng)
        return (q.conj().T * lam) @ q
    if kind == "explicit":
        h = np.asarray(matrix)
        if h.shape != (n, n):
            raise ValueError("explicit matrix has wrong shape")
        return h
    raise ValueError(f"unknown local term kind {kind!r}")


def eigvals_sym(mat):
    """Ascending eigenvalues of a Hermitian matrix.

    Rejects matrices whose anti-Hermitian part exceeds 1e-10 (relative),
    then symmetrizes to absorb roundoff before the decomposition.
    """
    mat = np.asarray(mat)
    scale = max(np.abs(mat).max(), 1.0)
    if np.abs(mat - mat.conj().T).max() > 1e-10 * scale:
        raise ValueError("matrix is not Hermitian")
    return np.linalg.eigvalsh((mat + mat.conj().T) / 2.0)


class MomentSummary:
    """Raw moments m1..m4, cumulants k1..k4, and shape statistics.

    gamma2 is the excess kurtosis k4/sigma^4. For (near-)degenerate samples
    sigma2 == 0, skewness/kurtosis are flagged undefined (NaN + flag).
    """

    def __init__(self, m1, m2, m3, m4, count):
        self.m1, self.m2, self.m3, self.m4 = m1, m2, m3, m4
        self.count = count
        self.k1 = m1
        self.k2 = m2 - m1 ** 2
        self.k3 = m3 - 3 * m2 * m1 + 2 * m1 ** 3
        self.k4 = (m4 - 4 * m3 * m1 - 3 * m2 ** 2
                   + 12 * m2 * m1 ** 2 - 6 * m1 ** 4)
        self.mean = self.k1
        self.variance = self.k2
        scale = max(abs(m2), 1e-300)
        self.degenerate = self.k2 <= 1e-14 * scale or self.k2 ** 2 == 0.0
        if self.degenerate:
            self.skewness = np.nan
            self.gamma2 = np.nan
        else:
            self.skewness = self.k3 / self.k2 ** 1.5
            self.gamma2 = self.k4 / self.k2 ** 2

    @classmethod
    def from_raw_moments(cls, m1, m2, m3, m4, count=0):
        return cls(m1, m2, m3, m4, count)

    def __repr__(self):
        return (f"MomentSummary(mean={self.mean:.6g}, var={self.variance:.6g},"
                f" skew={self.skewness:.6g}, gamma2={self.gamma2:.6g})")


def moment_summary(samples, weights=None):
    """MomentSummary of a sample pool (optionally weighted)."""
    x = np.asarray(samples, dtype=float).ravel()
    if x.size < 2:
        raise ValueError("need at least 2 samples")
    if weights is None:
        w = np.full(x.size, 1.0 / x.size)
    else:
        w = np.asarray(weights, dtype=float).ravel()
        w = w / w.sum()
    moments = [float(np.dot(w, x ** j)) for j in range(1, 5)]
    return MomentSummary(*moments, count=x.size)


def haar_q4_expectation(m, beta):
    """E|q_ij|^4 for an m x m Haar matrix: (beta+2)/(m(m*beta+2))."""
    _check_beta(beta)
    if m < 1:
        raise ValueError("m must be >= 1")
    return (beta + 2) / (m * (m * beta + 2))
