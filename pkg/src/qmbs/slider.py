"""Isotropic-entanglement slider for sums of local random-matrix terms.

Compares three ensembles built from the same local eigenvalues: classical
(permutation-paired eigenvalue sums), isotropic (Haar-conjugated), and
quantum (tensor-structured eigenvectors). Provides closed-form moments and
the universal mixing parameter p, Monte Carlo estimators for kurtoses and
for p via the departing fourth-moment terms, and the interpolated density
nu_IE = p nu_classical + (1 - p) nu_iso.

Monte Carlo determinism: trials are generated in fixed-size logical blocks,
each block drawing from SeedSequence(seed, spawn_key=(block, purpose)), so
results depend only on (seed, trials), not on scheduling.
"""

import math
import types

import numpy as np

from .randmat import MomentSummary, haar_q4_expectation, sample_haar

__all__ = [
    "SliderParams",
    "Density",
    "haar_q4",
    "frobenius_uv",
    "p_universal",
    "one_minus_p_universal",
    "wishart_local_moments",
    "chain_moments_classical",
    "ab_moments",
    "departing_gap_classical_iso",
    "departing_gap_classical_quantum",
    "wishart_kurtoses_theory",
    "mc_kurtoses",
    "p_from_departing",
    "ie_density",
    "MCKurtosesResult",
    "DepartingEstimate",
    "IEDensityResult",
]

_BLOCK = 256
_ENSEMBLES = ("classical", "iso", "quantum")
# RNG purposes within a block: local terms, permutations, Haar rotations.
_PURPOSE_LOCALS, _PURPOSE_PERM, _PURPOSE_HAAR = 0, 1, 2


class SliderParams:
    """Derived size parameters for an N-site chain of d-level systems.

    k = floor((N-1)/2) commuting-layer pair count, n = d^2 local dimension,
    m = d^N total dimension, t = m / n^k copy multiplicity.
    """

    def __init__(self, N, d, beta=1):
        if N < 3:
            raise ValueError("need N >= 3")
        if d < 2:
            raise ValueError("need d >= 2")
        if beta not in (1, 2):
            raise ValueError("beta must be 1 or 2")
        self.N, self.d, self.beta = N, d, beta
        self.k = (N - 1) // 2
        self.n = d * d
        self.m = d ** N
        self.t = self.m // self.n ** self.k
        assert self.t * self.n ** self.k == self.m


class Density:
    """Histogram density: bin edges and nonnegative masses summing to 1."""

    def __init__(self, edges, masses, samples=None):
        edges = np.asarray(edges, dtype=float)
        masses = np.asarray(masses, dtype=float)
        if edges.ndim != 1 or masses.ndim != 1 or edges.size != masses.size + 1:
            raise ValueError("need len(edges) == len(masses) + 1")
        if np.any(np.diff(edges) <= 0):
            raise ValueError("edges must be strictly increasing")
        if np.any(masses < -1e-12):
            raise ValueError("masses must be nonnegative")
        masses = np.clip(masses, 0.0, None)
        if abs(masses.sum() - 1.0) > 1e-12:
            raise ValueError("masses must sum to 1")
        self.edges = edges
        self.masses = masses
        self.samples = samples

    @classmethod
    def from_samples(cls, samples, bins="fd", edges=None):
        s = np.asarray(samples, dtype=float).ravel()
        if edges is None:
            edges = np.histogram_bin_edges(s, bins=bins)
        counts, edges = np.histogram(s, bins=edges)
        total = counts.sum()
        if total == 0:
            raise ValueError("no samples fall inside the bin range")
        return cls(edges, counts / total, samples=s)

    @property
    def centers(self):
        return (self.edges[:-1] + self.edges[1:]) / 2.0

    def mean(self):
        return float(np.dot(self.masses, self.centers))

    def l1_distance(self, other):
        """Sum of absolute per-bin mass differences (requires equal edges)."""
        if self.edges.shape != other.edges.shape or \
                not np.allclose(self.edges, other.edges, atol=1e-12, rtol=0):
            raise ValueError("densities live on different bin grids")
        return float(np.abs(self.masses - other.masses).sum())


def haar_q4(m, beta):
    """Fourth-moment E|q_ij|^4 of a Haar matrix entry."""
    return haar_q4_expectation(m, beta)


def frobenius_uv(d, beta=1):
    """(classical, quantum) values of E||uv||_F^2 for local singular vectors.

    classical = 1/d; quantum as a rational function of d and beta; the
    quantum value never exceeds the classical one.
    """
    if d < 2:
        raise ValueError("need d >= 2")
    if beta not in (1, 2):
        raise ValueError("beta must be 1 or 2")
    classical = 1.0 / d
    quantum = (beta ** 2 * (3 * d * (d - 1) + 1) + 2 * beta * (3 * d - 1) + 4) \
        / (d * (beta * d * d + 2) ** 2)
    return classical, quantum


def one_minus_p_universal(N, d, beta=1):
    """Closed-form 1 - p for odd N (universal in the local spectra)."""
    if d < 2:
        raise ValueError("need d >= 2")
    if beta not in (1, 2):
        raise ValueError("beta must be 1 or 2")
    if N < 3 or N % 2 == 0:
        raise ValueError("closed form requires odd N >= 3; "
                         "use p_from_departing for even N")
    k = (N - 1) // 2
    f1 = 1.0 - d ** -(2 * k + 1)
    f2 = 1.0 - ((k - 1) / k) ** 2
    f3 = 1.0 - (1.0 - d ** -(2 * k - 1)) / (1.0 + beta * d * d / 2.0)
    f4 = (d / (d + 1.0)) ** 2
    f5 = (beta * (d ** 3 + d ** 2 - 2 * d + 1) + 4 * d - 2) \
        / ((d - 1) * (beta * d * d + 2))
    return f1 * f2 * f3 * f4 * f5


def p_universal(N, d, beta=1):
    """Universal slider parameter p = 1 - (closed-form 1 - p), odd N."""
    return 1.0 - one_minus_p_universal(N, d, beta)


def wishart_local_moments(r, n, beta=1):
    """Raw moments m1..m4 and same-matrix correlation m11 of a rank-r
    Wishart eigenvalue (n x n, Gaussian beta = 1 or 2).

    Returns a dict with keys m1, m2, m3, m4, m11.
    """
    if not 1 <= r <= n:
        raise ValueError("need 1 <= r <= n")
    if beta not in (1, 2):
        raise ValueError("beta must be 1 or 2")
    b = float(beta)
    m1 = b * r
    m2 = b * r * (b * (r + n - 1) + 2)
    m3 = b * r * (b * b * (n * n + (r - 1) * (3 * n + r - 2))
                  + 6 * b * (n + r - 1) + 8)
    m4 = b * r * (48
                  + b ** 3 * (n ** 3 + 6 * n * n * (r - 1)
                              + n * (6 * r - 11) * (r - 1)
                              - 6 * (r * r + 1) + r ** 3 + 11 * r)
                  + 2 * b * b * (6 * (n * n + r * r)
                                 + 17 * (n * (r - 1) - r) + 11)
                  + 44 * b * (n + r - 1))
    m11 = b * b * r * (r - 1)
    return {"m1": m1, "m2": m2, "m3": m3, "m4": m4, "m11": m11}


def _cumulants_to_raw(k1, k2, k3, k4):
    m1 = k1
    m2 = k2 + k1 ** 2
    m3 = k3 + 3 * k2 * k1 + k1 ** 3
    m4 = k4 + 4 * k3 * k1 + 3 * k2 ** 2 + 6 * k2 * k1 ** 2 + k1 ** 4
    return m1, m2, m3, m4


def chain_moments_classical(r, N, d, beta=1):
    """MomentSummary of the classical chain spectrum with Wishart locals.

    The classical spectrum is a sum of N-1 independent local eigenvalue
    draws, so chain cumulants are (N-1) times the local ones. At beta=1:
    mean (N-1)r, variance r(N-1)(n+1) with n = d^2.
    """
    loc = wishart_local_moments(r, d * d, beta)
    single = MomentSummary(loc["m1"], loc["m2"], loc["m3"], loc["m4"], count=0)
    scale = N - 1
    raw = _cumulants_to_raw(scale * single.k1, scale * single.k2,
                            scale * single.k3, scale * single.k4)
    return MomentSummary(*raw, count=0)


def ab_moments(m1_local, m2_local, m11_local, params, n_terms=None):
    """Moments (m2^A, m11^A) of a diagonal entry of one commuting layer.

    A layer sums k independent local terms; cross terms between distinct
    terms contribute m1^2, while m11 (same-matrix eigenvalue correlation)
    enters only the two-entry correlation m11^A through index collisions.
    n_terms overrides the term count k (the two layers of an even-N chain
    differ); the copy multiplicity is recomputed as t = m / n^k.
    """
    n, m = params.n, params.m
    k = params.k if n_terms is None else int(n_terms)
    if k < 1:
        raise ValueError("layer must contain at least one term")
    t = m / n ** k
    m2A = k * m2_local + k * (k - 1) * m1_local ** 2
    m11A = k * (k - 1) * m1_local ** 2 + (k / (m - 1)) * (
        (t * n ** (k - 1) - 1) * m2_local
        + t * n ** (k - 1) * (n - 1) * m11_local)
    return m2A, m11A


def _layer_term_counts(N):
    """(odd layer, even layer) term counts for N-1 nearest-neighbor bonds."""
    bonds = N - 1
    return (bonds + 1) // 2, bonds // 2


def departing_gap_classical_iso(m2_local, m11_local, N, d, beta=1):
    """(1/m) E Tr[(A P^T B P)^2 - (A Q^T B Q)^2] for Haar Q.

    Both layers share the local moments; each layer difference is
    k_L m (n-1)(m2 - m11) / (n (m-1)) and the Haar fourth moment supplies
    the factor beta (m-1) / (m beta + 2).
    """
    n, m = d * d, d ** N
    k_odd, k_even = _layer_term_counts(N)
    diff = m2_local - m11_local

    def layer(kL):
        return kL * m * (n - 1) * diff / (n * (m - 1))

    return beta * (m - 1) / (m * beta + 2) * layer(k_odd) * layer(k_even)


def departing_gap_classical_quantum(m2_local, m11_local, N, d, beta=1):
    """(1/m) E Tr[(A P^T B P)^2 - (A Qq^T B Qq)^2] with structured Qq (odd N)."""
    if N % 2 == 0:
        raise ValueError("closed form requires odd N")
    k = (N - 1) // 2
    cF, qF = frobenius_uv(d, beta)
    return d * (2 * k - 1) * (m2_local - m11_local) ** 2 * (cF - qF)


def wishart_kurtoses_theory(r, N, d, beta=1):
    """Closed-form (gamma2_classical, gamma2_iso, gamma2_quantum).

    gamma2_quantum is None for even N (no closed form). The kurtosis gaps
    are twice the departing trace gaps divided by sigma^4.
    """
    loc = wishart_local_moments(r, d * d, beta)
    cm = chain_moments_classical(r, N, d, beta)
    sigma4 = cm.k2 ** 2
    g_c = cm.gamma2
    g_iso = g_c - 2 * departing_gap_classical_iso(
        loc["m2"], loc["m11"], N, d, beta) / sigma4
    if N % 2 == 1:
        g_q = g_c - 2 * departing_gap_classical_quantum(
            loc["m2"], loc["m11"], N, d, beta) / sigma4
    else:
        g_q = None
    return g_c, g_iso, g_q


# ---------------------------------------------------------------------------
# Monte Carlo engine
# ---------------------------------------------------------------------------

def _gen(seed, block, purpose):
    seq = np.random.SeedSequence(int(seed), spawn_key=(int(block), purpose))
    return np.random.Generator(np.random.PCG64(seq))


def _sample_block_locals(kind, T, nb, d, beta, gen, r=None, eigenvalues=None):
    """Eigenvalues (T, nb, n) and eigenvector matrices (T, nb, n, n) of the
    nb local terms of T independent chains (h = V diag(lam) V^dagger)."""
    n = d * d
    if kind == "wishart":
        if r is None or not 1 <= r <= n:
            raise ValueError("wishart rank must satisfy 1 <= r <= d^2")
        w = gen.standard_normal((T, nb, r, n))
        if beta == 2:
            w = (w + 1j * gen.standard_normal((T, nb, r, n))) / np.sqrt(2.0)
        h = np.conj(np.swapaxes(w, -1, -2)) @ w
        return np.linalg.eigh(h)
    if kind == "goe":
        g = gen.standard_normal((T, nb, n, n))
        return np.linalg.eigh((g + np.swapaxes(g, -1, -2)) / 2.0)
    if kind == "identity":
        lam = np.ones((T, nb, n))
        V = np.broadcast_to(np.eye(n), (T, nb, n, n)).copy()
        return lam, V
    if kind in ("binary_pm", "haar_eigs"):
        shim = types.SimpleNamespace(gen=gen)
        V = sample_haar(n, beta, shim, size=T * nb).reshape(T, nb, n, n)
        if kind == "binary_pm":
            lam = gen.choice([-1.0, 1.0], size=(T, nb, n))
        else:
            lam = np.asarray(eigenvalues, dtype=float)
            if lam.shape != (n,):
                raise ValueError("need d^2 eigenvalues")
            lam = np.broadcast_to(lam, (T, nb, n)).copy()
        return lam, V
    raise ValueError(f"unknown local term kind {kind!r}")


def _diag_vectors(lam, N, d):
    """Direct-sum layer spectra A (odd bonds) and B (even bonds), (T, m)."""
    T, nb, n = lam.shape
    m = d ** N
    A = np.zeros((T, m))
    B = np.zeros((T, m))
    for idx in range(nb):
        l = idx + 1
        target = A if l % 2 == 1 else B
        view = target.reshape(T, d ** (l - 1), n, d ** (N - l - 1))
        view += lam[:, idx, None, :, None]
    return A, B


def _bkron(a, b):
    T, p, q = a.shape[0], a.shape[1], b.shape[1]
    return np.einsum("tik,tjl->tijkl", a, b).reshape(T, p * q, p * q)


def _build_Qq_batched(V, N, d):
    """Batched structured eigenvector overlap Qq = (Q_odd)^dagger Q_even."""
    T = V.shape[0]
    eye = np.broadcast_to(np.eye(d, dtype=V.dtype), (T, d, d))

    def kron_all(indices):
        out = None
        for i in indices:
            out = V[:, i] if out is None else _bkron(out, V[:, i])
        return out

    odd = kron_all(range(0, N - 1, 2))
    even = kron_all(range(1, N - 1, 2))
    if N % 2 == 1:
        QA = _bkron(odd, eye)
        QB = _bkron(eye, even)
    else:
        QA = odd
        QB = _bkron(_bkron(eye, even), eye)
    return np.conj(QA.transpose(0, 2, 1)) @ QB


def _conjugated_diag(Q, B, side):
    """Q^dagger diag(B) Q for side='iso'; Q diag(B) Q^dagger for 'quantum'."""
    if side == "iso":
        return np.conj(Q.transpose(0, 2, 1)) @ (B[:, :, None] * Q)
    return (Q * B[:, None, :]) @ np.conj(Q.transpose(0, 2, 1))


def _trace_moments_dense(M, A):
    """Per-trial normalized trace moments of H = diag(A) + M."""
    T, m = A.shape
    idx = np.arange(m)
    H = M
    H[:, idx, idx] += A
    H2 = H @ H
    t1 = H[:, idx, idx].sum(axis=1).real
    t2 = H2[:, idx, idx].sum(axis=1).real
    t3 = np.einsum("tij,tji->t", H2, H).real
    t4 = np.einsum("tij,tji->t", H2, H2).real
    return np.stack([t1, t2, t3, t4], axis=1) / m


def _classical_moments_exact(A, B):
    """Per-trial classical trace moments averaged exactly over the pairing
    permutation: E_pi (1/m) sum_i (a_i + b_pi(i))^j = (1/m^2) sum_ij (a_i+b_j)^j,
    expanded binomially in the power sums of A and B (unbiased, strictly
    lower variance than sampling one permutation)."""
    m = A.shape[1]
    pa = [np.sum(A ** p, axis=1) for p in range(1, 5)]
    pb = [np.sum(B ** p, axis=1) for p in range(1, 5)]
    m1 = (pa[0] + pb[0]) / m
    m2 = (pa[1] * m + 2 * pa[0] * pb[0] + pb[1] * m) / m ** 2
    m3 = (pa[2] * m + 3 * pa[1] * pb[0] + 3 * pa[0] * pb[1] + pb[2] * m) \
        / m ** 2
    m4 = (pa[3] * m + 4 * pa[2] * pb[0] + 6 * pa[1] * pb[1]
          + 4 * pa[0] * pb[2] + pb[3] * m) / m ** 2
    return np.stack([m1, m2, m3, m4], axis=1)


def _departing_conjugated(A, M, m):
    w = (M * np.conj(M)).real
    return np.einsum("ti,tij,tj->t", A, w, A) / m


def _mc_run(N, d, beta, kind, trials, seed, r=None, eigenvalues=None,
            ensembles=_ENSEMBLES, want_departing=False, want_samples=False,
            inner_rotations=1):
    """Shared Monte Carlo loop over fixed-size blocks of paired trials."""
    if trials < 2:
        raise ValueError("need at least 2 trials")
    m = d ** N
    if m > 4096:
        raise ValueError("dense-infeasible dimension d^N > 4096")
    nb = N - 1
    quantum_ok = N >= 3
    if "quantum" in ensembles and not quantum_ok:
        raise ValueError("quantum ensemble needs N >= 3")
    moments = {e: [] for e in ensembles}
    departing = {e: [] for e in ensembles} if want_departing else None
    samples = {e: [] for e in ensembles} if want_samples else None
    n_blocks = -(-trials // _BLOCK)
    for b in range(n_blocks):
        take = min(_BLOCK, trials - b * _BLOCK)
        lam, V = _sample_block_locals(kind, _BLOCK, nb, d, beta,
                                      _gen(seed, b, _PURPOSE_LOCALS),
                                      r=r, eigenvalues=eigenvalues)
        A, B = _diag_vectors(lam[:take], N, d)

        if "classical" in ensembles:
            moments["classical"].append(_classical_moments_exact(A, B))
            if want_departing:
                # exact permutation average of (1/m) sum a_i^2 b_pi(i)^2
                departing["classical"].append(
                    (A * A).sum(axis=1) * (B * B).sum(axis=1) / m ** 2)
            if want_samples:
                keys = _gen(seed, b, _PURPOSE_PERM).random((_BLOCK, m))[:take]
                perm = np.argsort(keys, axis=1)
                samples["classical"].append(
                    (A + np.take_along_axis(B, perm, axis=1)).ravel())

        if "iso" in ensembles:
            shim = types.SimpleNamespace(gen=_gen(seed, b, _PURPOSE_HAAR))
            mom_acc = 0.0
            dep_acc = 0.0
            for _ in range(inner_rotations):
                Q = sample_haar(m, beta, shim, size=_BLOCK)[:take]
                M = _conjugated_diag(Q, B, "iso")
                if want_departing:
                    dep_acc = dep_acc + _departing_conjugated(A, M, m)
                if want_samples:
                    idx = np.arange(m)
                    M[:, idx, idx] += A
                    samples["iso"].append(np.linalg.eigvalsh(M).ravel())
                    M[:, idx, idx] -= A
                mom_acc = mom_acc + _trace_moments_dense(M, A)
            moments["iso"].append(mom_acc / inner_rotations)
            if want_departing:
                departing["iso"].append(dep_acc / inner_rotations)

        if "quantum" in ensembles:
            Qq = _build_Qq_batched(V[:take], N, d)
            M = _conjugated_diag(Qq, B, "quantum")
            if want_departing:
                departing["quantum"].append(_departing_conjugated(A, M, m))
            if want_samples:
                idx = np.arange(m)
                M[:, idx, idx] += A
                samples["quantum"].append(np.linalg.eigvalsh(M).ravel())
                M[:, idx, idx] -= A
            moments["quantum"].append(_trace_moments_dense(M, A))

    out = {"moments": {e: np.concatenate(v) for e, v in moments.items()}}
    if want_departing:
        out["departing"] = {e: np.concatenate(v) for e, v in departing.items()}
    if want_samples:
        out["samples"] = {e: np.concatenate(v) for e, v in samples.items()}
    return out


def _gamma2_of(mu):
    return MomentSummary(mu[0], mu[1], mu[2], mu[3], count=0).gamma2


def _block_split(arr, n_blocks=100):
    n_blocks = min(n_blocks, arr.shape[0])
    return np.array_split(arr, n_blocks)


class MCKurtosesResult:
    """Kurtoses of the paired classical/iso/quantum Monte Carlo ensembles.

    Point estimates come from the pooled trace moments; standard errors from
    block means (the blocks are paired across ensembles, so differences of
    kurtoses get the common-random-numbers variance reduction).
    """

    def __init__(self, per_trial_moments, trials, seed):
        self.trials = trials
        self.seed = seed
        self.ensembles = tuple(per_trial_moments)
        self._mu = {}
        self._moment_se = {}
        self._block_mu = {}
        self.summary = {}
        self._gamma2 = {}
        self._gamma2_se = {}
        for e, P in per_trial_moments.items():
            mu = P.mean(axis=0)
            self._mu[e] = mu
            self._moment_se[e] = P.std(axis=0, ddof=1) / math.sqrt(P.shape[0])
            blocks = np.array([blk.mean(axis=0) for blk in _block_split(P)])
            self._block_mu[e] = blocks
            self.summary[e] = MomentSummary(*mu, count=trials)
            self._gamma2[e] = self.summary[e].gamma2
            g_blocks = np.array([_gamma2_of(row) for row in blocks])
            self._gamma2_se[e] = float(np.nanstd(g_blocks, ddof=1)
                                       / math.sqrt(len(g_blocks)))

    def gamma2(self, ensemble):
        return self._gamma2[ensemble]

    def gamma2_se(self, ensemble):
        return self._gamma2_se[ensemble]

    @property
    def gamma2_c(self):
        return self._gamma2["classical"]

    @property
    def gamma2_iso(self):
        return self._gamma2["iso"]

    @property
    def gamma2_q(self):
        return self._gamma2["quantum"]

    def moment(self, ensemble, order):
        return float(self._mu[ensemble][order - 1])

    def moment_se(self, ensemble, order):
        return float(self._moment_se[ensemble][order - 1])

    def moment_diff(self, e1, e2, order):
        """(difference, paired standard error) of a raw trace moment."""
        j = order - 1
        diff = self._mu[e1][j] - self._mu[e2][j]
        d_blocks = self._block_mu[e1][:, j] - self._block_mu[e2][:, j]
        se = float(np.std(d_blocks, ddof=1) / math.sqrt(len(d_blocks)))
        return float(diff), se

    def gamma2_diff(self, e1, e2):
        """(difference, paired standard error) of excess kurtoses."""
        diff = self._gamma2[e1] - self._gamma2[e2]
        d_blocks = np.array(
            [_gamma2_of(a) - _gamma2_of(b)
             for a, b in zip(self._block_mu[e1], self._block_mu[e2])])
        se = float(np.nanstd(d_blocks, ddof=1) / math.sqrt(len(d_blocks)))
        return float(diff), se


def mc_kurtoses(spec, locals_kind, trials, seed, r=None, eigenvalues=None,
                ensembles=_ENSEMBLES, inner_rotations=1):
    """Monte Carlo kurtoses of the three ensembles built from shared locals.

    spec: ChainSpec-like with N, d, beta. locals_kind: 'wishart' (rank r),
    'goe', 'binary_pm', 'haar_eigs' (fixed eigenvalues), or 'identity'.
    Classical moments are averaged exactly over the pairing permutation;
    inner_rotations > 1 additionally averages the isotropic ensemble over
    several Haar rotations per local draw (same expectation, less noise).
    """
    run = _mc_run(spec.N, spec.d, spec.beta, locals_kind, trials, seed,
                  r=r, eigenvalues=eigenvalues, ensembles=ensembles,
                  inner_rotations=inner_rotations)
    return MCKurtosesResult(run["moments"], trials, seed)


class DepartingEstimate:
    """Ratio estimate of 1 - p from the departing fourth-moment traces."""

    def __init__(self, one_minus_p, se, numerator, denominator, den_se,
                 trials):
        self.one_minus_p = one_minus_p
        self.p = 1.0 - one_minus_p
        self.se = se
        self.numerator = numerator
        self.denominator = denominator
        self.denominator_se = den_se
        self.trials = trials


def p_from_departing(spec, locals_kind, trials, seed, r=None,
                     eigenvalues=None, inner_rotations=1):
    """Estimate 1 - p as the ratio of quantum to isotropic departures
    E Tr[(A P^T B P)^2 - (A Q^T B Q)^2], paired over common local draws."""
    run = _mc_run(spec.N, spec.d, spec.beta, locals_kind, trials, seed,
                  r=r, eigenvalues=eigenvalues, want_departing=True,
                  inner_rotations=inner_rotations)
    dep = run["departing"]
    num = dep["classical"] - dep["quantum"]
    den = dep["classical"] - dep["iso"]
    den_mean = float(den.mean())
    den_se = float(den.std(ddof=1) / math.sqrt(den.size))
    if abs(den_mean) < 3 * den_se:
        raise RuntimeError("unstable estimate: departing denominator is "
                           "within 3 sigma of zero")
    ratio = float(num.mean()) / den_mean
    blocks_n = _block_split(num)
    blocks_d = _block_split(den)
    r_blocks = np.array([a.mean() / b.mean()
                         for a, b in zip(blocks_n, blocks_d)])
    se = float(np.std(r_blocks, ddof=1) / math.sqrt(len(r_blocks)))
    return DepartingEstimate(ratio, se, float(num.mean()), den_mean, den_se,
                             trials)


class IEDensityResult:
    """Histogram densities of the three ensembles plus the IE mixture."""

    def __init__(self, classical, iso, quantum, ie, p):
        self.classical = classical
        self.iso = iso
        self.quantum = quantum
        self.ie = ie
        self.p = p


def ie_density(spec, locals_kind, trials, bins, seed, r=None,
               eigenvalues=None, p=None):
    """Classical / iso / exact-quantum eigenvalue histograms on a shared
    grid and the mixture nu_IE = p nu_classical + (1 - p) nu_iso.

    p defaults to the closed form for odd N and to the departing-terms
    Monte Carlo estimate for even N; an explicit p in [0, 1] overrides.
    """
    run = _mc_run(spec.N, spec.d, spec.beta, locals_kind, trials, seed,
                  r=r, eigenvalues=eigenvalues, want_samples=True)
    samp = run["samples"]
    pooled = np.concatenate([samp[e] for e in _ENSEMBLES])
    edges = np.histogram_bin_edges(pooled, bins="fd" if bins is None else bins)
    dens = {e: Density.from_samples(samp[e], edges=edges) for e in _ENSEMBLES}
    if p is None:
        if spec.N % 2 == 1:
            p = p_universal(spec.N, spec.d, spec.beta)
        else:
            p = p_from_departing(spec, locals_kind, trials, seed, r=r,
                                 eigenvalues=eigenvalues).p
    if not 0.0 <= p <= 1.0:
        raise ValueError("mixture weight p must lie in [0, 1]")
    mix = p * dens["classical"].masses + (1.0 - p) * dens["iso"].masses
    ie = Density(edges, mix / mix.sum())
    return IEDensityResult(dens["classical"], dens["iso"], dens["quantum"],
                           ie, p)
