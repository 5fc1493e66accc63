"""Free-probability tools for disordered hopping Hamiltonians.

Classical (permutation), isotropic (Haar, finite-free) and analytic
(R-transform) convolutions of spectra; circulant Anderson Hamiltonians with
two A+B partitioning schemes; binary-necklace joint-moment scans that locate
the leading order at which free independence fails; and derivative-based
moment corrections of an approximate density of states.
"""

import math

import numpy as np
from scipy.ndimage import gaussian_filter1d

from .chain import SparseOperator
from .randmat import sample_haar
from .slider import Density

__all__ = [
    "Semicircle",
    "Arcsine",
    "PointMass",
    "Empirical",
    "AndersonSpec",
    "NecklaceWord",
    "FreeDensity",
    "MomentEstimate",
    "classical_convolve",
    "iso_convolve_mc",
    "free_convolve_analytic",
    "build_anderson",
    "scheme_split",
    "anderson_pair_sampler",
    "necklaces",
    "centered_joint_moment",
    "approximation_degree",
    "ie_parameter_anderson",
    "moment_corrected_density",
]


# ---------------------------------------------------------------------------
# Spectral laws
# ---------------------------------------------------------------------------

class Semicircle:
    """Wigner semicircle of given variance, supported on [-2 sqrt(v), 2 sqrt(v)]."""

    def __init__(self, variance=1.0):
        if variance <= 0:
            raise ValueError("variance must be positive")
        self.variance = float(variance)

    def r(self, w):
        return self.variance * w

    def dr(self, w):
        return self.variance * np.ones_like(w)

    def sample(self, size, gen):
        return math.sqrt(self.variance) * (4.0 * gen.beta(1.5, 1.5, size) - 2.0)

    def support(self):
        s = 2.0 * math.sqrt(self.variance)
        return -s, s


class Arcsine:
    """Arcsine law on [-2|J|, 2|J|] (spectrum of J times a cycle adjacency).

    R-transform r(w) = (sqrt(1 + 4 J^2 w^2) - 1)/w, analytic at w=0 with
    r'(0) = 2 J^2 (the variance).
    """

    def __init__(self, J=1.0):
        if J == 0:
            raise ValueError("J must be nonzero")
        self.J = float(J)

    def r(self, w):
        s = np.sqrt(1.0 + 4.0 * self.J ** 2 * w * w)
        return (s - 1.0) / w

    def dr(self, w):
        s = np.sqrt(1.0 + 4.0 * self.J ** 2 * w * w)
        return (4.0 * self.J ** 2 * w / s) / w - (s - 1.0) / (w * w)

    def sample(self, size, gen):
        return 2.0 * abs(self.J) * np.cos(np.pi * gen.random(size))

    def atoms(self, N):
        """Exact eigenvalues 2 J cos(2 pi k / N) of the N-site cycle."""
        return 2.0 * self.J * np.cos(2.0 * np.pi * np.arange(N) / N)

    def support(self):
        s = 2.0 * abs(self.J)
        return -s, s


class PointMass:
    """Degenerate law concentrated at a single value (r(w) = value)."""

    def __init__(self, value=0.0):
        self.value = float(value)

    def r(self, w):
        return self.value * np.ones_like(w)

    def dr(self, w):
        return np.zeros_like(w)

    def sample(self, size, gen):
        return np.full(size, self.value)

    def support(self):
        return self.value, self.value


class Empirical:
    """Law given by a fixed sample pool (resampled with replacement)."""

    def __init__(self, samples):
        self.samples = np.asarray(samples, dtype=float).ravel()
        if self.samples.size == 0:
            raise ValueError("need at least one sample")

    def sample(self, size, gen):
        return gen.choice(self.samples, size=size, replace=True)

    def support(self):
        return float(self.samples.min()), float(self.samples.max())


# ---------------------------------------------------------------------------
# Convolutions
# ---------------------------------------------------------------------------

def classical_convolve(eigsA, eigsB, rng):
    """Pairwise sums a_i + b_pi(i) under a uniform random pairing."""
    a = np.asarray(eigsA, dtype=float).ravel()
    b = np.asarray(eigsB, dtype=float).ravel()
    if a.size != b.size:
        raise ValueError("spectra must have equal length")
    return a + b[rng.gen.permutation(a.size)]


def iso_convolve_mc(eigsA, eigsB, beta, trials, rng):
    """Eigenvalues of diag(A) + Q^dagger diag(B) Q over Haar samples Q.

    Converges to the free convolution of the two spectra as the dimension
    grows. Returns the pooled eigenvalue samples (trials * m values).
    """
    a = np.asarray(eigsA, dtype=float).ravel()
    b = np.asarray(eigsB, dtype=float).ravel()
    if a.size != b.size:
        raise ValueError("spectra must have equal length")
    m = a.size
    out = np.empty((trials, m))
    for t in range(trials):
        q = sample_haar(m, beta, rng)
        h = np.conj(q.T) @ (b[:, None] * q)
        h[np.diag_indices(m)] += a
        out[t] = np.linalg.eigvalsh(h)
    return out.ravel()


class FreeDensity:
    """Analytic free-convolution density on a grid, with per-point flags."""

    def __init__(self, grid, values, converged):
        self.grid = np.asarray(grid, dtype=float)
        self.values = np.asarray(values, dtype=float)
        self.converged = np.asarray(converged, dtype=bool)

    @property
    def mass(self):
        ok = self.converged
        trapezoid = getattr(np, "trapezoid", np.trapz)
        return float(trapezoid(self.values[ok], self.grid[ok]))

    def to_density(self, edges):
        """Per-bin masses on the given edges (trapezoid-integrated)."""
        ok = self.converged
        x, y = self.grid[ok], self.values[ok]
        cum = np.concatenate([[0.0], np.cumsum(np.diff(x) * (y[:-1] + y[1:]) / 2)])
        at = np.interp(edges, x, cum, left=0.0, right=cum[-1])
        masses = np.diff(at)
        return Density(edges, masses / masses.sum())


def free_convolve_analytic(lawA, lawB, grid, eta=1e-6, tol=1e-12,
                           max_iter=200):
    """Density of the free convolution of two laws with known R-transforms.

    Solves g(w) = r_A(w) + r_B(w) + 1/w = xi + i eta by complex Newton
    iteration with continuation along the grid (largest |xi| first, seeded
    with the asymptotic w ~ 1/xi); density(xi) = |Im w| / pi. Points where
    Newton fails are flagged and reported NaN, never fabricated.
    """
    for law in (lawA, lawB):
        if not hasattr(law, "r"):
            raise ValueError("both laws need an R-transform")
    grid = np.asarray(grid, dtype=float)
    order = np.argsort(-np.abs(grid))
    values = np.full(grid.size, np.nan)
    converged = np.zeros(grid.size, dtype=bool)

    def g_and_dg(w):
        g = lawA.r(w) + lawB.r(w) + 1.0 / w
        dg = lawA.dr(w) + lawB.dr(w) - 1.0 / (w * w)
        return g, dg

    w_prev = None
    for idx in order:
        z = grid[idx] + 1j * eta
        inits = []
        if w_prev is not None:
            inits.append(w_prev)
        inits.append(1.0 / z)
        inits.append(-1j * 0.1 + 1.0 / z)
        done = False
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            for w0 in inits:
                w = w0
                for _ in range(max_iter):
                    g, dg = g_and_dg(w)
                    step = (g - z) / dg
                    w_new = w - step
                    if w_new == 0 or not np.isfinite(w_new):
                        break
                    if abs(w_new - w) <= tol * max(1.0, abs(w_new)):
                        w = w_new
                        done = True
                        break
                    w = w_new
                if done:
                    g, _ = g_and_dg(w)
                    done = abs(g - z) <= 1e-8 * max(1.0, abs(z))
                if done:
                    break
        if done:
            values[idx] = abs(w.imag) / np.pi
            converged[idx] = True
            w_prev = w
    return FreeDensity(grid, values, converged)


# ---------------------------------------------------------------------------
# Anderson model and partitioning schemes
# ---------------------------------------------------------------------------

class AndersonSpec:
    """Circulant one-dimensional Anderson model: diagonal site noise of
    strength sigma plus hopping J on a closed ring of N sites."""

    def __init__(self, N, J=1.0, sigma=1.0, noise="gaussian"):
        if N < 3:
            raise ValueError("need N >= 3")
        if noise not in ("gaussian", "semicircle"):
            raise ValueError("noise must be 'gaussian' or 'semicircle'")
        self.N, self.J, self.sigma, self.noise = int(N), float(J), \
            float(sigma), noise

    def sample_sites(self, gen):
        if self.noise == "gaussian":
            return self.sigma * gen.standard_normal(self.N)
        return self.sigma * (4.0 * gen.beta(1.5, 1.5, self.N) - 2.0)


def build_anderson(spec, rng):
    """Real symmetric circulant-boundary Anderson Hamiltonian."""
    N = spec.N
    h = spec.sample_sites(rng.gen)
    H = np.zeros((N, N))
    H[np.diag_indices(N)] = h
    idx = np.arange(N)
    H[idx, (idx + 1) % N] = spec.J
    H[(idx + 1) % N, idx] = spec.J
    return SparseOperator(H)


def scheme_split(H, scheme):
    """Split an Anderson Hamiltonian into A + B = H (exactly).

    Scheme I: A = site-diagonal part, B = hopping part. Scheme II (even
    dimension only): A collects the 2x2 blocks [[h, J], [J, 0]] on site
    pairs (1,2), (3,4), ...; B the staggered pairs (2,3), ..., (N,1).
    """
    Hd = H.to_dense() if isinstance(H, SparseOperator) else np.asarray(H)
    N = Hd.shape[0]
    A = np.zeros_like(Hd)
    if scheme == "I":
        A[np.diag_indices(N)] = np.diag(Hd)
    elif scheme == "II":
        if N % 2 == 1:
            raise ValueError("Scheme II needs an even number of sites")
        for i in range(0, N, 2):
            A[i, i] = Hd[i, i]
            A[i, i + 1] = Hd[i, i + 1]
            A[i + 1, i] = Hd[i + 1, i]
    else:
        raise ValueError("scheme must be 'I' or 'II'")
    B = Hd - A
    return A, B


def anderson_pair_sampler(spec, scheme, rng):
    """Callable returning fresh (A, B) dense pairs for one scheme."""

    def sampler():
        H = build_anderson(spec, rng)
        return scheme_split(H, scheme)

    return sampler


def ie_parameter_anderson(sigma, J):
    """IE interpolation parameter p = -2 (2 (sigma/J)^-2 + 1)^-2 (< 0)."""
    if J == 0:
        raise ValueError("J must be nonzero")
    return -2.0 / (2.0 * (J / sigma) ** 2 + 1.0) ** 2


# ---------------------------------------------------------------------------
# Binary necklaces and joint moments
# ---------------------------------------------------------------------------

class NecklaceWord:
    """Cyclic binary word over {A, B} containing both letters.

    blocks lists the alternating run lengths [(n_1, m_1), ...] after
    rotating the word to start with an A-run; degree is the total length.
    """

    def __init__(self, word):
        word = str(word)
        if set(word) - {"A", "B"} or "A" not in word or "B" not in word:
            raise ValueError("word must use both letters A and B")
        self.word = min(word[i:] + word[:i] for i in range(len(word)))
        self.degree = len(word)

    @property
    def blocks(self):
        w = self.word
        k = len(w)
        start = next(i for i in range(k)
                     if w[i] == "A" and w[i - 1] == "B")
        w = w[start:] + w[:start]
        out = []
        i = 0
        while i < k:
            na = 0
            while i < k and w[i] == "A":
                na += 1
                i += 1
            nb = 0
            while i < k and w[i] == "B":
                nb += 1
                i += 1
            out.append((na, nb))
        return out

    def __eq__(self, other):
        return isinstance(other, NecklaceWord) and self.word == other.word

    def __hash__(self):
        return hash(self.word)

    def __repr__(self):
        return f"NecklaceWord({self.word!r})"


def necklaces(k):
    """All binary necklaces of length k using both letters (mod rotation)."""
    if not 2 <= k <= 12:
        raise ValueError("need 2 <= k <= 12")
    seen = set()
    for bits in range(1, 2 ** k - 1):
        s = "".join("A" if (bits >> i) & 1 else "B" for i in range(k))
        seen.add(min(s[i:] + s[:i] for i in range(k)))
    return [NecklaceWord(w) for w in sorted(seen)]


class MomentEstimate:
    """Monte Carlo estimate of a centered (and raw) necklace joint moment."""

    def __init__(self, word, estimate, sigma, raw, raw_sigma, trials):
        self.word = word
        self.estimate = estimate
        self.sigma = sigma
        self.raw = raw
        self.raw_sigma = raw_sigma
        self.trials = trials


def _word_trace(powers_c, powers_r, blocks, N, centered):
    mats = []
    src_a = powers_c[0] if centered else powers_r[0]
    src_b = powers_c[1] if centered else powers_r[1]
    for na, nb in blocks:
        mats.append(src_a[na])
        mats.append(src_b[nb])
    P = mats[0]
    for M in mats[1:-1]:
        P = P @ M
    if len(mats) > 1:
        tr = np.einsum("ij,ji->", P, mats[-1])
    else:
        tr = np.trace(P)
    return tr.real / N


def _power_tables(A, B, max_a, max_b):
    N = A.shape[0]
    eye = np.eye(N)

    def table(M, kmax):
        raw = {1: M}
        for e in range(2, kmax + 1):
            raw[e] = raw[e - 1] @ M
        cen = {e: raw[e] - (np.trace(raw[e]) / N) * eye for e in raw}
        return raw, cen

    raw_a, cen_a = table(A, max_a)
    raw_b, cen_b = table(B, max_b)
    return (cen_a, cen_b), (raw_a, raw_b)


def centered_joint_moment(word, sampler, trials):
    """MC estimate of <prod_s (A^n_s - <A^n_s>)(B^m_s - <B^m_s>)> with the
    normalized trace <.> = Tr/N; also reports the raw (uncentered) moment."""
    blocks = word.blocks
    max_a = max(n for n, _ in blocks)
    max_b = max(m for _, m in blocks)
    cen_vals = np.empty(trials)
    raw_vals = np.empty(trials)
    for t in range(trials):
        A, B = sampler()
        N = A.shape[0]
        powers_c, powers_r = _power_tables(A, B, max_a, max_b)
        cen_vals[t] = _word_trace(powers_c, powers_r, blocks, N, True)
        raw_vals[t] = _word_trace(powers_c, powers_r, blocks, N, False)
    return MomentEstimate(
        word,
        float(cen_vals.mean()), float(cen_vals.std(ddof=1) / math.sqrt(trials)),
        float(raw_vals.mean()), float(raw_vals.std(ddof=1) / math.sqrt(trials)),
        trials)


def approximation_degree(sampler, kmax, trials, threshold=5.0,
                         abs_floor=None, N_sites=None):
    """Smallest degree k <= kmax at which some centered necklace moment is
    statistically nonzero: |estimate| > max(threshold * sigma_MC, abs_floor).

    abs_floor guards against O(1/N) finite-size correlations masquerading
    as free-independence violations; it defaults to 20/N_sites when the
    site count is supplied, else 0. Returns kmax + 1 if nothing triggers.
    """
    if kmax > 8:
        raise ValueError("kmax must be <= 8")
    if abs_floor is None:
        abs_floor = 20.0 / N_sites if N_sites else 0.0
    # One shared set of trials, reused for every word; per-trial power
    # tables are evaluated and discarded to keep memory flat in N.
    words_by_k = {k: necklaces(k) for k in range(2, kmax + 1)}
    words = [w for k in range(2, kmax + 1) for w in words_by_k[k]]
    max_a = max(n for w in words for n, _ in w.blocks)
    max_b = max(m for w in words for _, m in w.blocks)
    vals = np.empty((trials, len(words)))
    for t in range(trials):
        A, B = sampler()
        pc, pr = _power_tables(A, B, max_a, max_b)
        N = A.shape[0]
        vals[t] = [_word_trace(pc, pr, w.blocks, N, True) for w in words]
    j = 0
    for k in range(2, kmax + 1):
        for _ in words_by_k[k]:
            est = vals[:, j].mean()
            sig = vals[:, j].std(ddof=1) / math.sqrt(trials)
            if abs(est) > max(threshold * sig, abs_floor):
                return k
            j += 1
    return kmax + 1


# ---------------------------------------------------------------------------
# Moment-corrected density
# ---------------------------------------------------------------------------

class CorrectedDensity:
    def __init__(self, density, warning):
        self.density = density
        self.warning = warning


def moment_corrected_density(base, muk_exact, muk_free, k, smooth_bins=3.0):
    """Correct a histogram density by the leading moment discrepancy:
    w ~ w_tilde + ((mu_k - mu_tilde_k)/k!) (-1)^k w_tilde^(k), with the k-th
    derivative taken by finite differences after Gaussian kernel smoothing.

    Requires uniform bins. Sets a warning flag when the derivative estimate
    is unstable under a change of smoothing width.
    """
    widths = np.diff(base.edges)
    h = widths[0]
    if not np.allclose(widths, h, rtol=1e-9):
        raise ValueError("moment correction needs uniform bins")
    rho = base.masses / h

    def kth_derivative(sigma_bins):
        d = gaussian_filter1d(rho, sigma=sigma_bins, mode="nearest")
        x = base.edges[:-1] + h / 2
        for _ in range(k):
            d = np.gradient(d, x)
        return d

    deriv = kth_derivative(smooth_bins)
    deriv_alt = kth_derivative(2.0 * smooth_bins)
    coeff = (muk_exact - muk_free) / math.factorial(k) * (-1.0) ** k
    corr = coeff * deriv
    noise = coeff * (deriv - deriv_alt)
    warning = bool(np.abs(noise).sum() > np.abs(corr).sum()) and coeff != 0.0
    rho_s = gaussian_filter1d(rho, sigma=smooth_bins, mode="nearest") \
        if coeff != 0.0 else rho
    new = np.clip(rho_s + corr, 0.0, None) * h
    total = new.sum()
    if total <= 0:
        raise ValueError("correction destroyed all mass")
    return CorrectedDensity(Density(base.edges, new / total), warning)
