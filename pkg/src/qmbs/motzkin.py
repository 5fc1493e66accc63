"""Exact combinatorics of colorless bracket chains and the 4-letter
mirror gas: path counting, canonical classes, Schmidt spectra and
entanglement entropies, the supertree stochastic map between Dyck-path
levels, the effective Dyck-path random walk, and the single-defect
hopping chain.

Bracket strings use the alphabet {0, l, r}; Dyck paths use {l, r}.
Mirror strings (4 letters per site) use ASCII letters {0, a, b, g} with
the Greek aliases α, β, γ accepted on input. All counting is done in
exact big-integer / rational arithmetic; entropies are evaluated in the
log domain so they stay accurate far beyond float overflow.
"""

import math
from fractions import Fraction
from functools import lru_cache

import numpy as np

__all__ = [
    "motzkin_number",
    "catalan",
    "ballot",
    "canonical_class",
    "count_class",
    "motzkin_strings",
    "dyck_paths",
    "SchmidtSpectrum",
    "schmidt_spectrum_d3",
    "entropy_asymptotics_d3",
    "d4_count",
    "d4_schmidt",
    "d4_entropy_asymptotic",
    "is_good_mirror",
    "supertree_parent_dist",
    "supertree_integral_matching",
    "DyckWalk",
    "dyck_walk",
    "XParticleChain",
    "x_particle_chain",
]

# Entropy offsets (bits): half-cut entropy of the 3-letter chain is
# (1/2)log2(L) + C3_HALF with L the half-chain length; the 4-letter
# mirror model adds a linear term with slope sqrt(2)-1.
C3_HALF = 0.64466547
D4_SLOPE = math.sqrt(2.0) - 1.0
# Additive constant of the 4-letter entropy asymptotics, from the saddle
# point of the sector weights 2^m M_{m,n}^2 at alpha0 = sqrt(2)-1 including
# the O(1) corrections: prefactor shift of the saddle, skewness shift of
# the mean, the Gaussian log-width, and the 1/(2 ln 2) fluctuation term.
_SQ2 = math.sqrt(2.0)
D4_OFFSET = (
    (4.0 + _SQ2) / (2.0 * (4.0 + 3.0 * _SQ2))          # prefactor saddle shift
    + (3.0 + 2.0 * _SQ2) / (2.0 * (34.0 + 24.0 * _SQ2))  # skewness shift
    + 0.5 / math.log(2.0)                               # entropy of fluctuations
    + 0.5 * math.log2(_SQ2 * math.pi / (3.0 + 2.0 * _SQ2))  # Gaussian width
)

_MOTZKIN_CACHE = [1, 1]


def motzkin_number(n):
    """n-th Motzkin number (exact): balanced bracket strings of length n."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    M = _MOTZKIN_CACHE
    while len(M) <= n:
        k = len(M)
        M.append(((2 * k + 1) * M[k - 1] + 3 * (k - 1) * M[k - 2]) // (k + 2))
    return M[n]


def catalan(k):
    """k-th Catalan number (exact)."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    return math.comb(2 * k, k) // (k + 1)


def ballot(a, b):
    """Ballot count ((a-b)/(a+b))·C(a+b, b) for 1 <= b <= a."""
    if not (1 <= b <= a):
        raise ValueError("ballot requires 1 <= b <= a")
    return (a - b) * math.comb(a + b, b) // (a + b)


def _validate_brackets(s):
    for ch in s:
        if ch not in "0lr":
            raise ValueError(f"invalid letter {ch!r}; expected one of '0', 'l', 'r'")


def canonical_class(s):
    """Canonical class (p, q) of a bracket string by prefix scanning.

    p counts unmatched right brackets, q unmatched left brackets; the
    string is a balanced (Motzkin) path iff (p, q) == (0, 0).
    """
    _validate_brackets(s)
    p = q = 0
    for ch in s:
        if ch == "l":
            q += 1
        elif ch == "r":
            if q > 0:
                q -= 1
            else:
                p += 1
    return p, q


def count_class(n, m):
    """Number of length-n bracket strings with class (0, m), exact.

    Closed form: sum_i (m+1)·n! / ((i+m+1)!·i!·(n-2i-m)!).
    """
    if not (0 <= m <= n):
        raise ValueError("need 0 <= m <= n")
    fact_n = math.factorial(n)
    total = 0
    for i in range((n - m) // 2 + 1):
        total += (m + 1) * fact_n // (
            math.factorial(i + m + 1) * math.factorial(i)
            * math.factorial(n - 2 * i - m))
    return total


@lru_cache(maxsize=None)
def _count_class_row(n):
    """All class counts (count_class(n, m) for m = 0..n) by one DP sweep."""
    row = [1]
    for _ in range(n):
        k = len(row)
        new = []
        for m in range(k + 1):
            v = 0
            if m > 0:
                v += row[m - 1]
            if m < k:
                v += row[m]
            if m + 1 < k:
                v += row[m + 1]
            new.append(v)
        row = new
    return tuple(row)


def motzkin_strings(n):
    """All balanced bracket strings of length n, lexicographic in (0,l,r)."""
    out = []

    def rec(prefix, height, left):
        if left == 0:
            if height == 0:
                out.append("".join(prefix))
            return
        for ch in "0lr":
            h = height + (1 if ch == "l" else -1 if ch == "r" else 0)
            # prune: height must stay >= 0 and be closable in time
            if h < 0 or h > left - 1:
                continue
            prefix.append(ch)
            rec(prefix, h, left - 1)
            prefix.pop()

    rec([], 0, n)
    return out


def dyck_paths(k):
    """All Dyck paths of semilength k (strings over {l, r})."""
    out = []

    def rec(prefix, height, left):
        if left == 0:
            out.append("".join(prefix))
            return
        if height + 1 <= left - 1:
            prefix.append("l")
            rec(prefix, height + 1, left - 1)
            prefix.pop()
        if height > 0:
            prefix.append("r")
            rec(prefix, height - 1, left - 1)
            prefix.pop()

    rec([], 0, 2 * k)
    return out


class SchmidtSpectrum:
    """Half-cut Schmidt spectrum grouped into degenerate sectors.

    sectors: list of (label m, multiplicity, p) with exact rational p;
    each of the `multiplicity` Schmidt values in sector m equals p.
    """

    def __init__(self, sectors):
        self.sectors = [(m, int(mult), p) for m, mult, p in sectors
                        if mult > 0 and p > 0]
        self.chi = sum(mult for _, mult, _ in self.sectors)

    @property
    def probabilities(self):
        """Per-sector p as floats, ordered by sector label."""
        return np.array([float(p) for _, _, p in self.sectors])

    @property
    def multiplicities(self):
        return np.array([mult for _, mult, _ in self.sectors])

    def total_probability(self):
        """Exact rational sum of multiplicity·p (should be 1)."""
        return sum(Fraction(mult) * p for _, mult, p in self.sectors)

    def flat(self):
        """All Schmidt probabilities expanded with multiplicity, descending."""
        vals = np.repeat(self.probabilities, self.multiplicities)
        return np.sort(vals)[::-1]

    @property
    def entropy_bits(self):
        """-sum p log2 p, evaluated in the log domain (big-int safe)."""
        s = 0.0
        for _, mult, p in self.sectors:
            log2p = math.log2(p.numerator) - math.log2(p.denominator)
            s -= float(mult * p) * log2p
        return s


def schmidt_spectrum_d3(n):
    """Half-cut Schmidt spectrum of the balanced-bracket ground state.

    For even chain length n with L = n/2, sector m (unmatched left
    brackets crossing the cut) carries one Schmidt value
    p_m = count_class(L, m)^2 / motzkin_number(n); the rank is 1 + n/2.
    """
    if n % 2 != 0 or n < 2:
        raise ValueError("n must be even and >= 2")
    L = n // 2
    row = _count_class_row(L)
    total = motzkin_number(n)
    sectors = [(m, 1, Fraction(row[m] * row[m], total)) for m in range(L + 1)]
    return SchmidtSpectrum(sectors)


def entropy_asymptotics_d3(n):
    """Predicted half-cut entropy (bits) for even chain length n >= 4."""
    if n < 4:
        raise ValueError("asymptotic form needs n >= 4")
    return 0.5 * math.log2(n / 2) + C3_HALF


# ---------------------------------------------------------------------------
# 4-letter mirror model
# ---------------------------------------------------------------------------

_MIRROR_ALIASES = {"α": "a", "β": "b", "γ": "g",
                   "a": "a", "b": "b", "g": "g", "0": "0"}


def _parse_mirror(s):
    """Normalize a mirror string; returns (half_A, half_B) in ASCII letters."""
    raw = [c for c in s if c != ":"]
    letters = []
    for c in raw:
        if c not in _MIRROR_ALIASES:
            raise ValueError(f"invalid mirror letter {c!r}")
        letters.append(_MIRROR_ALIASES[c])
    if len(letters) % 2 != 0 or not letters:
        raise ValueError("mirror string must have even positive length")
    if ":" in s:
        left = s.index(":")
        if left != len(letters) // 2:
            raise ValueError("':' separator must sit at the midpoint")
    half = len(letters) // 2
    return "".join(letters[:half]), "".join(letters[half:])


def is_good_mirror(s):
    """True iff the 4-letter string survives all local moves.

    Equivalent characterization: after deleting vacancies (0) and
    messenger particles (g), the two halves are mirror images of each
    other; additionally the leftmost particle of half A and the
    rightmost particle of half B (when present) must be a or b.
    """
    sa, sb = _parse_mirror(s)
    part_a = [c for c in sa if c != "0"]
    part_b = [c for c in sb if c != "0"]
    if part_a and part_a[0] == "g":
        return False
    if part_b and part_b[-1] == "g":
        return False
    word_a = [c for c in part_a if c != "g"]
    word_b = [c for c in part_b if c != "g"]
    return word_a == word_b[::-1]


def d4_count(m, n):
    """Number of half-chain fillings with a fixed m-particle pattern.

    M_{m,n} = 2^{n-m}·[C(n,m) - sum_{k=1..n-m} C(n-k,m)·2^{-k}], exact.
    """
    if not (0 <= m <= n):
        raise ValueError("need 0 <= m <= n")
    total = (1 << (n - m)) * math.comb(n, m)
    for k in range(1, n - m + 1):
        total -= math.comb(n - k, m) << (n - m - k)
    return total


def d4_schmidt(n):
    """Half-cut Schmidt spectrum of the 4-letter mirror ground state.

    Sector m holds 2^m Schmidt values (one per a/b pattern), each equal
    to M_{m,n}^2 / N with N = sum_m 2^m M_{m,n}^2; rank 2^{n+1} - 1.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    counts = [d4_count(m, n) for m in range(n + 1)]
    N = sum((c * c) << m for m, c in enumerate(counts))
    sectors = [(m, 1 << m, Fraction(c * c, N)) for m, c in enumerate(counts)]
    return SchmidtSpectrum(sectors)


def d4_entropy_asymptotic(n):
    """Predicted half-cut entropy (bits) of the mirror model."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return D4_SLOPE * n + 0.5 * math.log2(n) + D4_OFFSET


# ---------------------------------------------------------------------------
# Supertree map between Dyck-path levels
# ---------------------------------------------------------------------------

def _first_block(b):
    """Split a Dyck path b = l s r t at the matching r of its first l."""
    depth = 0
    for j, ch in enumerate(b):
        depth += 1 if ch == "l" else -1
        if depth == 0:
            return b[1:j], b[j + 1:]
    raise ValueError("not a balanced Dyck path")


def _check_dyck(b):
    depth = 0
    for ch in b:
        if ch == "l":
            depth += 1
        elif ch == "r":
            depth -= 1
        else:
            raise ValueError(f"invalid Dyck letter {ch!r}")
        if depth < 0:
            raise ValueError("negative prefix: not a Dyck path")
    if depth != 0:
        raise ValueError("unbalanced: not a Dyck path")


@lru_cache(maxsize=None)
def _parent_dist(b):
    n = len(b) // 2
    if n == 1:
        return (("", Fraction(1)),)
    s, t = _first_block(b)
    i = len(s) // 2
    dist = {}
    if i == 0:
        for a, pr in _parent_dist(t):
            dist["lr" + a] = dist.get("lr" + a, Fraction(0)) + pr
    elif i == n - 1:
        for a, pr in _parent_dist(s):
            key = "l" + a + "r"
            dist[key] = dist.get(key, Fraction(0)) + pr
    else:
        p_i = Fraction(i * (i + 1) * (3 * n - 2 * i - 1),
                       n * (n + 1) * (n - 1))
        for a, pr in _parent_dist(s):
            key = "l" + a + "r" + t
            dist[key] = dist.get(key, Fraction(0)) + p_i * pr
        for a, pr in _parent_dist(t):
            key = "l" + s + "r" + a
            dist[key] = dist.get(key, Fraction(0)) + (1 - p_i) * pr
    return tuple(sorted(dist.items()))


def supertree_parent_dist(b):
    """Parent distribution of the supertree stochastic map, exact.

    Returns a list of (parent Dyck path, Fraction probability); every
    parent is b with one adjacent lr pair removed, and the column sums
    over all children equal catalan(n)/catalan(n-1) for every parent.
    """
    _check_dyck(b)
    if len(b) == 0:
        raise ValueError("the empty path has no parent")
    return list(_parent_dist(b))


def _removal_parents(b):
    """Distinct Dyck paths obtained by deleting one adjacent 'lr' from b."""
    out = set()
    for j in range(len(b) - 1):
        if b[j] == "l" and b[j + 1] == "r":
            out.add(b[:j] + b[j + 2:])
    return out


def supertree_integral_matching(k):
    """Deterministic map from level k to level k-1 of the supertree.

    Each child maps to a parent reachable by removing one lr pair, and
    each parent receives between 1 and 4 children. The map is an
    integral point of the matching polytope, found by min-cost flow
    with the lower bound folded into node demands.
    """
    import networkx as nx

    if not (1 <= k <= 9):
        raise ValueError("supported for 1 <= k <= 9")
    children = dyck_paths(k)
    parents = dyck_paths(k - 1)
    G = nx.DiGraph()
    for c in children:
        G.add_node(("c", c), demand=-1)
        for p in _removal_parents(c):
            G.add_edge(("c", c), ("p", p), capacity=1, weight=0)
    # parent -> sink with flow in [1, 4]: shift the lower bound of 1
    # into the node demands and keep residual capacity 3 on the edge.
    for p in parents:
        G.add_node(("p", p), demand=1)
        G.add_edge(("p", p), "sink", capacity=3, weight=0)
    G.add_node("sink", demand=len(children) - len(parents))
    try:
        flow = nx.min_cost_flow(G)
    except nx.NetworkXUnfeasible as exc:  # pragma: no cover
        raise RuntimeError("integral matching infeasible") from exc
    mapping = {}
    for c in children:
        for (kind, p), f in flow[("c", c)].items():
            if f == 1:
                mapping[c] = p
                break
        else:  # pragma: no cover
            raise RuntimeError("flow left a child unmatched")
    return mapping


# ---------------------------------------------------------------------------
# Effective Dyck-path random walk
# ---------------------------------------------------------------------------

_PROJECTOR_GENERATORS = (("00", "lr"), ("0l", "l0"), ("0r", "r0"))


class DyckWalk:
    """Random walk over Dyck skeletons of length-n bracket strings.

    states: Dyck paths ('' = empty) ordered by semilength; P is the
    transition matrix, pi the reversible steady state, H_eff the
    projected interaction matrix P is built from.
    """

    def __init__(self, n, states, H_eff, pi):
        self.n = n
        self.states = states
        self.H_eff = H_eff
        self.pi = pi
        sqrt_pi = np.sqrt(pi)
        self.P = np.eye(len(states)) - (H_eff / n) * (sqrt_pi[None, :]
                                                      / sqrt_pi[:, None])

    def index(self, s):
        return self.states.index(s)


def dyck_walk(n):
    """Build the effective random walk on Dyck skeletons for length n.

    States are Dyck paths of semilength m with 2m <= n. H_eff is the
    bulk projector sum conjugated by the isometry that dresses each
    skeleton with the C(n, 2m) uniform vacancy placements, and
    P(s,t) = delta - (1/n)·H_eff[s,t]·sqrt(pi(t)/pi(s)) with
    pi(s) = C(n, 2m)·/ motzkin_number(n).
    """
    if not (2 <= n <= 12):
        raise ValueError("supported for 2 <= n <= 12")
    states = []
    for m in range(n // 2 + 1):
        states.extend(sorted(dyck_paths(m)))
    state_idx = {s: i for i, s in enumerate(states)}

    strings = motzkin_strings(n)
    str_idx = {u: i for i, u in enumerate(strings)}
    skeleton = np.array([state_idx[u.replace("0", "")] for u in strings])

    K = len(states)
    A = np.zeros((K, K))
    for u in strings:
        su = skeleton[str_idx[u]]
        for j in range(n - 1):
            w = u[j:j + 2]
            for a, b in _PROJECTOR_GENERATORS:
                if w == a:
                    cu = 0.5
                elif w == b:
                    cu = -0.5
                else:
                    continue
                for v, cv in ((a, 1.0), (b, -1.0)):
                    up = u[:j] + v + u[j + 2:]
                    A[skeleton[str_idx[up]], su] += cu * cv
    counts = np.array([math.comb(n, len(s)) for s in states], dtype=float)
    H_eff = A / np.sqrt(counts[:, None] * counts[None, :])
    pi = counts / float(motzkin_number(n))
    return DyckWalk(n, states, H_eff, pi)


# ---------------------------------------------------------------------------
# Single-defect hopping chain
# ---------------------------------------------------------------------------

class XParticleChain:
    """Frustration-free hopping chain for one defect on n sites.

    The bond projector at (j, j+1) is the rank-1 projector onto
    alpha_j|j> - beta_j|j+1>; the zero mode is g_j ∝ sqrt(M_{j-1}M_{n-j}).
    """

    def __init__(self, n, alpha, beta, g):
        self.n = n
        self.alpha = alpha
        self.beta = beta
        self.g = g
        # hop probabilities of the associated reversible walk
        self.p_right = alpha ** 2
        self.p_left = beta ** 2

    def apply(self, v):
        """Matrix-vector product H_move @ v (tridiagonal, O(n))."""
        v = np.asarray(v, dtype=float)
        a2, b2, ab = self.alpha ** 2, self.beta ** 2, self.alpha * self.beta
        out = np.zeros_like(v)
        out[:-1] += a2 * v[:-1] - ab * v[1:]
        out[1:] += b2 * v[1:] - ab * v[:-1]
        return out

    def to_dense(self):
        """Dense H_move (guarded to modest n)."""
        if self.n > 4000:
            raise ValueError("dense form limited to n <= 4000")
        H = np.zeros((self.n, self.n))
        idx = np.arange(self.n - 1)
        H[idx, idx] += self.alpha ** 2
        H[idx + 1, idx + 1] += self.beta ** 2
        H[idx, idx + 1] -= self.alpha * self.beta
        H[idx + 1, idx] -= self.alpha * self.beta
        return H


def x_particle_chain(n):
    """Hopping chain of a single defect over balanced-bracket seas.

    alpha_j^2 = M_{n-j-1}/(2 M_{n-j}), beta_j^2 = M_{j-1}/(2 M_j)
    (j = 1..n-1, exact ratios), with normalized zero mode
    g_j ∝ sqrt(M_{j-1} M_{n-j}).
    """
    if not (2 <= n <= 10 ** 4):
        raise ValueError("supported for 2 <= n <= 10^4")
    motzkin_number(n)  # fill the cache
    M = _MOTZKIN_CACHE
    ratio = [float(Fraction(M[k], M[k + 1])) for k in range(n)]
    alpha = np.sqrt([ratio[n - j - 1] / 2.0 for j in range(1, n)])
    beta = np.sqrt([ratio[j - 1] / 2.0 for j in range(1, n)])
    logs = [math.log(M[k]) for k in range(n)]
    lg = np.array([0.5 * (logs[j - 1] + logs[n - j]) for j in range(1, n + 1)])
    g = np.exp(lg - lg.max())
    g /= np.linalg.norm(g)
    return XParticleChain(n, alpha, beta, g)
