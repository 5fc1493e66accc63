"""Tests for lattice-path combinatorics, Schmidt spectra, and walks."""

import math
from fractions import Fraction
from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qmbs.motzkin import (motzkin_number, catalan, ballot, canonical_class,
                          count_class, motzkin_strings, dyck_paths,
                          schmidt_spectrum_d3, entropy_asymptotics_d3,
                          d4_count, d4_schmidt, d4_entropy_asymptotic,
                          is_good_mirror, supertree_parent_dist,
                          supertree_integral_matching, dyck_walk,
                          x_particle_chain)


# ---------------------------------------------------------------------------
# counting
# ---------------------------------------------------------------------------

def test_motzkin_numbers():
    assert [motzkin_number(n) for n in range(8)] == \
        [1, 1, 2, 4, 9, 21, 51, 127]


def test_catalan_numbers():
    assert [catalan(n) for n in range(7)] == [1, 1, 2, 5, 14, 42, 132]


def test_ballot_reduces_to_catalan():
    # ballot(n+1, n) = C(n)... the classic reflection identity
    for n in range(1, 8):
        assert ballot(n + 1, n) == catalan(n)


def test_motzkin_recurrence():
    for n in range(2, 30):
        lhs = (n + 2) * motzkin_number(n)
        rhs = (2 * n + 1) * motzkin_number(n - 1) + \
            3 * (n - 1) * motzkin_number(n - 2)
        assert lhs == rhs


def test_motzkin_strings_enumeration():
    for n in range(1, 8):
        strs = motzkin_strings(n)
        assert len(strs) == motzkin_number(n)
        assert len(set(strs)) == len(strs)
        assert all(canonical_class(s) == (0, 0) for s in strs)


def test_dyck_paths_enumeration():
    for n in range(1, 7):
        paths = dyck_paths(n)
        assert len(paths) == catalan(n)
        assert all(len(p) == 2 * n and "0" not in p for p in paths)


def _class_oracle(s):
    # stack reduction: delete flats, match open/close pairs
    p = q = 0
    for ch in s:
        if ch == "l":
            q += 1
        elif ch == "r":
            if q:
                q -= 1
            else:
                p += 1
    return p, q


@settings(max_examples=200, deadline=None)
@given(st.text(alphabet="0lr", min_size=0, max_size=14))
def test_canonical_class_matches_reduction_oracle(s):
    assert canonical_class(s) == _class_oracle(s)


@pytest.mark.parametrize("n", [3, 4, 5, 6])
def test_count_class_matches_enumeration(n):
    counts = {}
    for tup in product("0lr", repeat=n):
        key = canonical_class("".join(tup))
        counts[key] = counts.get(key, 0) + 1
    for m in range(n + 1):
        classes = [v for (p, q), v in counts.items() if p + q == m]
        if not classes:
            continue
        # every class with the same number of unmatched letters has the
        # same population, given by the closed count
        assert all(v == count_class(n, m) for v in classes)
    assert sum(counts.values()) == 3 ** n


# ---------------------------------------------------------------------------
# spin-1 Schmidt spectrum
# ---------------------------------------------------------------------------

def test_schmidt_spectrum_d3_small_exact():
    spec = schmidt_spectrum_d3(4)
    assert spec.chi == 3
    assert [(m, p) for m, _, p in spec.sectors] == \
        [(0, Fraction(4, 9)), (1, Fraction(4, 9)), (2, Fraction(1, 9))]
    assert spec.entropy_bits == pytest.approx(1.3921472, abs=1e-6)


@pytest.mark.parametrize("n", [2, 4, 6, 10, 24])
def test_schmidt_spectrum_d3_normalized_and_chi(n):
    spec = schmidt_spectrum_d3(n)
    assert spec.total_probability() == 1
    assert spec.chi == 1 + n // 2


def test_schmidt_spectrum_d3_entropy_matches_float_sum():
    spec = schmidt_spectrum_d3(12)
    s = -sum(float(p) * math.log2(float(p)) for _, mult, p in spec.sectors
             for _ in range(mult))
    assert spec.entropy_bits == pytest.approx(s, abs=1e-12)


def test_schmidt_spectrum_d3_matches_rdm_eigenvalues():
    # reduced density matrix of the explicit superposition state
    n = 6
    from qmbs.ffspectra import motzkin_state
    psi = motzkin_state(n)
    mat = psi.reshape(3 ** (n // 2), 3 ** (n // 2))
    sv2 = np.linalg.svd(mat, compute_uv=False) ** 2
    sv2 = np.sort(sv2[sv2 > 1e-14])[::-1]
    flat = np.sort(schmidt_spectrum_d3(n).flat())[::-1]
    assert len(sv2) == len(flat)
    assert np.allclose(sv2, flat, atol=1e-12)


def test_entropy_asymptotics_d3_tracks_exact():
    for n in (256, 1024):
        exact = schmidt_spectrum_d3(n).entropy_bits
        assert abs(exact - entropy_asymptotics_d3(n)) < 0.02


# ---------------------------------------------------------------------------
# two-colour (d=4) model
# ---------------------------------------------------------------------------

def _brute_good_count(n):
    total = 0
    for tup in product("0abg", repeat=2 * n):
        if is_good_mirror("".join(tup)):
            total += 1
    return total


@pytest.mark.parametrize("n,expect", [(1, 3), (2, 23)])
def test_good_mirror_counts_brute_force(n, expect):
    assert _brute_good_count(n) == expect
    total = sum(2 ** m * d4_count(m, n) ** 2 for m in range(n + 1))
    assert total == expect


def test_is_good_mirror_examples():
    assert is_good_mirror("00")
    assert is_good_mirror("aa")
    assert not is_good_mirror("gg")   # leftmost particle must be a or b
    assert not is_good_mirror("ab")   # halves must mirror
    assert is_good_mirror("a0:0a")    # midpoint marker accepted


@pytest.mark.parametrize("n", [1, 2, 3, 6, 12])
def test_d4_schmidt_normalized_and_chi(n):
    spec = d4_schmidt(n)
    assert spec.total_probability() == 1
    assert spec.chi == 2 ** (n + 1) - 1
    assert all(mult == 2 ** m for m, mult, _ in spec.sectors)


def test_d4_entropy_asymptotic_tracks_exact():
    spec = d4_schmidt(100)
    assert abs(spec.entropy_bits - d4_entropy_asymptotic(100)) < 0.05


def test_d4_entropy_slope_is_sqrt2_minus_1():
    s1 = d4_schmidt(160).entropy_bits
    s2 = d4_schmidt(200).entropy_bits
    slope = (s2 - s1) / 40
    # linear term dominates; the 1/2 log2 n term adds ~0.004 per unit n
    assert slope == pytest.approx(math.sqrt(2) - 1, abs=0.01)


# ---------------------------------------------------------------------------
# supertree map
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_supertree_parent_dist_support_and_total(n):
    parents = set(dyck_paths(n - 1))
    for b in dyck_paths(n):
        dist = supertree_parent_dist(b)
        assert sum(p for _, p in dist) == 1
        assert all(a in parents for a, _ in dist)
        assert all(isinstance(p, Fraction) and p > 0 for _, p in dist)


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_supertree_column_sums_exact(n):
    colsums = {}
    for b in dyck_paths(n):
        for a, p in supertree_parent_dist(b):
            colsums[a] = colsums.get(a, 0) + p
    expect = Fraction(catalan(n), catalan(n - 1))
    assert set(colsums) == set(dyck_paths(n - 1))
    assert all(v == expect for v in colsums.values())


@pytest.mark.parametrize("k", [2, 3, 4, 5])
def test_supertree_integral_matching_preimages(k):
    match = supertree_integral_matching(k)
    assert set(match) == set(dyck_paths(k))
    counts = {}
    for a in match.values():
        counts[a] = counts.get(a, 0) + 1
    assert set(counts) == set(dyck_paths(k - 1))
    assert all(1 <= c <= 4 for c in counts.values())


def test_supertree_matching_uses_single_lr_removals():
    # every assigned parent is the child with one matched "lr" deleted
    for k in (2, 3, 4):
        for b, a in supertree_integral_matching(k).items():
            removals = {b[:i] + b[i + 2:] for i in range(len(b) - 1)
                        if b[i:i + 2] == "lr"}
            assert a in removals


# ---------------------------------------------------------------------------
# walks
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("n", [3, 4, 5, 6])
def test_dyck_walk_invariants(n):
    walk = dyck_walk(n)
    P, pi = walk.P, walk.pi
    assert np.allclose(P.sum(axis=1), 1.0, atol=1e-12)
    assert pi.sum() == pytest.approx(1.0, abs=1e-12)
    # reversibility
    flux = pi[:, None] * P
    assert np.allclose(flux, flux.T, atol=1e-10)
    assert np.all(np.diag(P) >= 0.5 - 1e-12)


def test_dyck_walk_moves_are_single_insert_remove(n=5):
    walk = dyck_walk(n)
    for i, s in enumerate(walk.states):
        for j, t in enumerate(walk.states):
            if i == j or walk.P[i, j] <= 1e-14:
                continue
            assert abs(len(s) - len(t)) == 2
            lo, hi = sorted((s, t), key=len)
            # hi equals lo with one "lr" inserted somewhere
            assert any(hi == lo[:k] + "lr" + lo[k:]
                       for k in range(len(lo) + 1))


def test_x_particle_chain_structure():
    xc = x_particle_chain(6)
    H = xc.to_dense()
    assert np.allclose(H, H.T)
    # transition probabilities are confined to [1/6, 1/2]
    assert np.all(xc.p_right >= 1 / 6 - 1e-12)
    assert np.all(xc.p_right <= 1 / 2 + 1e-12)
    assert np.all(xc.p_left >= 1 / 6 - 1e-12)
    assert np.all(xc.p_left <= 1 / 2 + 1e-12)


def test_x_particle_chain_ground_state_annihilated():
    xc = x_particle_chain(12)
    g = xc.g / np.linalg.norm(xc.g)
    assert np.linalg.norm(xc.apply(g)) < 1e-12


def test_x_particle_chain_n2_spectrum():
    xc = x_particle_chain(2)
    vals = np.linalg.eigvalsh(xc.to_dense())
    assert np.allclose(vals, [0.0, 1.0], atol=1e-12)


def test_x_particle_chain_apply_matches_dense():
    xc = x_particle_chain(9)
    rng = np.random.default_rng(0)
    v = rng.standard_normal(9)
    assert np.allclose(xc.apply(v), xc.to_dense() @ v, atol=1e-12)
