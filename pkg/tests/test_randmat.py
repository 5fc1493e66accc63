"""Tests for seeded sampling of random matrices and moment summaries."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qmbs.randmat import (RngStream, MomentSummary, sample_haar,
                          sample_gaussian_matrix, sample_local_term,
                          sample_permutation, eigvals_sym, moment_summary,
                          haar_q4_expectation)


def test_rngstream_reproducible():
    a = RngStream(42).gen.standard_normal(8)
    b = RngStream(42).gen.standard_normal(8)
    assert np.array_equal(a, b)


def test_rngstream_substreams_differ():
    base = RngStream(42)
    x = base.substream(1).gen.standard_normal(8)
    y = base.substream(2).gen.standard_normal(8)
    z = base.substream(1).gen.standard_normal(8)
    assert not np.array_equal(x, y)
    assert np.array_equal(x, z)


@pytest.mark.parametrize("beta", [1, 2])
@pytest.mark.parametrize("m", [2, 5, 9])
def test_sample_haar_is_unitary(m, beta):
    q = sample_haar(m, beta, RngStream(3))
    assert q.shape == (m, m)
    if beta == 1:
        assert np.isrealobj(q)
    assert np.allclose(q.conj().T @ q, np.eye(m), atol=1e-12)


def test_sample_haar_batched():
    qs = sample_haar(4, 2, RngStream(5), size=7)
    assert qs.shape == (7, 4, 4)
    for q in qs:
        assert np.allclose(q.conj().T @ q, np.eye(4), atol=1e-12)


@pytest.mark.parametrize("beta", [1, 2])
def test_haar_q4_matches_analytic(beta):
    # |Q_00|^4 averaged over the invariant measure has a closed form;
    # check the sampler against it with a Monte Carlo 4-sigma gate.
    m, trials = 4, 4000
    qs = sample_haar(m, beta, RngStream(11), size=trials)
    vals = np.abs(qs[:, 0, 0]) ** 4
    exact = haar_q4_expectation(m, beta)
    se = vals.std(ddof=1) / np.sqrt(trials)
    assert abs(vals.mean() - exact) < 4 * se


def test_haar_q4_expectation_values():
    assert haar_q4_expectation(1, 2) == pytest.approx(1.0)
    # beta=2: 2/(m(m+1)); beta=1: 3/(m(m+2))
    assert haar_q4_expectation(3, 2) == pytest.approx(2 / 12)
    assert haar_q4_expectation(3, 1) == pytest.approx(3 / 15)


@pytest.mark.parametrize("beta", [1, 2])
def test_sample_gaussian_matrix(beta):
    g = sample_gaussian_matrix(40, 60, beta, RngStream(0))
    assert g.shape == (40, 60)
    assert (np.iscomplexobj(g)) == (beta == 2)
    # unit-variance entries
    v = np.mean(np.abs(g) ** 2)
    assert abs(v - 1.0) < 0.1


def test_sample_permutation():
    p = sample_permutation(7, RngStream(1))
    assert p.shape == (7,)
    assert sorted(p) == list(range(7))


def test_sample_local_term_wishart_psd_rank():
    h = sample_local_term("wishart", 3, RngStream(2), r=2)
    assert h.shape == (9, 9)
    vals = eigvals_sym(h)
    assert vals.min() > -1e-12
    assert np.sum(vals > 1e-10) <= 2  # rank <= r


def test_sample_local_term_goe_symmetric():
    h = sample_local_term("goe", 2, RngStream(4))
    assert np.allclose(h, h.T)


def test_sample_local_term_explicit_eigenvalues():
    lam = np.array([0.0, 1.0, 2.0, 3.0])
    h = sample_local_term("haar_eigs", 2, RngStream(6), eigenvalues=lam)
    assert np.allclose(np.sort(eigvals_sym(h)), lam, atol=1e-10)


def test_eigvals_sym_matches_numpy():
    rng = RngStream(9).gen
    a = rng.standard_normal((6, 6))
    a = a + a.T
    assert np.allclose(eigvals_sym(a), np.linalg.eigvalsh(a), atol=1e-12)


def test_moment_summary_gaussian_cumulants():
    # standard normal: k1=0, k2=1, k3=0, k4=0 (gamma2 = 0)
    x = RngStream(13).gen.standard_normal(200_000)
    s = moment_summary(x)
    assert abs(s.k1) < 0.02
    assert abs(s.k2 - 1.0) < 0.02
    assert abs(s.skewness) < 0.05
    assert abs(s.gamma2) < 0.1


def test_moment_summary_two_point_exact():
    # equal-weight {0, 2}: m=(1, 2, 4, 8), k2=1, k3=0, k4=-2 -> gamma2=-2
    s = moment_summary([0.0, 2.0])
    assert s.m1 == 1.0 and s.m2 == 2.0 and s.m3 == 4.0 and s.m4 == 8.0
    assert s.k2 == pytest.approx(1.0)
    assert s.skewness == pytest.approx(0.0)
    assert s.gamma2 == pytest.approx(-2.0)


def test_moment_summary_degenerate_flag():
    s = moment_summary([1.5] * 10)
    assert s.degenerate
    assert np.isnan(s.gamma2)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-50, 50), min_size=3, max_size=40))
def test_moment_summary_matches_numpy_cumulants(xs):
    s = moment_summary(xs)
    x = np.asarray(xs)
    assert s.k1 == pytest.approx(x.mean(), abs=1e-9)
    assert s.k2 == pytest.approx(x.var(), abs=1e-7)
    c = x - x.mean()
    assert s.k3 == pytest.approx(np.mean(c ** 3), abs=1e-6)
    assert s.k4 == pytest.approx(
        np.mean(c ** 4) - 3 * np.mean(c ** 2) ** 2, abs=1e-5)


def test_moment_summary_weighted():
    s = moment_summary([0.0, 2.0], weights=[3.0, 1.0])
    assert s.m1 == pytest.approx(0.5)
    assert s.m2 == pytest.approx(1.0)


def test_from_raw_moments_roundtrip():
    s = MomentSummary.from_raw_moments(1.0, 2.0, 4.0, 8.0)
    assert s.k2 == pytest.approx(1.0)
