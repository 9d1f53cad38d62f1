from math import comb, cos, pi, sqrt

import numpy as np
import pytest

from covest import covariant as cv
from covest import equatorial as eq
from covest import haar, qmat
from covest.errors import CapExceeded


def test_model_fields():
    m = eq.EquatorialModel(5)
    assert m.dim == 6
    assert m.basis_weights.sum() == pytest.approx(1.0, abs=1e-15)
    assert np.sum(np.abs(m.c) ** 2) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        eq.EquatorialModel(0)


def test_lift_matches_tensor_power():
    n = 3
    m = eq.EquatorialModel(n)
    phi = 0.7
    psi = np.array([1, np.exp(1j * phi)]) / sqrt(2)
    full = qmat.kron_all([psi] * n).ravel()
    # project the 2^n tensor onto |N;k>
    sym = np.zeros(n + 1, dtype=complex)
    for idx in range(2**n):
        k = bin(idx).count("1")
        sym[k] += full[idx] / sqrt(comb(n, k))
    np.testing.assert_allclose(m.lift(psi), sym, atol=1e-15)
    np.testing.assert_allclose(m.lift(psi), np.sqrt([comb(n, k) for k in range(n + 1)]) / 2 ** (n / 2)
                               * np.exp(1j * phi * np.arange(n + 1)), atol=1e-15)


def test_A_examples():
    np.testing.assert_allclose(eq.equatorial_A(2), np.diag([0.25, 0.5, 0.25]))
    for n in (1, 7, 60, 61, 200):
        assert np.trace(eq.equatorial_A(n)).real == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(CapExceeded):
        eq.equatorial_A(201)
    assert eq.basis_weights(10_000).sum() == pytest.approx(1.0, abs=1e-10)
    with pytest.raises(CapExceeded):
        eq.basis_weights(10_001)


def test_R_examples():
    np.testing.assert_allclose(eq.equatorial_R(1), [[0.25, 0.125], [0.125, 0.25]])
    for n in (1, 2, 9, 150):
        r = eq.equatorial_R(n)
        assert np.trace(r).real == pytest.approx(0.5, abs=1e-12)
        assert np.count_nonzero(np.triu(r, 2)) == 0


def test_mc_operators_phase():
    a = haar.mc_operator_A(eq.EquatorialModel(3).lift, haar.GroupSampler.phase(1), eq.EquatorialModel(3).seed_state, 100_000)
    assert a.within(eq.equatorial_A(3)) <= 3.0
    m = eq.EquatorialModel(2)
    r = haar.mc_operator_R(m.lift, haar.GroupSampler.phase(2), m.seed_state, m.fiducial, 100_000)
    assert r.within(eq.equatorial_R(2)) <= 3.0


def test_M_structure_and_dense_agreement():
    t = eq.equatorial_M(1)
    np.testing.assert_array_equal(t.diag, [0.5, 0.5])
    np.testing.assert_array_equal(t.offdiag, [0.25])
    for n in (3, 12, 40):
        t = eq.equatorial_M(n)
        assert np.all(t.diag == 0.5) and np.all(t.offdiag == 0.25)
        a, r = eq.equatorial_A(n), eq.equatorial_R(n)
        h = qmat.mat_pow(a, -0.5)
        np.testing.assert_allclose(h @ r @ h, t.dense(), atol=1e-12)
        np.testing.assert_allclose(cv.build_M(eq.equatorial_pair(n)), t.dense(), atol=1e-12)


def test_tridiag_max_eigenvalue_examples():
    assert eq.tridiag_max_eigenvalue(1).closed_form == pytest.approx(1.0, abs=1e-15)
    assert eq.tridiag_max_eigenvalue(2).closed_form == pytest.approx(sqrt(2), abs=1e-15)
    for n in (1, 2, 50, 100):
        top = eq.tridiag_max_eigenvalue(n)
        assert abs(top.sturm - top.closed_form) <= 1e-12


def test_fidelities():
    assert eq.probabilistic_fidelity_eq(1) == pytest.approx(0.75, abs=1e-15)
    assert eq.probabilistic_fidelity_eq(2) == pytest.approx((2 + sqrt(2)) / 4, abs=1e-15)
    assert eq.probabilistic_fidelity_eq(3) == pytest.approx(0.90450850, abs=1e-8)
    assert eq.deterministic_fidelity_eq(1) == pytest.approx(0.75, abs=1e-15)
    assert eq.deterministic_fidelity_eq(2) == pytest.approx(0.5 + (sqrt(2) + sqrt(2)) / 8, abs=1e-15)
    assert eq.deterministic_fidelity_eq(3) == pytest.approx(0.5 + (sqrt(3) + 3 + sqrt(3)) / 16, abs=1e-15)
    assert eq.deterministic_fidelity_eq(3) < 0.90450850
    for n in (1, 4, 9):
        top = eq.tridiag_max_eigenvalue(n).sturm
        assert eq.probabilistic_fidelity_eq(n) == pytest.approx((top + 2) / 4, abs=1e-12)
        assert cv.optimal_fidelity(eq.equatorial_pair(n)).f_max == pytest.approx(eq.probabilistic_fidelity_eq(n), abs=1e-10)


def test_deterministic_fidelity_direct_sum_and_log_gamma():
    for n in (5, 60, 61, 120):
        direct = 0.5 + sum(sqrt(comb(n, k) * comb(n, k - 1)) for k in range(1, n + 1)) / 2 ** (n + 1)
        assert eq.deterministic_fidelity_eq(n) == pytest.approx(direct, rel=1e-12)
    assert 0.5 <= eq.deterministic_fidelity_eq(5000) < 1


def test_deterministic_povm_attains_f_det():
    for n in (1, 3, 10):
        povm = eq.deterministic_povm_eq(n)
        assert povm.deterministic
        assert cv.conditional_fidelity(povm, eq.equatorial_pair(n)) == pytest.approx(eq.deterministic_fidelity_eq(n), abs=1e-12)


def test_fidelity_gap():
    assert abs(eq.fidelity_gap(1)) <= 1e-12
    assert abs(eq.fidelity_gap(2)) <= 1e-12
    assert eq.fidelity_gap(3) == pytest.approx(5.02e-4, abs=1e-6)
    gaps = np.array([eq.fidelity_gap(n) for n in range(3, 101)])
    assert np.all(gaps > 0)
    assert eq.fidelity_gap(20) > 0
    peak = int(np.argmax(gaps))
    assert 0 < peak < len(gaps) - 1
    assert np.all(np.diff(gaps[:peak + 1]) > 0) and np.all(np.diff(gaps[peak:]) < 0)


def test_fidelities_increase_to_one():
    fp = np.array([eq.probabilistic_fidelity_eq(n) for n in range(1, 101)])
    fd = np.array([eq.deterministic_fidelity_eq(n) for n in range(1, 101)])
    assert np.all(np.diff(fp) > 0) and np.all(np.diff(fd) > 0)
    assert fp.max() < 1 and fd.max() < 1


def test_eigenvector_sine_form():
    for n in range(1, 51):
        np.testing.assert_allclose(np.abs(eq.top_eigenvector(n)), eq.sine_eigenvector(n), atol=1e-10)


def test_normalization():
    assert eq.povm_normalization_eq(1) == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(eq.EquatorialModel(1).c, [1 / sqrt(2), 1 / sqrt(2)], atol=1e-12)
    for n in (2, 3, 8, 30):
        c = eq.sine_eigenvector(n)
        expect = 2**n * max(c[k] ** 2 / comb(n, k) for k in range(n + 1))
        assert eq.povm_normalization_eq(n) == pytest.approx(expect, rel=1e-10)
        povm = eq.probabilistic_povm_eq(n)
        avg = np.diag(eq.EquatorialModel.twirl(povm.pi_matrix)).real
        assert np.all(avg <= 1 + 1e-12) and avg.max() == pytest.approx(1.0, abs=1e-12)


def test_success_probability():
    assert eq.success_probability_eq(1) == pytest.approx(1.0, abs=1e-12)
    assert eq.success_probability_eq(20) < eq.success_probability_eq(10)
    p = np.array([eq.success_probability_eq(n) for n in range(2, 60)])
    assert np.all(np.diff(p) < 0) and np.all((p > 0) & (p <= 1))
    # 1/N identity used beyond the dense cap
    for n in (10, 150, 200):
        assert eq.success_probability_eq(n) == pytest.approx(1 / eq.povm_normalization_eq(n), rel=1e-10)
    assert 0 < eq.success_probability_eq(1000) < eq.success_probability_eq(200)


def test_asymptotic_check():
    rep = eq.asymptotic_check(200)
    assert 2.44 <= rep.prob_coefficient <= 2.49
    assert abs(rep.det_exponent + 1) <= 0.1
    assert rep.success_slope < 0 and rep.success_r2 > 0.99
    big = eq.asymptotic_check(1000)
    assert abs(big.prob_coefficient / (pi**2 / 4) - 1) <= 1e-3
    with pytest.raises(ValueError):
        eq.asymptotic_check(50)


def test_twirl_is_phase_average():
    m = eq.EquatorialModel(3)
    x = qmat.random_hermitian(4, np.random.default_rng(0))
    phases = np.linspace(0, 2 * pi, 16, endpoint=False)
    v = m.representation(phases)
    np.testing.assert_allclose(np.mean(v @ x @ qmat.dag(v), axis=0), m.twirl(x), atol=1e-14)
    assert eq.probabilistic_fidelity_eq(4) == pytest.approx(0.5 * (1 + cos(pi / 6)))
