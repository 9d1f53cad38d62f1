from itertools import permutations
from math import comb

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from covest import qmat
from covest.errors import (
    DimensionMismatch,
    NegativeEigenvalue,
    NoConvergence,
    NotHermitian,
    SingularForNegativePower,
    SizeCapExceeded,
)


def phi_plus_proj(d):
    v = np.eye(d).reshape(-1) / np.sqrt(d)
    return np.outer(v, v).astype(complex)


def swap(d):
    return qmat.permutation_operator((1, 0), d)


# eigh

def test_eigh_identity():
    dec = qmat.eigh(np.eye(3))
    np.testing.assert_allclose(dec.eigenvalues, [1, 1, 1])
    assert dec.source_dim == 3


def test_eigh_diagonal_order_and_vectors():
    dec = qmat.eigh(np.diag([2.0, -1.0]))
    np.testing.assert_allclose(dec.eigenvalues, [-1, 2])
    np.testing.assert_allclose(dec.eigenvectors, [[0, 1], [1, 0]], atol=1e-15)


def test_eigh_pauli_x():
    np.testing.assert_allclose(qmat.eigvalsh([[0, 1], [1, 0]]), [-1, 1], atol=1e-15)


@pytest.mark.parametrize("n", [1, 2, 5, 17, 40])
def test_eigh_matches_lapack(n):
    rng = np.random.default_rng(n)
    m = qmat.random_hermitian(n, rng)
    dec = qmat.eigh(m)
    np.testing.assert_allclose(dec.eigenvalues, np.linalg.eigvalsh(m), atol=1e-11 * np.linalg.norm(m))
    fro = np.linalg.norm(m)
    u, w = dec.eigenvectors, dec.eigenvalues
    assert np.linalg.norm(m @ u - u * w, axis=0).max() <= 1e-10 * fro
    np.testing.assert_allclose(qmat.dag(u) @ u, np.eye(n), atol=1e-10)
    np.testing.assert_allclose((u * w) @ qmat.dag(u), m, atol=1e-10 * fro)


def test_eigh_phase_convention_and_determinism():
    rng = np.random.default_rng(3)
    m = qmat.random_hermitian(8, rng)
    a, b = qmat.eigh(m), qmat.eigh(m.copy())
    np.testing.assert_array_equal(a.eigenvalues, b.eigenvalues)
    np.testing.assert_array_equal(a.eigenvectors, b.eigenvectors)
    u = a.eigenvectors
    lead = u[np.argmax(np.abs(u), axis=0), np.arange(8)]
    np.testing.assert_allclose(lead.imag, 0, atol=1e-15)
    assert np.all(lead.real > 0)


def test_eigh_degenerate_spectrum():
    d = 4
    a = (np.eye(d * d) + d * phi_plus_proj(d)) / (d * (d + 1))
    w = qmat.eigvalsh(a)
    np.testing.assert_allclose(w[:-1], 1 / (d * (d + 1)), atol=1e-15)
    assert w[-1] == pytest.approx(1 / d, abs=1e-15)


def test_eigh_rejects_non_hermitian():
    with pytest.raises(NotHermitian):
        qmat.eigh([[0, 1], [0, 0]])


def test_eigh_sweep_budget():
    rng = np.random.default_rng(0)
    with pytest.raises(NoConvergence):
        qmat.eigh(qmat.random_hermitian(12, rng), max_sweeps=1)


def test_hermitize_absorbs_roundoff():
    m = np.array([[1.0, 1 + 1e-14], [1.0, 2.0]])
    h = qmat.hermitize(m)
    assert qmat.is_hermitian(h, 0)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 12), st.integers(0, 2**32 - 1))
def test_eigh_reconstruction_property(n, seed):
    m = qmat.random_hermitian(n, np.random.default_rng(seed))
    dec = qmat.eigh(m)
    u, w = dec.eigenvectors, dec.eigenvalues
    assert np.all(np.diff(w) >= 0)
    np.testing.assert_allclose((u * w) @ qmat.dag(u), m, atol=1e-10 * np.linalg.norm(m))


# mat_pow

def test_mat_pow_identity():
    np.testing.assert_allclose(qmat.mat_pow(np.eye(3), -0.5), np.eye(3), atol=1e-15)


def test_mat_pow_diagonal_sqrt():
    np.testing.assert_allclose(qmat.mat_pow(np.diag([4.0, 9.0]), 0.5), np.diag([2, 3]), atol=1e-14)


def test_mat_pow_inverse_of_conjugate_A():
    d = 2
    phi = phi_plus_proj(d)
    a = (np.eye(4) + d * phi) / (d * (d + 1))
    np.testing.assert_allclose(qmat.mat_pow(a, -1), 6 * np.eye(4) - 4 * phi, atol=1e-12)


def test_mat_pow_sqrt_squares_back():
    rng = np.random.default_rng(1)
    g = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
    m = g @ qmat.dag(g)
    r = qmat.mat_pow(m, 0.5)
    assert np.linalg.norm(r @ r - m) <= 1e-10 * np.linalg.norm(m)
    assert qmat.is_hermitian(r)


@pytest.mark.parametrize("p", [0.5, 1.0])
def test_mat_pow_inverse_pairs(p):
    rng = np.random.default_rng(7)
    g = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
    m = g @ qmat.dag(g) + np.eye(5)
    np.testing.assert_allclose(qmat.mat_pow(m, p) @ qmat.mat_pow(m, -p), np.eye(5), atol=1e-9)


def test_mat_pow_errors():
    with pytest.raises(SingularForNegativePower):
        qmat.mat_pow(np.diag([1.0, 0.0]), -0.5)
    with pytest.raises(NegativeEigenvalue):
        qmat.mat_pow(np.diag([1.0, -0.5]), 0.5)
    # singular is fine for positive powers
    np.testing.assert_allclose(qmat.mat_pow(np.diag([4.0, 0.0]), 0.5), np.diag([2, 0]))


# partial transpose / trace

def brute_partial_transpose(m, sub, dims):
    out = np.zeros_like(m)
    for i in np.ndindex(*dims):
        for j in np.ndindex(*dims):
            ii, jj = list(i), list(j)
            ii[sub], jj[sub] = j[sub], i[sub]
            out[np.ravel_multi_index(ii, dims), np.ravel_multi_index(jj, dims)] = \
                m[np.ravel_multi_index(i, dims), np.ravel_multi_index(j, dims)]
    return out


def test_partial_transpose_phi_plus_is_swap():
    np.testing.assert_allclose(qmat.partial_transpose(phi_plus_proj(2), 1, (2, 2)), swap(2) / 2, atol=1e-15)


def test_partial_transpose_identity():
    np.testing.assert_array_equal(qmat.partial_transpose(np.eye(4), 0, (2, 2)), np.eye(4))


def test_partial_transpose_against_brute_force():
    phi = np.eye(2).reshape(-1) / np.sqrt(2)
    e00 = qmat.ket(0, 4)
    m = np.outer(e00, phi) + np.outer(phi, e00)
    np.testing.assert_array_equal(qmat.partial_transpose(m, 1, (2, 2)), brute_partial_transpose(m, 1, (2, 2)))
    rng = np.random.default_rng(5)
    x = rng.normal(size=(12, 12)) + 1j * rng.normal(size=(12, 12))
    for sub in range(3):
        np.testing.assert_array_equal(qmat.partial_transpose(x, sub, (2, 3, 2)),
                                      brute_partial_transpose(x, sub, (2, 3, 2)))


def test_partial_transpose_involution():
    rng = np.random.default_rng(9)
    x = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
    twice = qmat.partial_transpose(qmat.partial_transpose(x, 1, (3, 2)), 1, (3, 2))
    np.testing.assert_array_equal(twice, x)


def test_partial_trace_examples():
    np.testing.assert_allclose(qmat.partial_trace(phi_plus_proj(2), 1, (2, 2)), np.eye(2) / 2, atol=1e-15)
    rng = np.random.default_rng(2)
    rho = qmat.random_hermitian(3, rng)
    sigma = qmat.random_hermitian(2, rng)
    np.testing.assert_allclose(qmat.partial_trace(np.kron(rho, sigma), 1, (3, 2)), rho * np.trace(sigma), atol=1e-12)
    np.testing.assert_allclose(qmat.partial_trace(np.kron(rho, sigma), 0, (3, 2)), sigma * np.trace(rho), atol=1e-12)


def test_partial_trace_of_symmetric_projector():
    p = qmat.symmetric_projector(3, 2)
    # explicit 8x8 permutation sum
    brute = sum(qmat.permutation_operator(s, 2) for s in permutations(range(3))) / 6
    np.testing.assert_allclose(p, brute, atol=1e-15)
    np.testing.assert_allclose(qmat.partial_trace(p, 2, (2, 2, 2)),
                               qmat.partial_trace(brute, 2, (2, 2, 2)), atol=1e-15)
    # two-copy marginal of the three-copy symmetrizer
    np.testing.assert_allclose(qmat.partial_trace(p, 2, (2, 2, 2)),
                               (2 * np.eye(4) + 2 * swap(2)) / 3, atol=1e-14)


def test_partial_trace_commutes_with_transpose_of_kept_factor():
    rng = np.random.default_rng(4)
    x = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
    lhs = qmat.partial_trace(qmat.partial_transpose(x, 0, (3, 2)), 1, (3, 2))
    np.testing.assert_allclose(lhs, qmat.partial_trace(x, 1, (3, 2)).T)


def test_partial_trace_preserves_trace():
    rng = np.random.default_rng(8)
    x = qmat.random_hermitian(24, rng)
    for sub in range(3):
        assert np.trace(qmat.partial_trace(x, sub, (2, 3, 4))) == pytest.approx(np.trace(x), abs=1e-12)


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        qmat.partial_trace(np.eye(4), 0, (2, 3))
    with pytest.raises(DimensionMismatch):
        qmat.partial_transpose(np.eye(4), 2, (2, 2))


# symmetric projector

@pytest.mark.parametrize("n,d,tr", [(3, 2, 4), (3, 3, 10), (2, 4, 10), (4, 2, 5)])
def test_symmetric_projector_trace(n, d, tr):
    p = qmat.symmetric_projector(n, d)
    assert np.trace(p).real == pytest.approx(tr, abs=1e-12)
    assert tr == qmat.symmetric_dimension(n, d) == comb(n + d - 1, n)


def test_two_copy_symmetrizer():
    for d in (2, 3):
        np.testing.assert_allclose(qmat.symmetric_projector(2, d), (np.eye(d * d) + swap(d)) / 2, atol=1e-15)


def test_symmetric_projector_idempotent_and_invariant():
    p = qmat.symmetric_projector(3, 3)
    np.testing.assert_allclose(p @ p, p, atol=1e-12)
    for s in permutations(range(3)):
        np.testing.assert_allclose(p @ qmat.permutation_operator(s, 3), p, atol=1e-12)


def test_symmetric_projector_cap():
    with pytest.raises(SizeCapExceeded):
        qmat.symmetric_projector(3, 17)
    with pytest.raises(SizeCapExceeded):
        qmat.symmetric_projector(3, 4, cap=63)


def test_permutation_operator_moves_factors():
    a, b, c = qmat.ket(0, 2), qmat.ket(1, 2), (qmat.ket(0, 2) + qmat.ket(1, 2)) / np.sqrt(2)
    # factor 0 goes to position 2, factor 1 to 0, factor 2 to 1
    p = qmat.permutation_operator((2, 0, 1), 2)
    np.testing.assert_allclose(p @ np.kron(np.kron(a, b), c), np.kron(np.kron(b, c), a))
