import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qblanket.linalg import (
    LinalgError,
    clip_spectrum,
    eigh,
    eigvalsh,
    expm_hermitian,
    kron,
    random_hermitian,
    random_unitary,
    shannon_bits,
    trace_norm,
)

Z = np.diag([1.0, -1.0])
X = np.array([[0.0, 1.0], [1.0, 0.0]])
KET0 = np.array([1.0, 0.0])
PLUS = np.array([1.0, 1.0]) / math.sqrt(2)


def test_eigh_identity_and_pauli_z():
    assert np.allclose(eigh(np.eye(2)).eigenvalues, [1, 1])
    assert np.allclose(eigh(Z).eigenvalues, [-1, 1])


def test_eigh_reconstructs_random_hermitian(rng):
    h = random_hermitian(8, rng)
    e = eigh(h)
    v, lam = e.eigenvectors, e.eigenvalues
    assert np.max(np.abs(v @ np.diag(lam) @ v.conj().T - h)) <= 1e-10
    assert np.max(np.abs(e.reconstruct() - h)) <= 1e-10


@pytest.mark.parametrize("d", [2, 3, 5, 8, 16, 33, 64])
def test_eigh_orthonormal_and_ascending(d, rng):
    for _ in range(100 // 7 + 1):
        h = random_hermitian(d, rng)
        e = eigh(h)
        assert np.all(np.diff(e.eigenvalues) >= 0)
        assert np.max(np.abs(e.eigenvectors.conj().T @ e.eigenvectors - np.eye(d))) <= 1e-10
        assert np.max(np.abs(e.reconstruct() - h)) <= 1e-10


def test_eigh_rejects_bad_input():
    with pytest.raises(LinalgError):
        eigh(np.ones((2, 3)))
    with pytest.raises(LinalgError):
        eigh(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_eigh_symmetrizes_small_drift():
    m = np.array([[1.0, 0.5 + 1e-12], [0.5, 2.0]])
    assert np.allclose(eigvalsh(m), np.linalg.eigvalsh(0.5 * (m + m.T)))


def test_expm_zero_and_pauli_z():
    assert np.allclose(expm_hermitian(np.zeros((3, 3)), 2.5 - 1j), np.eye(3))
    assert np.allclose(expm_hermitian(Z, -1j * math.pi / 2), np.diag([-1j, 1j]))


def test_expm_matches_scipy(rng):
    from scipy.linalg import expm

    h = random_hermitian(6, rng)
    assert np.max(np.abs(expm_hermitian(h, -0.7j) - expm(-0.7j * h))) <= 1e-10


@given(st.floats(-20, 20), st.integers(0, 2**32 - 1))
@settings(max_examples=30, deadline=None)
def test_expm_unitary_for_real_time(t, seed):
    h = random_hermitian(5, np.random.default_rng(seed))
    u = expm_hermitian(h, -1j * t)
    assert np.max(np.abs(u @ u.conj().T - np.eye(5))) <= 1e-10
    assert np.max(np.abs(u @ expm_hermitian(h, 1j * t) - np.eye(5))) <= 1e-10


def test_expm_rejects_non_hermitian():
    with pytest.raises(LinalgError):
        expm_hermitian(np.array([[0.0, 1.0], [0.0, 0.0]]), 1j)


def test_kron_examples(rng):
    assert np.array_equal(kron(np.eye(2), np.eye(2)), np.eye(4))
    k = kron(np.outer(KET0, KET0), X)
    assert np.count_nonzero(k[2:, :]) == 0 and np.count_nonzero(k[:, 2:]) == 0
    a, b, c, d = (rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)) for _ in range(4))
    assert np.max(np.abs(kron(a, b) @ kron(c, d) - kron(a @ c, b @ d))) <= 1e-12
    assert kron(a, b, c).shape == (8, 8)


def test_trace_norm_examples(rng):
    from qblanket.state import random_state

    assert math.isclose(trace_norm(random_state((2, 3), rng).rho), 1.0, abs_tol=1e-12)
    assert math.isclose(trace_norm(np.diag([1.0, -1.0])), 2.0)
    diff = np.outer(KET0, KET0) - np.outer(PLUS, PLUS)
    assert math.isclose(trace_norm(diff), math.sqrt(2), abs_tol=1e-12)


def test_trace_norm_non_hermitian_matches_svd(rng):
    m = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    assert math.isclose(trace_norm(m), np.linalg.svd(m, compute_uv=False).sum(), rel_tol=1e-12)
    with pytest.raises(LinalgError):
        trace_norm(np.ones((2, 3)))


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=40, deadline=None)
def test_trace_norm_triangle_inequality(seed):
    r = np.random.default_rng(seed)
    a, b, c = (random_hermitian(4, r) for _ in range(3))
    assert trace_norm(a - c) <= trace_norm(a - b) + trace_norm(b - c) + 1e-10


def test_clip_spectrum():
    assert np.array_equal(clip_spectrum(np.array([-1e-13, 0.5])), [0.0, 0.5])
    with pytest.raises(LinalgError):
        clip_spectrum(np.array([-1e-6, 1.0]))


def test_shannon_bits():
    assert shannon_bits(np.array([0.5, 0.5])) == 1.0
    assert shannon_bits(np.array([1.0, 0.0])) == 0.0


def test_random_unitary_is_unitary(rng):
    u = random_unitary(7, rng)
    assert np.max(np.abs(u.conj().T @ u - np.eye(7))) <= 1e-12
