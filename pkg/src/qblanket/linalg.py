"""Dense complex linear algebra used by every quantum object in the package.

Functions of Hermitian matrices (exponentials, logarithms, entropies) all go
through an eigendecomposition.  Matrices here are at most 1024 x 1024.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np

HERMITIAN_TOL = 1e-10
EIG_CLIP_TOL = 1e-12


class LinalgError(ValueError):
    """Raised when a matrix does not satisfy the structural precondition of an operation."""


@dataclass(frozen=True)
class HermitianEigen:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def as_matrix(m) -> np.ndarray:
    arr = np.asarray(m, dtype=complex)
    if arr.ndim != 2:
        raise LinalgError(f"expected a 2-d matrix, got shape {arr.shape}")
    return arr


def _require_square(m: np.ndarray) -> None:
    if m.shape[0] != m.shape[1]:
        raise LinalgError(f"matrix must be square, got shape {m.shape}")


def hermitian_part(m, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Return (M + M^dagger)/2 after checking that M is Hermitian to `tol` (max entry)."""
    m = as_matrix(m)
    _require_square(m)
    dev = np.max(np.abs(m - m.conj().T)) if m.size else 0.0
    if dev > tol:
        raise LinalgError(f"matrix is not Hermitian: max |M - M^dagger| = {dev:.3e}")
    return 0.5 * (m + m.conj().T)


def eigh(m, tol: float = HERMITIAN_TOL) -> HermitianEigen:
    """Eigendecomposition of a Hermitian matrix with ascending eigenvalues."""
    h = hermitian_part(m, tol)
    w, v = np.linalg.eigh(h)
    return HermitianEigen(w, v)


def eigvalsh(m, tol: float = HERMITIAN_TOL) -> np.ndarray:
    return np.linalg.eigvalsh(hermitian_part(m, tol))


def expm_hermitian(h, scale: complex) -> np.ndarray:
    """exp(scale * H) for Hermitian H, evaluated in the eigenbasis of H.

    With a purely imaginary `scale` the result is unitary.
    """
    e = eigh(h)
    return (e.eigenvectors * np.exp(scale * e.eigenvalues)) @ e.eigenvectors.conj().T


def kron(*mats) -> np.ndarray:
    """Kronecker product of one or more matrices (or vectors), left to right."""
    if not mats:
        return np.ones((1, 1), dtype=complex)
    return reduce(np.kron, (np.asarray(m) for m in mats))


def trace_norm(m) -> float:
    """Schatten 1-norm: the sum of singular values."""
    m = as_matrix(m)
    _require_square(m)
    if np.max(np.abs(m - m.conj().T), initial=0.0) <= HERMITIAN_TOL:
        return float(np.sum(np.abs(np.linalg.eigvalsh(0.5 * (m + m.conj().T)))))
    return float(np.sum(np.linalg.svd(m, compute_uv=False)))


def clip_spectrum(w: np.ndarray, tol: float = EIG_CLIP_TOL) -> np.ndarray:
    """Zero out eigenvalues in [-tol, 0); anything more negative is an error."""
    w = np.asarray(w, dtype=float)
    if w.size and w.min() < -tol:
        raise LinalgError(f"eigenvalue {w.min():.3e} is below the clipping tolerance -{tol:g}")
    return np.where(w < 0.0, 0.0, w)


def shannon_bits(w: np.ndarray) -> float:
    """-sum w log2 w over the strictly positive entries of w."""
    w = np.asarray(w, dtype=float).ravel()
    w = w[w > 0.0]
    return float(-np.sum(w * np.log2(w)))


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR of a complex Ginibre matrix with phase fix."""
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def random_hermitian(d: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return 0.5 * (z + z.conj().T)


def haar_ket(d: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return v / np.linalg.norm(v)
