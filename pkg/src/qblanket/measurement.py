"""Rank-1 projective measurements on a region and the quantum-classical channel they define.

A measurement is stored as a unitary whose columns are the measured basis of
the region's joint Hilbert space (subsystems in ascending order).  The
quantum-classical channel keeps the classical record in that same basis,
i.e. it acts as sum_a P_a rho P_a, so applying it twice is the same as once.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .linalg import expm_hermitian
from .state import MultipartiteState, Region, StateError, region

UNITARY_TOL = 1e-10


@dataclass(frozen=True)
class ProjectiveMeasurement:
    region: Region
    unitary: np.ndarray

    def __post_init__(self):
        u = np.array(self.unitary, dtype=complex)
        if u.ndim != 2 or u.shape[0] != u.shape[1]:
            raise StateError(f"measurement unitary must be square, got {u.shape}")
        dev = np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0])))
        if dev > UNITARY_TOL:
            raise StateError(f"measurement basis is not orthonormal (deviation {dev:.3e})")
        u.setflags(write=False)
        object.__setattr__(self, "unitary", u)
        object.__setattr__(self, "region", region(self.region))

    @property
    def dim(self) -> int:
        return self.unitary.shape[0]

    @property
    def projectors(self) -> list[np.ndarray]:
        u = self.unitary
        return [np.outer(u[:, a], u[:, a].conj()) for a in range(self.dim)]

    @classmethod
    def computational(cls, reg: Sequence[int], dim: int) -> "ProjectiveMeasurement":
        return cls(tuple(reg), np.eye(dim))


def hermitian_from_params(theta: np.ndarray, d: int) -> np.ndarray:
    """Hermitian d x d matrix from d^2 reals: diagonal, then real and imaginary upper parts."""
    theta = np.asarray(theta, dtype=float)
    h = np.diag(theta[:d]).astype(complex)
    iu = np.triu_indices(d, 1)
    m = len(iu[0])
    off = theta[d : d + m] + 1j * theta[d + m : d + 2 * m]
    h[iu] = off
    h[(iu[1], iu[0])] = off.conj()
    return h


def unitary_from_params(theta: np.ndarray, d: int) -> np.ndarray:
    """U = exp(i H(theta))."""
    if d == 1:
        return np.ones((1, 1), dtype=complex)
    return expm_hermitian(hermitian_from_params(theta, d), 1j)


def dephase(rho: np.ndarray, dims: Sequence[int], reg: Sequence[int], unitary: np.ndarray) -> np.ndarray:
    """sum_a (P_a (x) 1) rho (P_a (x) 1) with P_a the projectors onto the columns of `unitary` on `reg`."""
    dims = list(dims)
    n = len(dims)
    reg = list(reg)
    rest = [i for i in range(n) if i not in reg]
    dr = int(np.prod([dims[i] for i in reg]))
    do = int(np.prod([dims[i] for i in rest], dtype=int))
    perm = reg + rest
    t = np.asarray(rho).reshape(dims + dims).transpose(perm + [n + i for i in perm])
    t = t.reshape(dr, do, dr, do)
    u = np.asarray(unitary)
    # rotate to the measured basis, keep the diagonal in the region index, rotate back
    t = np.einsum("ai,ibjc,jd->abdc", u.conj().T, t, u, optimize=True)
    diag = np.einsum("abac->abc", t)
    t = np.einsum("ia,abc,ja->ibjc", u, diag, u.conj(), optimize=True)
    inv = np.argsort(perm)
    t = t.reshape([dims[i] for i in perm] * 2).transpose(list(inv) + [n + i for i in inv])
    D = int(np.prod(dims))
    return t.reshape(D, D)


def apply_qc_channel(s: MultipartiteState, m: ProjectiveMeasurement) -> MultipartiteState:
    reg = s.check_region(m.region, allow_empty=False)
    if s.region_dim(reg) != m.dim:
        raise StateError(f"measurement of dimension {m.dim} does not fit region {reg} of {s.dims}")
    out = dephase(s.rho, s.dims, reg, m.unitary)
    return MultipartiteState(out, s.dims, s.labels, positive=False)


def apply_measurements(s: MultipartiteState, ms: Sequence[ProjectiveMeasurement]) -> MultipartiteState:
    for m in ms:
        s = apply_qc_channel(s, m)
    return s
