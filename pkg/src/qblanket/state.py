"""Multipartite density matrices and the entropic quantities defined on them.

All entropies are in bits.  Regions are sorted tuples of subsystem positions;
reduced states keep the subsystems in their original order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .linalg import HERMITIAN_TOL, LinalgError, clip_spectrum, haar_ket, shannon_bits

STATE_TOL = 1e-10

Region = tuple[int, ...]


class StateError(ValueError):
    """Invalid state data or an invalid choice of regions."""


# -- regions -----------------------------------------------------------------


def region(indices: Iterable[int] = ()) -> Region:
    return tuple(sorted({int(i) for i in indices}))


def union(*regions: Iterable[int]) -> Region:
    return region(i for r in regions for i in r)


def complement(n: int, *regions: Iterable[int]) -> Region:
    taken = set(union(*regions))
    return tuple(i for i in range(n) if i not in taken)


def disjoint(*regions: Iterable[int]) -> bool:
    seen: set[int] = set()
    for r in regions:
        r = set(r)
        if seen & r:
            return False
        seen |= r
    return True


# -- the state type ------------------------------------------------------------


@dataclass(frozen=True)
class MultipartiteState:
    """Density matrix on an ordered tensor product of subsystems.

    Construction checks shape, Hermiticity and unit trace.  Positivity is
    checked too unless ``positive=False`` is passed, which is how operators
    that are only candidate states (e.g. while scanning a parameter) are held.
    """

    rho: np.ndarray
    dims: tuple[int, ...]
    labels: tuple[str, ...] = ()
    positive: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        rho = np.array(self.rho, dtype=complex)
        dims = tuple(int(d) for d in self.dims)
        if any(d < 1 for d in dims) or not dims:
            raise StateError(f"subsystem dimensions must be positive: {dims}")
        D = int(np.prod(dims))
        if rho.shape != (D, D):
            raise StateError(f"rho has shape {rho.shape}, dims {dims} require ({D}, {D})")
        dev = np.max(np.abs(rho - rho.conj().T))
        if dev > HERMITIAN_TOL:
            raise StateError(f"rho is not Hermitian (deviation {dev:.3e})")
        rho = 0.5 * (rho + rho.conj().T)
        tr = np.trace(rho).real
        if abs(tr - 1.0) > STATE_TOL:
            raise StateError(f"rho has trace {tr!r}, expected 1")
        if self.positive:
            lam = np.linalg.eigvalsh(rho)[0]
            if lam < -STATE_TOL:
                raise StateError(f"rho has negative eigenvalue {lam:.3e}")
        labels = tuple(self.labels) if self.labels else tuple(f"S{i}" for i in range(len(dims)))
        if len(labels) != len(dims):
            raise StateError("labels and dims differ in length")
        rho.setflags(write=False)
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return len(self.dims)

    @property
    def dim(self) -> int:
        return self.rho.shape[0]

    def index(self, label: str) -> int:
        return self.labels.index(label)

    def region_dim(self, r: Iterable[int]) -> int:
        return int(np.prod([self.dims[i] for i in r], dtype=int))

    def check_region(self, r: Iterable[int], allow_empty: bool = True) -> Region:
        r = region(r)
        if not r and not allow_empty:
            raise StateError("region must be nonempty")
        if r and (r[0] < 0 or r[-1] >= self.n):
            raise StateError(f"region {r} out of range for {self.n} subsystems")
        return r


# -- core operations -----------------------------------------------------------


def reduced_matrix(rho: np.ndarray, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Partial trace of a dense matrix onto the subsystems in `keep` (in the given order)."""
    dims = list(dims)
    n = len(dims)
    keep = list(keep)
    if not keep:
        return np.array([[np.trace(rho)]])
    if keep == list(range(n)):
        return np.asarray(rho)
    traced = [i for i in range(n) if i not in keep]
    dk = int(np.prod([dims[i] for i in keep]))
    dt = int(np.prod([dims[i] for i in traced], dtype=int))
    t = np.asarray(rho).reshape(dims + dims)
    perm = keep + traced
    t = t.transpose(perm + [n + i for i in perm]).reshape(dk, dt, dk, dt)
    return np.einsum("ajbj->ab", t)


def partial_trace(s: MultipartiteState, keep: Iterable[int]) -> MultipartiteState:
    keep = s.check_region(keep, allow_empty=False)
    red = reduced_matrix(s.rho, s.dims, keep)
    return MultipartiteState(
        red, tuple(s.dims[i] for i in keep), tuple(s.labels[i] for i in keep), positive=False
    )


def entropy_of_matrix(rho: np.ndarray, tol: float = STATE_TOL) -> float:
    """Von Neumann entropy in bits of a (possibly sub-normalized) positive matrix."""
    w = np.linalg.eigvalsh(0.5 * (rho + np.conj(np.swapaxes(rho, -1, -2))))
    try:
        w = clip_spectrum(w, tol)
    except LinalgError as exc:
        raise StateError(str(exc)) from None
    return shannon_bits(w)


def von_neumann_entropy(s: MultipartiteState) -> float:
    return entropy_of_matrix(s.rho)


def marginal_entropy(s: MultipartiteState, r: Iterable[int]) -> float:
    r = s.check_region(r)
    if not r:
        return 0.0
    return entropy_of_matrix(reduced_matrix(s.rho, s.dims, r))


def _require_disjoint(s: MultipartiteState, *regions) -> list[Region]:
    rs = [s.check_region(r) for r in regions]
    if not disjoint(*rs):
        raise StateError(f"regions overlap: {rs}")
    return rs


def mutual_information(s: MultipartiteState, x: Iterable[int], y: Iterable[int]) -> float:
    """I(X:Y) = S(X) + S(Y) - S(XY)."""
    x, y = _require_disjoint(s, x, y)
    return marginal_entropy(s, x) + marginal_entropy(s, y) - marginal_entropy(s, union(x, y))


def conditional_mutual_information(
    s: MultipartiteState, x: Iterable[int], y: Iterable[int], z: Iterable[int] = ()
) -> float:
    """I(X:Y|Z) = S(XZ) + S(YZ) - S(Z) - S(XYZ)."""
    x, y, z = _require_disjoint(s, x, y, z)
    return (
        marginal_entropy(s, union(x, z))
        + marginal_entropy(s, union(y, z))
        - marginal_entropy(s, z)
        - marginal_entropy(s, union(x, y, z))
    )


def chain_rule_check(s: MultipartiteState, x: Iterable[int], parts: Sequence[Iterable[int]]) -> float:
    """|I(X:Y1..Yn) - sum_i I(X:Yi|Y1..Y(i-1))| for the given ordered parts."""
    x, *parts = _require_disjoint(s, x, *parts)
    total = mutual_information(s, x, union(*parts))
    acc = 0.0
    for i, p in enumerate(parts):
        acc += conditional_mutual_information(s, x, p, union(*parts[:i]))
    return abs(total - acc)


def relative_entropy(rho: MultipartiteState, sigma: MultipartiteState) -> float:
    """D(rho||sigma) in bits; ``math.inf`` when supp(rho) is not inside supp(sigma)."""
    if rho.dims != sigma.dims:
        raise StateError(f"dimension mismatch: {rho.dims} vs {sigma.dims}")
    lam, r = np.linalg.eigh(rho.rho)
    mu, v = np.linalg.eigh(sigma.rho)
    lam = clip_spectrum(lam, STATE_TOL)
    mu = clip_spectrum(mu, STATE_TOL)
    # weight of rho's eigenvectors on each eigenvector of sigma
    overlap = np.abs(v.conj().T @ r) ** 2
    weight_on = overlap @ lam
    null = mu <= STATE_TOL
    if np.any(weight_on[null] > STATE_TOL):
        return math.inf
    log_mu = np.zeros_like(mu)
    log_mu[~null] = np.log2(mu[~null])
    return float(-shannon_bits(lam) - np.dot(weight_on, log_mu))


# -- constructors --------------------------------------------------------------


def product_state(*states: MultipartiteState) -> MultipartiteState:
    rho = states[0].rho
    for s in states[1:]:
        rho = np.kron(rho, s.rho)
    return MultipartiteState(
        rho,
        tuple(d for s in states for d in s.dims),
        tuple(lab for s in states for lab in s.labels),
    )


def pure_state(ket, dims: Sequence[int], labels: Sequence[str] = ()) -> MultipartiteState:
    ket = np.asarray(ket, dtype=complex).ravel()
    ket = ket / np.linalg.norm(ket)
    return MultipartiteState(np.outer(ket, ket.conj()), tuple(dims), tuple(labels))


def maximally_mixed(d: int, label: str = "") -> MultipartiteState:
    return MultipartiteState(np.eye(d) / d, (d,), (label,) if label else ())


def bell_state() -> MultipartiteState:
    return pure_state([1, 0, 0, 1], (2, 2), ("A", "B"))


def ghz_state(n: int = 3) -> MultipartiteState:
    ket = np.zeros(2**n)
    ket[0] = ket[-1] = 1.0
    return pure_state(ket, (2,) * n)


def random_state(
    dims: Sequence[int], rng: np.random.Generator, labels: Sequence[str] = ()
) -> MultipartiteState:
    """Generic full-rank state: trace out an ancilla of equal dimension from a Haar pure state."""
    d = int(np.prod(dims))
    psi = haar_ket(d * d, rng).reshape(d, d)
    return MultipartiteState(psi @ psi.conj().T, tuple(dims), tuple(labels))


def random_pure_state(
    dims: Sequence[int], rng: np.random.Generator, labels: Sequence[str] = ()
) -> MultipartiteState:
    return pure_state(haar_ket(int(np.prod(dims)), rng), dims, labels)


# -- serialization ---------------------------------------------------------------


def state_to_dict(s: MultipartiteState) -> dict:
    """JSON-ready {dims, labels, rho_real, rho_imag}."""
    return {
        "dims": list(s.dims),
        "labels": list(s.labels),
        "rho_real": s.rho.real.tolist(),
        "rho_imag": s.rho.imag.tolist(),
    }


def state_from_dict(data: dict) -> MultipartiteState:
    try:
        dims = tuple(data["dims"])
        rho = np.asarray(data["rho_real"], dtype=float)
        if "rho_imag" in data:
            rho = rho + 1j * np.asarray(data["rho_imag"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise StateError(f"malformed state data: {exc}") from None
    return MultipartiteState(rho, dims, tuple(data.get("labels", ())))
