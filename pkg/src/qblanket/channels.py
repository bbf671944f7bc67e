"""Channel representations and the distances between them.

Choi states are normalized density matrices, rho = Lambda(|G><G|) with
|G> = d^(-1/2) sum_i |i>_{A'} |i>_A and the reference A' placed first.  The
transpose in the inverse map is taken in that computational basis, and the
factor d_A appears only there.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .linalg import haar_ket, trace_norm
from .measurement import ProjectiveMeasurement, apply_qc_channel, dephase  # noqa: F401
from .optimize import OptimizerConfig, optimize_measurement
from .state import STATE_TOL, MultipartiteState, StateError, reduced_matrix

TP_TOL = 1e-10
CHOI_MARGINAL_TOL = 1e-9
POVM_TOL = 1e-10
POVM_RENORM_TOL = 1e-8


class ChannelError(ValueError):
    pass


def _labels(n: int) -> tuple[str, ...]:
    return tuple(f"B{i + 1}" for i in range(n))


@dataclass(frozen=True)
class KrausChannel:
    kraus_ops: tuple[np.ndarray, ...]
    out_dims: tuple[int, ...]

    def __post_init__(self):
        ops = tuple(np.array(k, dtype=complex) for k in self.kraus_ops)
        if not ops:
            raise ChannelError("need at least one Kraus operator")
        shape = ops[0].shape
        if any(k.shape != shape for k in ops):
            raise ChannelError("Kraus operators have inconsistent shapes")
        out_dims = tuple(int(d) for d in self.out_dims) if self.out_dims else (shape[0],)
        if int(np.prod(out_dims)) != shape[0]:
            raise ChannelError(f"output dims {out_dims} do not match Kraus shape {shape}")
        s = sum(k.conj().T @ k for k in ops)
        dev = np.max(np.abs(s - np.eye(shape[1])))
        if dev > TP_TOL:
            raise ChannelError(f"Kraus set is not trace preserving (deviation {dev:.3e})")
        object.__setattr__(self, "kraus_ops", ops)
        object.__setattr__(self, "out_dims", out_dims)

    @property
    def dim_in(self) -> int:
        return self.kraus_ops[0].shape[1]

    @property
    def dim_out(self) -> int:
        return self.kraus_ops[0].shape[0]

    def apply(self, tau: np.ndarray) -> np.ndarray:
        return sum(k @ tau @ k.conj().T for k in self.kraus_ops)

    def apply_state(self, s: MultipartiteState) -> MultipartiteState:
        return MultipartiteState(self.apply(s.rho), self.out_dims, _labels(len(self.out_dims)), positive=False)


@dataclass(frozen=True)
class ChoiState:
    """Choi state on A' (x) B1 ... Bn; subsystem 0 of `state` is the reference A'."""

    state: MultipartiteState

    def __post_init__(self):
        d_a = self.state.dims[0]
        marg = reduced_matrix(self.state.rho, self.state.dims, [0])
        dev = np.max(np.abs(marg - np.eye(d_a) / d_a))
        if dev > CHOI_MARGINAL_TOL:
            raise ChannelError(f"reference marginal is not maximally mixed (deviation {dev:.3e})")

    @property
    def d_a(self) -> int:
        return self.state.dims[0]

    @property
    def out_dims(self) -> tuple[int, ...]:
        return self.state.dims[1:]

    @property
    def matrix(self) -> np.ndarray:
        return self.state.rho

    def reduced(self, outputs: Sequence[int]) -> "ChoiState":
        """Choi state of the reduced channel onto `outputs` (state indices, i.e. 1-based)."""
        keep = [0] + sorted(int(i) for i in outputs)
        if 0 in keep[1:]:
            raise ChannelError("the reference subsystem is not an output")
        st = self.state
        red = reduced_matrix(st.rho, st.dims, keep)
        return ChoiState(
            MultipartiteState(red, tuple(st.dims[i] for i in keep), tuple(st.labels[i] for i in keep), positive=False)
        )


def choi_matrix_from_kraus(kraus_ops: Sequence[np.ndarray]) -> np.ndarray:
    d_in = kraus_ops[0].shape[1]
    vecs = [np.asarray(k).T.ravel() / np.sqrt(d_in) for k in kraus_ops]
    return sum(np.outer(v, v.conj()) for v in vecs)


def choi_of_channel(c: KrausChannel) -> ChoiState:
    rho = choi_matrix_from_kraus(c.kraus_ops)
    dims = (c.dim_in,) + c.out_dims
    return ChoiState(MultipartiteState(rho, dims, ("A'",) + _labels(len(c.out_dims))))


def apply_choi_matrix(choi: np.ndarray, d_a: int, tau: np.ndarray) -> np.ndarray:
    """d_A Tr_{A'}[choi (tau^T (x) 1)]."""
    tau = np.asarray(tau)
    if tau.shape != (d_a, d_a):
        raise ChannelError(f"input of shape {tau.shape} does not match d_A = {d_a}")
    d_b = choi.shape[0] // d_a
    c = np.asarray(choi).reshape(d_a, d_b, d_a, d_b)
    return d_a * np.einsum("ibjc,ij->bc", c, tau)


def channel_of_choi(choi: ChoiState, inp: MultipartiteState) -> MultipartiteState:
    if inp.dim != choi.d_a:
        raise ChannelError(f"input dimension {inp.dim} != d_A = {choi.d_a}")
    out = apply_choi_matrix(choi.matrix, choi.d_a, inp.rho)
    return MultipartiteState(out, choi.out_dims, choi.state.labels[1:], positive=False)


def kraus_of_choi(choi: ChoiState, tol: float = 1e-12) -> KrausChannel:
    """Kraus operators from the eigendecomposition of d_A * choi."""
    d_a = choi.d_a
    d_b = choi.matrix.shape[0] // d_a
    w, v = np.linalg.eigh(choi.matrix)
    ops = []
    for lam, vec in zip(w, v.T):
        if lam > tol:
            ops.append(np.sqrt(lam * d_a) * vec.reshape(d_a, d_b).T)
    return KrausChannel(tuple(ops), choi.out_dims)


# -- measurement channels ------------------------------------------------------


@dataclass(frozen=True)
class MeasureAndPrepareChannel:
    """rho -> sum_a Tr(M_a rho) sigma_a."""

    povm: tuple[np.ndarray, ...]
    prepared: tuple[np.ndarray, ...]
    out_dims: tuple[int, ...] = ()

    def __post_init__(self):
        povm = tuple(np.array(m, dtype=complex) for m in self.povm)
        prep = tuple(np.array(s, dtype=complex) for s in self.prepared)
        if len(povm) != len(prep) or not povm:
            raise ChannelError("need one prepared state per POVM element")
        d = povm[0].shape[0]
        for m in povm:
            if np.max(np.abs(m - m.conj().T)) > POVM_TOL or np.linalg.eigvalsh(m)[0] < -POVM_TOL:
                raise ChannelError("POVM element is not positive semidefinite")
        dev = np.max(np.abs(sum(povm) - np.eye(d)))
        if dev > POVM_TOL:
            raise ChannelError(f"POVM does not sum to the identity (deviation {dev:.3e})")
        for s in prep:
            MultipartiteState(s, (s.shape[0],))
        out_dims = tuple(self.out_dims) if self.out_dims else (prep[0].shape[0],)
        object.__setattr__(self, "povm", povm)
        object.__setattr__(self, "prepared", prep)
        object.__setattr__(self, "out_dims", out_dims)

    @property
    def d_in(self) -> int:
        return self.povm[0].shape[0]

    def apply(self, tau: np.ndarray) -> np.ndarray:
        return sum(np.trace(m @ tau) * s for m, s in zip(self.povm, self.prepared))

    def choi_matrix(self) -> np.ndarray:
        """sum_a p_a rho_a (x) sigma_a with p_a = Tr M_a / d_A and rho_a = M_a^T / Tr M_a."""
        d = self.d_in
        return sum(np.kron(m.T, s) for m, s in zip(self.povm, self.prepared)) / d

    def to_kraus(self) -> KrausChannel:
        ops = []
        for m, s in zip(self.povm, self.prepared):
            wm, vm = np.linalg.eigh(m)
            ws, vs = np.linalg.eigh(s)
            for a, ma in zip(wm, vm.T):
                if a <= 1e-15:
                    continue
                for b, sb in zip(ws, vs.T):
                    if b <= 1e-15:
                        continue
                    ops.append(np.sqrt(a * b) * np.outer(sb, ma.conj()))
        return KrausChannel(tuple(ops), self.out_dims)


def measure_prepare_apply(e: MeasureAndPrepareChannel, inp: MultipartiteState) -> MultipartiteState:
    if inp.dim != e.d_in:
        raise ChannelError(f"input dimension {inp.dim} != POVM dimension {e.d_in}")
    return MultipartiteState(e.apply(inp.rho), e.out_dims, positive=False)


@dataclass(frozen=True)
class Ensemble:
    """Members (p_a, rho_A^a, sigma_R^a)."""

    probabilities: np.ndarray
    states_a: tuple[np.ndarray, ...]
    states_r: tuple[np.ndarray, ...]

    def __post_init__(self):
        p = np.asarray(self.probabilities, dtype=float)
        if np.any(p < -STATE_TOL) or abs(p.sum() - 1.0) > STATE_TOL:
            raise ChannelError("ensemble probabilities must be nonnegative and sum to 1")
        if not (len(p) == len(self.states_a) == len(self.states_r)):
            raise ChannelError("ensemble members have inconsistent lengths")
        for s in (*self.states_a, *self.states_r):
            MultipartiteState(s, (s.shape[0],))
        object.__setattr__(self, "probabilities", p)

    def __len__(self) -> int:
        return len(self.probabilities)

    def separable_matrix(self) -> np.ndarray:
        return sum(p * np.kron(a, r) for p, a, r in zip(self.probabilities, self.states_a, self.states_r))


def _renormalize_povm(povm: list[np.ndarray], tol: float) -> list[np.ndarray]:
    d = povm[0].shape[0]
    total = sum(povm)
    dev = np.max(np.abs(total - np.eye(d)))
    if dev > tol:
        raise ChannelError(
            f"POVM completeness violated by {dev:.3e}; the ensemble does not come from a "
            "state with maximally mixed reference marginal"
        )
    if dev == 0.0:
        return povm
    w, v = np.linalg.eigh(0.5 * (total + total.conj().T))
    inv_sqrt = (v / np.sqrt(w)) @ v.conj().T
    return [inv_sqrt @ m @ inv_sqrt for m in povm]


def ensemble_to_mp_channel(e: Ensemble, out_dims: Sequence[int] = ()) -> MeasureAndPrepareChannel:
    """Measure-and-prepare channel whose Choi state is the ensemble's separable state.

    M_a = d_A p_a (rho_A^a)^T, preparations sigma_R^a.
    """
    d = e.states_a[0].shape[0]
    povm = [d * p * a.T for p, a in zip(e.probabilities, e.states_a)]
    povm = [0.5 * (m + m.conj().T) for m in _renormalize_povm(povm, POVM_RENORM_TOL)]
    return MeasureAndPrepareChannel(tuple(povm), tuple(e.states_r), tuple(out_dims))


# -- distances -----------------------------------------------------------------


def omega_factor(d_a: int, d_r: int) -> float:
    """Dimensional factor relating the trace norm to the one-way LOCC norm."""
    if d_a < 1 or d_r < 1:
        raise ValueError("dimensions must be >= 1")
    return float(
        min(d_a**2, 4 * d_a**1.5, 4 * d_r**1.5, math.sqrt(153 * d_a * d_r), 2 * d_r - 1)
    )


def locc_arrow_distance(
    s1: MultipartiteState,
    s2: MultipartiteState,
    cfg: OptimizerConfig | None = None,
    measured: Sequence[int] | None = None,
) -> float:
    """Heuristic one-way LOCC distance max_M ||(1 (x) M)(s1 - s2)||_1.

    The maximum runs over rank-1 projective measurements on `measured`
    (default: every subsystem after the first), so the value is a lower bound
    on the one-way LOCC norm and never exceeds the trace distance.
    """
    if s1.dims != s2.dims:
        raise StateError(f"dimension mismatch: {s1.dims} vs {s2.dims}")
    cfg = cfg or OptimizerConfig()
    reg = tuple(range(1, s1.n)) if measured is None else tuple(sorted(measured))
    diff = s1.rho - s2.rho
    dims = s1.dims

    def obj(m: ProjectiveMeasurement) -> float:
        return trace_norm(dephase(diff, dims, reg, m.unitary))

    _, val = optimize_measurement(obj, reg, s1.region_dim(reg), cfg)
    return val


def diamond_upper_bound(c1: ChoiState, c2: ChoiState) -> float:
    """d_A ||rho^N1 - rho^N2||_1, an upper bound on the diamond distance."""
    if c1.state.dims != c2.state.dims:
        raise ChannelError(f"Choi dimension mismatch: {c1.state.dims} vs {c2.state.dims}")
    return c1.d_a * trace_norm(c1.matrix - c2.matrix)


def max_output_distance(apply1, apply2, d_a: int, samples: int, rng: np.random.Generator) -> float:
    """max over Haar-random pure inputs of ||apply1(rho) - apply2(rho)||_1."""
    best = 0.0
    for _ in range(samples):
        v = haar_ket(d_a, rng)
        rho = np.outer(v, v.conj())
        best = max(best, trace_norm(apply1(rho) - apply2(rho)))
    return best
