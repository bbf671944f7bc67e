"""Greedy search for quantum Markov blankets and the quantities derived from one.

The search grows a conditioning set one region at a time.  At every step each
eligible region S is scored by max_M I(A:S|S_1..S_{i-1}) evaluated after the
already-chosen measurements and M have been applied; the best (region,
measurement) pair is frozen and the search moves on.  The step with the
smallest score is the bottleneck and the regions before it form the blanket Q.

Scores are evaluated on classical-quantum blocks: measuring the conditioning
regions of the reduced state on A, S and the earlier regions leaves one
(unnormalized) operator on A (x) S per joint outcome, so every objective call
only touches small matrices.  Each block set is re-derived from the original
state; nothing is updated in place.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Sequence

import numpy as np

from .channels import (
    ChoiState,
    Ensemble,
    apply_choi_matrix,
    ensemble_to_mp_channel,
    max_output_distance,
)
from .linalg import kron, trace_norm
from .measurement import ProjectiveMeasurement, apply_measurements
from .optimize import OptimizerConfig, maximize_unitary
from .state import (
    MultipartiteState,
    Region,
    StateError,
    complement,
    conditional_mutual_information,
    disjoint,
    marginal_entropy,
    reduced_matrix,
    region,
    union,
)

TIE_TOL = 1e-9
SUM_SLACK = 1e-6
OPTIMIZER_SLACK = 1e-3
MIN_PROB = 1e-12

__version__ = "0.1.0"


class BlanketError(ValueError):
    pass


# -- classical-quantum blocks --------------------------------------------------


def outcome_blocks(
    rho: np.ndarray,
    dims: Sequence[int],
    front: Sequence[int],
    measured: Sequence[ProjectiveMeasurement],
) -> np.ndarray:
    """Unnormalized post-measurement operators on the `front` subsystems.

    Returns an array W of shape (K, d, d): W[x] = <v_x| rho_{front,P} |v_x>_P
    where P is the union of the measured regions and v_x runs over the product
    of their measured bases (K = dim P).  Subsystem order in `front` is kept.
    """
    front = list(front)
    cond = [i for m in measured for i in m.region]
    keep = front + cond
    red = reduced_matrix(rho, dims, keep)
    df = int(np.prod([dims[i] for i in front], dtype=int))
    dp = int(np.prod([dims[i] for i in cond], dtype=int))
    if not measured:
        return red.reshape(1, df, df)
    v = kron(*[m.unitary for m in measured])
    t = red.reshape(df, dp, df, dp)
    return np.einsum("px,ipjq,qx->xij", v.conj(), t, v, optimize=True)


def _entropy_bits(w: np.ndarray) -> float:
    w = w[w > 0.0]
    return float(-np.sum(w * np.log2(w)))


def _batch_eigvalsh(m: np.ndarray) -> np.ndarray:
    """Eigenvalues of a stack of Hermitian matrices; closed form for 2 x 2."""
    if m.shape[-1] != 2:
        return np.linalg.eigvalsh(m)
    a = m[..., 0, 0].real
    d = m[..., 1, 1].real
    mid = 0.5 * (a + d)
    rad = np.sqrt((0.5 * (a - d)) ** 2 + np.abs(m[..., 0, 1]) ** 2)
    return np.stack([mid - rad, mid + rad], axis=-1)


class CMIEvaluator:
    """I(A:T|P) after measuring P with fixed measurements and T with a variable basis."""

    def __init__(self, blocks: np.ndarray, d_a: int, d_t: int):
        k = blocks.shape[0]
        self.w = blocks.reshape(k, d_a, d_t, d_a, d_t)
        self.d_a, self.d_t = d_a, d_t
        probs = np.einsum("xitit->x", self.w).real
        sig_a = np.einsum("xitjt->xij", self.w)
        self.const = _entropy_bits(_batch_eigvalsh(sig_a).ravel()) - _entropy_bits(probs)

    def __call__(self, u: np.ndarray) -> float:
        tau = np.einsum("tb,xitjb->xbij", u.conj(), self.w @ u)
        pt = np.einsum("xbii->xb", tau).real
        lam = _batch_eigvalsh(tau)
        return self.const + _entropy_bits(pt.ravel()) - _entropy_bits(lam.ravel())


def _cell_key(cond: Sequence[ProjectiveMeasurement], target: Sequence[int]) -> tuple[int, ...]:
    key = [len(cond)]
    for m in cond:
        key += [len(m.region), *m.region]
    key += [len(target), *target]
    return tuple(key)


def score_region(
    s: MultipartiteState,
    a: Region,
    cond: Sequence[ProjectiveMeasurement],
    target: Region,
    cfg: OptimizerConfig,
) -> tuple[ProjectiveMeasurement, float]:
    """max over measurements M_T of I(A:T|P) on M_T M_P(s), with P the measured regions in `cond`."""
    blocks = outcome_blocks(s.rho, s.dims, list(a) + list(target), cond)
    ev = CMIEvaluator(blocks, s.region_dim(a), s.region_dim(target))
    u, val = maximize_unitary(ev, s.region_dim(target), cfg, _cell_key(cond, target))
    return ProjectiveMeasurement(target, u), val


def measured_cmi(
    s: MultipartiteState,
    a: Region,
    cond: Sequence[ProjectiveMeasurement],
    target: ProjectiveMeasurement,
) -> float:
    blocks = outcome_blocks(s.rho, s.dims, list(a) + list(target.region), cond)
    return CMIEvaluator(blocks, s.region_dim(a), s.region_dim(target.region))(target.unitary)


# -- greedy path ---------------------------------------------------------------


@dataclass(frozen=True)
class Candidate:
    region: Region
    measurement: ProjectiveMeasurement
    cmi_bits: float


@dataclass(frozen=True)
class BlanketStep:
    region: Region
    measurement: ProjectiveMeasurement
    cmi_bits: float
    candidates: tuple[Candidate, ...] = field(default=(), repr=False, compare=False)


def _pick(cands: Sequence[Candidate]) -> Candidate:
    top = max(c.cmi_bits for c in cands)
    # candidates arrive in lexicographic order, so the first near-maximal one wins ties
    return next(c for c in cands if c.cmi_bits >= top - TIE_TOL)


def _best_over_regions(s, a, cond, regions, cfg) -> list[Candidate]:
    out = []
    for reg in regions:
        m, val = score_region(s, a, cond, reg, cfg)
        out.append(Candidate(reg, m, val))
    return out


def greedy_path(
    s: MultipartiteState, a: Sequence[int], r_size: int, steps: int, cfg: OptimizerConfig
) -> list[BlanketStep]:
    """Run `steps` greedy steps; every eligible region is scored at every step."""
    a = s.check_region(a, allow_empty=False)
    pool = complement(s.n, a)
    if r_size < 1:
        raise BlanketError("region size must be >= 1")
    if steps * r_size > len(pool):
        raise BlanketError(
            f"{steps} steps of size {r_size} need {steps * r_size} subsystems, only {len(pool)} available"
        )
    path: list[BlanketStep] = []
    for _ in range(steps):
        used = union(a, *(st.region for st in path))
        eligible = list(combinations(complement(s.n, used), r_size))
        cands = _best_over_regions(s, a, [st.measurement for st in path], eligible, cfg)
        best = _pick(cands)
        path.append(BlanketStep(best.region, best.measurement, best.cmi_bits, tuple(cands)))
    return path


def steps_for(q: int, r_size: int) -> int:
    return 1 + q // r_size


def greedy_bound(entropy_a: float, q: int, r_size: int) -> float:
    return entropy_a / steps_for(q, r_size)


@dataclass
class BlanketReport:
    a_region: Region
    r_size: int
    q: int
    steps: list[BlanketStep]
    bottleneck_index: int  # 1-based
    Q: Region
    M_Q: list[ProjectiveMeasurement]
    padding: Region
    alpha_q_bits: float
    bound_bits: float
    entropy_a_bits: float
    seed: int = 0
    config: dict = field(default_factory=dict)

    @property
    def step_values(self) -> list[float]:
        return [st.cmi_bits for st in self.steps]

    @property
    def bottleneck_bits(self) -> float:
        return self.steps[self.bottleneck_index - 1].cmi_bits

    @property
    def blanket(self) -> Region:
        """Q together with its padding (the excluded region of size q)."""
        return union(self.Q, self.padding)

    def violations(self, slack: float = OPTIMIZER_SLACK) -> list[str]:
        out = []
        total = sum(self.step_values)
        if total > self.entropy_a_bits + SUM_SLACK:
            out.append(f"sum of step values {total:.9g} exceeds S(A) = {self.entropy_a_bits:.9g}")
        if min(self.step_values) > self.entropy_a_bits / len(self.steps) + SUM_SLACK:
            out.append("smallest step value exceeds S(A)/m")
        if self.bottleneck_bits > self.bound_bits + slack:
            out.append(f"bottleneck value {self.bottleneck_bits:.9g} exceeds bound {self.bound_bits:.9g}")
        if len(self.Q) != self.r_size * (self.bottleneck_index - 1) or len(self.Q) > self.q:
            out.append("blanket size inconsistent with bottleneck index")
        if self.alpha_q_bits < -1e-9:
            out.append("alpha_Q is negative")
        return out

    def to_dict(self) -> dict:
        return {
            "parameters": {
                "A": list(self.a_region),
                "r": self.r_size,
                "q": self.q,
                "m": len(self.steps),
                "entropy_a_bits": self.entropy_a_bits,
                **self.config,
            },
            "steps": [
                {
                    "region": list(st.region),
                    "cmi_bits": st.cmi_bits,
                    "measurement_unitary": unitary_to_pairs(st.measurement.unitary),
                }
                for st in self.steps
            ],
            "bottleneck_index": self.bottleneck_index,
            "Q": list(self.Q),
            "padding": list(self.padding),
            "alpha_q_bits": self.alpha_q_bits,
            "bound_bits": self.bound_bits,
            "seed": self.seed,
            "version": __version__,
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def unitary_to_pairs(u: np.ndarray) -> list[list[float]]:
    """Row-major list of [re, im] pairs."""
    return [[float(z.real), float(z.imag)] for z in np.asarray(u).ravel()]


def unitary_from_pairs(pairs: Sequence[Sequence[float]]) -> np.ndarray:
    z = np.array([complex(re, im) for re, im in pairs])
    d = math.isqrt(len(z))
    return z.reshape(d, d)


def bottleneck(values: Sequence[float]) -> int:
    """1-based index of the first step within TIE_TOL of the minimum."""
    lo = min(values)
    return next(i for i, v in enumerate(values) if v <= lo + TIE_TOL) + 1


def report_from_path(
    s: MultipartiteState,
    a: Region,
    r_size: int,
    q: int,
    path: Sequence[BlanketStep],
    cfg: OptimizerConfig,
) -> BlanketReport:
    """Assemble the report for parameter q from the first 1 + q // r_size steps of a path."""
    m = steps_for(q, r_size)
    if len(path) < m:
        raise BlanketError(f"path has {len(path)} steps, q = {q} needs {m}")
    steps = list(path[:m])
    b = bottleneck([st.cmi_bits for st in steps])
    before = steps[: b - 1]
    Q = union(*(st.region for st in before))
    free = complement(s.n, a, Q)
    padding = region(free[: max(0, q - len(Q))])
    # alpha_Q: the bottleneck step already maximized over every region outside Q
    eligible = [c for c in steps[b - 1].candidates if disjoint(c.region, padding)]
    alpha = max((c.cmi_bits for c in eligible), default=0.0)
    s_a = marginal_entropy(s, a)
    return BlanketReport(
        a_region=region(a),
        r_size=r_size,
        q=q,
        steps=steps,
        bottleneck_index=b,
        Q=Q,
        M_Q=[st.measurement for st in before],
        padding=padding,
        alpha_q_bits=alpha,
        bound_bits=greedy_bound(s_a, q, r_size),
        entropy_a_bits=s_a,
        seed=cfg.seed,
        config={"restarts": cfg.restarts, "max_iters": cfg.max_iters, "tol": cfg.tol},
    )


def greedy_blanket(
    s: MultipartiteState, a: Sequence[int], r_size: int, q: int, cfg: OptimizerConfig
) -> BlanketReport:
    """Greedy blanket with m = 1 + floor(q / r_size) steps."""
    a = s.check_region(a, allow_empty=False)
    if r_size < 1 or q < r_size:
        raise BlanketError(f"need 1 <= r_size <= q, got r_size={r_size}, q={q}")
    path = greedy_path(s, a, r_size, steps_for(q, r_size), cfg)
    return report_from_path(s, a, r_size, q, path, cfg)


# -- alpha_Q -------------------------------------------------------------------


def alpha_q_detail(
    s: MultipartiteState,
    a: Sequence[int],
    q_region: Sequence[int],
    m_q: Sequence[ProjectiveMeasurement],
    r_size: int,
    cfg: OptimizerConfig,
) -> Candidate:
    a = s.check_region(a, allow_empty=False)
    q_region = union(q_region, *(m.region for m in m_q))
    if not disjoint(a, q_region):
        raise BlanketError("A and Q overlap")
    eligible = list(combinations(complement(s.n, a, q_region), r_size))
    if not eligible:
        raise BlanketError("no region of the requested size lies outside A and Q")
    return _pick(_best_over_regions(s, a, list(m_q), eligible, cfg))


def alpha_q(
    s: MultipartiteState,
    a: Sequence[int],
    q_region: Sequence[int],
    m_q: Sequence[ProjectiveMeasurement],
    r_size: int,
    cfg: OptimizerConfig,
) -> float:
    """max over regions R outside A and Q and measurements M_R of I(A:R|Q) on M_R M_Q(s).

    Subsystems of `q_region` not covered by `m_q` are excluded from R but not
    measured (trivial one-outcome measurement).
    """
    return alpha_q_detail(s, a, q_region, m_q, r_size, cfg).cmi_bits


# -- separable reconstruction --------------------------------------------------


def separable_reconstruction(
    s: MultipartiteState,
    a: Sequence[int],
    r: Sequence[int],
    m_q: Sequence[ProjectiveMeasurement],
) -> tuple[Ensemble, float, float]:
    """Ensemble obtained by conditioning on the outcomes of M_Q.

    Returns ({p_x, rho_A^x, sigma_R^x}, eps, sqrt(2 ln2 eps)) with
    eps = I(A:R|Q) evaluated on M_Q(s).
    """
    a, r = s.check_region(a, allow_empty=False), s.check_region(r, allow_empty=False)
    q = union(*(m.region for m in m_q))
    if not disjoint(a, r, q):
        raise BlanketError("regions A, R, Q must be disjoint")
    d_a, d_r = s.region_dim(a), s.region_dim(r)
    blocks = outcome_blocks(s.rho, s.dims, list(a) + list(r), m_q)
    probs, sa, sr = [], [], []
    for w in blocks:
        p = float(np.trace(w).real)
        if p < MIN_PROB:
            continue
        t = (w / p).reshape(d_a, d_r, d_a, d_r)
        probs.append(p)
        sa.append(np.einsum("ijkj->ik", t))
        sr.append(np.einsum("ijil->jl", t))
    probs = np.array(probs)
    probs = probs / probs.sum()
    ens = Ensemble(probs, tuple(sa), tuple(sr))

    keep = union(a, r, q)
    sub = MultipartiteState(reduced_matrix(s.rho, s.dims, keep), tuple(s.dims[i] for i in keep), positive=False)
    pos = {old: new for new, old in enumerate(keep)}
    moved = [ProjectiveMeasurement([pos[i] for i in m.region], m.unitary) for m in m_q]
    measured = apply_measurements(sub, moved)
    eps = conditional_mutual_information(
        measured, [pos[i] for i in a], [pos[i] for i in r], [pos[i] for i in q]
    )
    return ens, eps, math.sqrt(2 * math.log(2) * max(eps, 0.0))


def reconstruction_distance(s: MultipartiteState, a: Sequence[int], r: Sequence[int], ens: Ensemble) -> float:
    """||rho_AR - sum_x p_x rho_A^x (x) sigma_R^x||_1."""
    keep = list(region(a)) + list(region(r))
    rho_ar = reduced_matrix(s.rho, s.dims, keep)
    return trace_norm(rho_ar - ens.separable_matrix())


def reference_ensemble(choi: ChoiState, r: Sequence[int], basis: np.ndarray) -> Ensemble:
    """Ensemble from measuring the reference A' itself in `basis`: {p_a, |u_a><u_a|, sigma_R^a}."""
    red = choi.reduced(r).matrix
    d_a = choi.d_a
    d_r = red.shape[0] // d_a
    t = red.reshape(d_a, d_r, d_a, d_r)
    u = np.asarray(basis)
    probs, sa, sr = [], [], []
    for k in range(d_a):
        v = u[:, k]
        blk = np.einsum("i,ibjc,j->bc", v.conj(), t, v)
        p = float(np.trace(blk).real)
        if p < MIN_PROB:
            continue
        probs.append(p)
        sa.append(np.outer(v, v.conj()))
        sr.append(blk / p)
    probs = np.array(probs)
    return Ensemble(probs / probs.sum(), tuple(sa), tuple(sr))


# -- channel certificate -------------------------------------------------------


@dataclass
class RegionCertificate:
    region: Region
    distance: float
    alpha_bound: float
    prior_bound: float
    separable_distance: float

    @property
    def alpha_bound_ok(self) -> bool:
        return self.distance <= self.alpha_bound + OPTIMIZER_SLACK

    @property
    def prior_bound_ok(self) -> bool:
        return self.distance <= self.prior_bound + 1e-9


@dataclass
class ChannelCertificate:
    d_a: int
    Q: Region
    q_size: int
    alpha_q_bits: float
    construction: str
    povm: list[np.ndarray]
    povm_shared: bool
    rows: list[RegionCertificate]

    @property
    def max_distance(self) -> float:
        return max((row.distance for row in self.rows), default=0.0)

    @property
    def ok(self) -> bool:
        rows_ok = all(row.prior_bound_ok for row in self.rows)
        if self.construction == "conditioning":
            rows_ok = rows_ok and all(row.alpha_bound_ok for row in self.rows)
        return rows_ok and self.povm_shared

    def to_dict(self) -> dict:
        return {
            "d_a": self.d_a,
            "Q": list(self.Q),
            "q_size": self.q_size,
            "alpha_q_bits": self.alpha_q_bits,
            "construction": self.construction,
            "povm_shared": self.povm_shared,
            "rows": [
                {
                    "R": list(row.region),
                    "max_output_distance": row.distance,
                    "alpha_bound": row.alpha_bound,
                    "prior_bound": row.prior_bound,
                    "choi_separable_distance": row.separable_distance,
                }
                for row in self.rows
            ],
            "ok": self.ok,
        }


def theorem1_certificate(
    choi: ChoiState,
    m_q: Sequence[ProjectiveMeasurement],
    r_size: int,
    cfg: OptimizerConfig,
    *,
    q_size: int | None = None,
    exclude: Sequence[int] = (),
    samples: int = 500,
    seed: int | None = None,
    reference_basis: np.ndarray | None = None,
) -> ChannelCertificate:
    """Check reduced channels outside the blanket against measure-and-prepare approximations.

    For every output region R of size `r_size` outside Q (the measured
    regions of `m_q`) and `exclude`, E_R is built from the ensemble obtained
    by conditioning on M_Q (one POVM for all R).  The largest output distance
    ||Lambda_R(rho) - E_R(rho)||_1 over `samples` Haar-random pure inputs is
    compared with d_A sqrt(2 ln2 alpha_Q) and with d_A sqrt(2 ln d_A |R| / q_size).

    With `reference_basis` and no M_Q, the ensemble instead comes from
    measuring the reference in that basis; only the a-priori bound applies then.
    """
    s = choi.state
    d_a = choi.d_a
    a = (0,)
    Q = union(*(m.region for m in m_q))
    excluded = union(Q, exclude)
    q_size = len(excluded) if q_size is None else q_size
    regions = list(combinations(complement(s.n, a, excluded), r_size))
    alpha = alpha_q(s, a, excluded, m_q, r_size, cfg) if regions else 0.0
    construction = "reference" if (reference_basis is not None and not m_q) else "conditioning"
    prior_rhs = d_a * math.sqrt(2 * math.log(d_a) * r_size / q_size) if q_size > 0 else math.inf
    alpha_rhs = d_a * math.sqrt(2 * math.log(2) * max(alpha, 0.0))

    rng_seed = cfg.seed if seed is None else seed
    rows, povms = [], []
    for reg in regions:
        if construction == "reference":
            ens = reference_ensemble(choi, reg, reference_basis)
        else:
            ens, _, _ = separable_reconstruction(s, a, reg, m_q)
        e = ensemble_to_mp_channel(ens, tuple(s.dims[i] for i in reg))
        povms.append(e.povm)
        red = choi.reduced(reg)
        sep_dist = trace_norm(red.matrix - ens.separable_matrix())
        dist = max_output_distance(
            lambda t: apply_choi_matrix(red.matrix, d_a, t),
            e.apply,
            d_a,
            samples,
            np.random.default_rng(rng_seed),
        )
        rows.append(RegionCertificate(tuple(reg), dist, alpha_rhs, prior_rhs, sep_dist))
    shared = all(
        len(p) == len(povms[0]) and all(np.allclose(x, y, atol=1e-9) for x, y in zip(p, povms[0]))
        for p in povms
    )
    return ChannelCertificate(
        d_a, Q, q_size, alpha, construction, list(povms[0]) if povms else [], shared, rows
    )


def certificate_for_report(
    choi: ChoiState, report: BlanketReport, cfg: OptimizerConfig, samples: int = 500, seed: int | None = None
) -> ChannelCertificate:
    if report.a_region != (0,):
        raise StateError("the certificate needs A to be the Choi reference (subsystem 0)")
    return theorem1_certificate(
        choi, report.M_Q, report.r_size, cfg, q_size=report.q, exclude=report.padding, samples=samples, seed=seed
    )
