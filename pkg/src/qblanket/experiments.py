"""Concrete channels: the mixed-field Ising chain, the four textbook channels,
and the compatible measure-and-prepare pair with distinct measurements."""

from __future__ import annotations

import csv
import io
import math
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .blanket import (
    certificate_for_report,
    greedy_blanket,
    greedy_path,
    report_from_path,
    steps_for,
    theorem1_certificate,
)
from .channels import (
    ChoiState,
    KrausChannel,
    MeasureAndPrepareChannel,
    choi_of_channel,
)
from .linalg import expm_hermitian, haar_ket, random_unitary, trace_norm
from .optimize import OptimizerConfig
from .state import MultipartiteState, random_state, reduced_matrix

MAX_SITES = 12
DEGENERACY_TOL = 1e-10


@dataclass(frozen=True)
class SpinChainConfig:
    n_total: int = 8
    g: float = -1.05
    h: float = 0.5
    t: float = 1.0

    def __post_init__(self):
        if self.n_total < 1:
            raise ValueError("n_total must be >= 1")
        if self.t < 0:
            raise ValueError("t must be >= 0")


# -- Ising chain ---------------------------------------------------------------


def ising_hamiltonian(n: int, g: float, h: float) -> np.ndarray:
    """H = -sum Z_i Z_{i+1} - g sum X_i - h sum Z_i, open boundary, site 0 leftmost in the kron order."""
    if n > MAX_SITES:
        raise ValueError(f"{n} sites exceeds the dense cap of {MAX_SITES}")
    D = 2**n
    idx = np.arange(D)
    bits = (idx[:, None] >> (n - 1 - np.arange(n))[None, :]) & 1
    z = 1 - 2 * bits
    diag = -np.sum(z[:, :-1] * z[:, 1:], axis=1) - h * np.sum(z, axis=1)
    H = np.diag(diag.astype(float))
    for i in range(n):
        flip = idx ^ (1 << (n - 1 - i))
        H[flip, idx] -= g
    return H


def chain_hamiltonian(cfg: SpinChainConfig) -> np.ndarray:
    return ising_hamiltonian(cfg.n_total, cfg.g, cfg.h)


def environment_ground_state(cfg: SpinChainConfig) -> tuple[np.ndarray, float, bool]:
    """Ground state of the chain restricted to the environment sites 1..n-1.

    Returns (ket, energy, degenerate); on degeneracy the lowest-index eigenvector is used.
    """
    w, v = np.linalg.eigh(ising_hamiltonian(cfg.n_total - 1, cfg.g, cfg.h))
    degenerate = bool(len(w) > 1 and w[1] - w[0] < DEGENERACY_TOL)
    if degenerate:
        warnings.warn("environment ground state is degenerate; using the lowest-index eigenvector")
    return v[:, 0].astype(complex), float(w[0]), degenerate


def spin_chain_channel(cfg: SpinChainConfig) -> KrausChannel:
    """rho_A -> U (rho_A (x) |psi0><psi0|) U^dagger with U = exp(-i H t); A is site 0."""
    if cfg.n_total < 2:
        raise ValueError("the chain needs A plus at least one environment site")
    psi0, _, _ = environment_ground_state(cfg)
    u = expm_hermitian(chain_hamiltonian(cfg), -1j * cfg.t)
    k = u @ np.kron(np.eye(2), psi0[:, None])
    return KrausChannel((k,), (2,) * cfg.n_total)


def spin_chain_choi(cfg: SpinChainConfig) -> ChoiState:
    return choi_of_channel(spin_chain_channel(cfg))


# -- (t, q) sweep of the spin chain -----------------------------------------

CSV_HEADER = ["t", "q", "alpha_q_bits", "bound_bits", "Q_indices", "runtime_s"]


def _fmt(x: float) -> str:
    return f"{x:.9g}"


def _sweep_one_time(args) -> list[dict]:
    t, qs, n_total, g, h, r_size, cfg = args
    start = time.perf_counter()
    choi = spin_chain_choi(SpinChainConfig(n_total, g, h, t))
    s = choi.state
    n_out = s.n - 1
    valid = [q for q in qs if steps_for(q, r_size) * r_size <= n_out]
    rows = []
    path = []
    path_time = time.perf_counter() - start
    if valid:
        m = max(steps_for(q, r_size) for q in valid)
        t0 = time.perf_counter()
        path = greedy_path(s, (0,), r_size, m, cfg)
        path_time += time.perf_counter() - t0
    for q in qs:
        if q not in valid:
            rows.append({"t": t, "q": q, "alpha_q_bits": math.nan, "bound_bits": math.nan,
                         "Q_indices": (), "runtime_s": 0.0, "error": "not enough outputs for q"})
            continue
        rep = report_from_path(s, (0,), r_size, q, path, cfg)
        # the path is shared across q; charge each cell the time of the steps it uses
        share = path_time * steps_for(q, r_size) / max(len(path), 1)
        rows.append({
            "t": t,
            "q": q,
            "alpha_q_bits": rep.alpha_q_bits,
            "bound_bits": rep.bound_bits,
            "Q_indices": rep.blanket,
            "measured_Q": rep.Q,
            "bottleneck_bits": rep.bottleneck_bits,
            "step_values": rep.step_values,
            "entropy_a_bits": rep.entropy_a_bits,
            "runtime_s": share,
            "error": "",
        })
    return rows


def figure3_sweep(
    times: Sequence[float],
    qs: Sequence[int],
    cfg: OptimizerConfig,
    n_total: int = 8,
    g: float = -1.05,
    h: float = 0.5,
    r_size: int = 1,
    workers: int = 1,
) -> list[dict]:
    """alpha_Q of the greedy blanket of the spin-chain Choi state for every (t, q).

    One greedy path per time is computed with enough steps for the largest q
    and sliced for smaller q; step results do not depend on how many steps are
    run, so each slice equals a separate greedy_blanket call.
    """
    if n_total > 10:
        raise ValueError("the sweep is limited to n_total <= 10")
    jobs = [(float(t), list(qs), n_total, g, h, r_size, cfg) for t in times]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_sweep_one_time, jobs))
    else:
        chunks = [_sweep_one_time(j) for j in jobs]
    return [row for chunk in chunks for row in chunk]


def rows_to_csv(rows: Iterable[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow([
            _fmt(r["t"]),
            r["q"],
            _fmt(r["alpha_q_bits"]),
            _fmt(r["bound_bits"]),
            ";".join(str(i) for i in r["Q_indices"]),
            _fmt(r["runtime_s"]),
        ])
    return buf.getvalue()


# -- textbook channels ---------------------------------------------------------


def constant_channel(sigma: np.ndarray, d_in: int = 2, out_dims: Sequence[int] = ()) -> KrausChannel:
    w, v = np.linalg.eigh(sigma)
    ops = [
        np.sqrt(lam) * np.outer(vec, np.eye(d_in)[i])
        for lam, vec in zip(w, v.T)
        if lam > 1e-15
        for i in range(d_in)
    ]
    return KrausChannel(tuple(ops), tuple(out_dims) or (sigma.shape[0],))


def isometry_channel(v: np.ndarray, out_dims: Sequence[int]) -> KrausChannel:
    return KrausChannel((np.asarray(v),), tuple(out_dims))


def ghz_isometry(n: int = 3) -> KrausChannel:
    """|0> -> |0...0>, |1> -> |1...1>."""
    v = np.zeros((2**n, 2))
    v[0, 0] = v[-1, 1] = 1.0
    return isometry_channel(v, (2,) * n)


def identity_to_first(n: int, rest: np.ndarray) -> KrausChannel:
    """Send A to B1 unchanged and prepare the pure state `rest` on B2..Bn."""
    v = np.kron(np.eye(2), np.asarray(rest).reshape(-1, 1))
    return isometry_channel(v, (2,) * n)


def haar_isometry(n: int, rng: np.random.Generator) -> KrausChannel:
    return isometry_channel(random_unitary(2**n, rng)[:, :2], (2,) * n)


def analytic_examples_check(cfg: OptimizerConfig | None = None, samples: int = 500, seed: int = 7) -> dict:
    """Greedy blanket plus certificate on the constant, Haar-isometry, identity-to-B1 and GHZ channels."""
    cfg = cfg or OptimizerConfig(restarts=8, seed=seed)
    rng = np.random.default_rng(seed)
    zero_tol = 1e-6
    out = {}

    sigma = random_state((2, 2, 2), rng).rho
    const = choi_of_channel(constant_channel(sigma, 2, (2, 2, 2)))
    rep = greedy_blanket(const.state, (0,), 1, 1, cfg)
    cert_empty = theorem1_certificate(const, [], 1, cfg, q_size=0, samples=samples, seed=seed)
    cert = certificate_for_report(const, rep, cfg, samples=samples, seed=seed)
    out["constant"] = {
        "step_values": rep.step_values,
        "alpha_q_bits": rep.alpha_q_bits,
        "distance_empty_Q": cert_empty.max_distance,
        "distance_greedy_Q": cert.max_distance,
        "ok": cert_empty.max_distance <= zero_tol and cert.max_distance <= zero_tol,
    }

    ghz = choi_of_channel(ghz_isometry(3))
    rep = greedy_blanket(ghz.state, (0,), 1, 2, cfg)
    cert_empty = theorem1_certificate(
        ghz, [], 1, cfg, q_size=0, samples=samples, seed=seed, reference_basis=np.eye(2)
    )
    cert = certificate_for_report(ghz, rep, cfg, samples=samples, seed=seed)
    out["ghz"] = {
        "step_values": rep.step_values,
        "Q": list(rep.Q),
        "distance_empty_Q_z_basis": cert_empty.max_distance,
        "distance_greedy_Q": cert.max_distance,
        "ok": cert_empty.max_distance <= zero_tol and cert.max_distance <= zero_tol,
    }

    ident = choi_of_channel(identity_to_first(3, haar_ket(4, rng)))
    rep = greedy_blanket(ident.state, (0,), 1, 1, cfg)
    cert = certificate_for_report(ident, rep, cfg, samples=samples, seed=seed)
    out["identity_to_B1"] = {
        "step_values": rep.step_values,
        "Q": list(rep.Q),
        "distance_Q1": cert.max_distance,
        "ok": rep.Q == (1,) and cert.max_distance <= zero_tol,
    }

    haar = choi_of_channel(haar_isometry(5, rng))
    rep = greedy_blanket(haar.state, (0,), 1, 2, cfg)
    cert = certificate_for_report(haar, rep, cfg, samples=samples, seed=seed)
    out["haar_isometry"] = {
        "step_values": rep.step_values,
        "Q": list(rep.Q),
        "alpha_q_bits": cert.alpha_q_bits,
        "max_distance": cert.max_distance,
        "alpha_bound": cert.rows[0].alpha_bound if cert.rows else None,
        "ok": cert.ok,
    }
    out["ok"] = all(v["ok"] for v in out.values() if isinstance(v, dict))
    return out


# -- compatible channels with distinct measurements ----------------------------

WINDOW = (0.5 - 1 / (2 * math.sqrt(2)), 0.5 + 1 / (2 * math.sqrt(2)))

_KET0 = np.array([1.0, 0.0])
_KET1 = np.array([0.0, 1.0])
_PLUS = np.array([1.0, 1.0]) / math.sqrt(2)
_MINUS = np.array([1.0, -1.0]) / math.sqrt(2)


def _proj(v: np.ndarray) -> np.ndarray:
    return np.outer(v, v.conj())


def appendix_b_choi(p: float) -> MultipartiteState:
    """Candidate joint Choi operator on (A, B1, B2); positive only inside WINDOW."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")

    def ket(a, b, c):
        return np.kron(np.kron(a, b), c)

    k000 = ket(_KET0, _KET0, _KET0)
    k001 = ket(_KET0, _KET0, _KET1)
    k1p0 = ket(_KET1, _PLUS, _KET0)
    k1p1 = ket(_KET1, _PLUS, _KET1)
    rho = 0.25 * (_proj(k000) + _proj(k001)) + 0.25 * (_proj(k1p0) + _proj(k1p1))
    cross = (math.sqrt(2) / 2) * (p - 0.5) * (np.outer(k000, k1p0) - np.outer(k001, k1p1))
    rho = rho + cross + cross.conj().T
    return MultipartiteState(rho, (2, 2, 2), ("A", "B1", "B2"), positive=False)


def compatible_pair_channels(p: float) -> tuple[MeasureAndPrepareChannel, MeasureAndPrepareChannel]:
    """Lambda_1: Z measurement preparing |0>, |+>.  Lambda_2: X measurement preparing rho_+, rho_-."""
    rho_p = np.diag([p, 1 - p])
    rho_m = np.diag([1 - p, p])
    lam1 = MeasureAndPrepareChannel((_proj(_KET0), _proj(_KET1)), (_proj(_KET0), _proj(_PLUS)))
    lam2 = MeasureAndPrepareChannel((_proj(_PLUS), _proj(_MINUS)), (rho_p, rho_m))
    return lam1, lam2


def appendix_b_check(points: int = 201) -> dict:
    grid = np.linspace(0.0, 1.0, points)
    min_eigs = []
    marg_dev = 0.0
    for p in grid:
        st = appendix_b_choi(float(p))
        min_eigs.append(float(np.linalg.eigvalsh(st.rho)[0]))
        lam1, lam2 = compatible_pair_channels(float(p))
        marg_dev = max(
            marg_dev,
            float(np.max(np.abs(reduced_matrix(st.rho, st.dims, [0, 1]) - lam1.choi_matrix()))),
            float(np.max(np.abs(reduced_matrix(st.rho, st.dims, [0, 2]) - lam2.choi_matrix()))),
        )
    min_eigs = np.array(min_eigs)
    positive = grid[min_eigs >= -1e-9]
    window = [float(positive.min()), float(positive.max())] if positive.size else [math.nan, math.nan]
    step = 1.0 / (points - 1)
    window_ok = bool(
        positive.size
        and abs(window[0] - WINDOW[0]) <= step
        and abs(window[1] - WINDOW[1]) <= step
        and np.all((grid[min_eigs >= -1e-9] >= WINDOW[0] - 1e-12) & (grid[min_eigs >= -1e-9] <= WINDOW[1] + 1e-12))
    )
    boundary = [float(np.linalg.eigvalsh(appendix_b_choi(p).rho)[0]) for p in WINDOW]

    witness_dev = 0.0
    incompatible = True
    for p in grid:
        _, lam2 = compatible_pair_channels(float(p))
        d = trace_norm(lam2.apply(_proj(_PLUS)) - lam2.apply(_proj(_MINUS)))
        witness_dev = max(witness_dev, abs(d - 2 * abs(2 * p - 1)))
        if WINDOW[0] <= p <= WINDOW[1] and abs(p - 0.5) > 1e-12 and d <= 1e-12:
            incompatible = False
    report = {
        "grid": {"points": points, "lo": 0.0, "hi": 1.0},
        "positive_window_detected": window,
        "expected": [round(WINDOW[0], 7), round(WINDOW[1], 7)],
        "boundary_min_eigenvalues": boundary,
        "marginals_match": marg_dev <= 1e-10,
        "marginal_max_deviation": marg_dev,
        "witness_max_deviation": witness_dev,
        "incompatibility_witnessed": incompatible,
    }
    report["ok"] = bool(
        window_ok
        and max(abs(b) for b in boundary) <= 1e-8
        and report["marginals_match"]
        and witness_dev <= 1e-12
        and incompatible
    )
    return report
