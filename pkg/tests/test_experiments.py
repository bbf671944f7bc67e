import csv
import io
import math

import numpy as np
import pytest

from qblanket.experiments import (
    CSV_HEADER,
    WINDOW,
    SpinChainConfig,
    analytic_examples_check,
    compatible_pair_channels,
    appendix_b_check,
    appendix_b_choi,
    environment_ground_state,
    figure3_sweep,
    ising_hamiltonian,
    rows_to_csv,
    spin_chain_channel,
    spin_chain_choi,
)
from qblanket.linalg import haar_ket, trace_norm
from qblanket.optimize import OptimizerConfig
from qblanket.state import reduced_matrix

I2 = np.eye(2)
X = np.array([[0.0, 1.0], [1.0, 0.0]])
Z = np.diag([1.0, -1.0])


def site_op(op, i, n):
    mats = [I2] * n
    mats[i] = op
    out = mats[0]
    for m in mats[1:]:
        out = np.kron(out, m)
    return out


def kron_sum_hamiltonian(n, g, h):
    """Oracle: the Hamiltonian term by term from explicit Kronecker products."""
    H = np.zeros((2**n, 2**n))
    for i in range(n - 1):
        H -= site_op(Z, i, n) @ site_op(Z, i + 1, n)
    for i in range(n):
        H -= g * site_op(X, i, n) + h * site_op(Z, i, n)
    return H


def test_ising_single_site():
    assert np.allclose(ising_hamiltonian(1, -1.05, 0.5), 1.05 * X - 0.5 * Z)


def test_ising_two_sites_no_fields():
    H = ising_hamiltonian(2, 0.0, 0.0)
    assert np.allclose(H, -np.kron(Z, Z))
    assert np.allclose(np.linalg.eigvalsh(H), [-1, -1, 1, 1])


@pytest.mark.parametrize("n", [2, 3, 5])
def test_ising_matches_kron_sum(n):
    H = ising_hamiltonian(n, -1.05, 0.5)
    assert np.array_equal(H, H.T)
    assert np.max(np.abs(H - kron_sum_hamiltonian(n, -1.05, 0.5))) <= 1e-12


def test_ising_cap():
    with pytest.raises(ValueError):
        ising_hamiltonian(13, 1.0, 1.0)


def test_ground_energy_decreases_with_n():
    energies = [np.linalg.eigvalsh(ising_hamiltonian(n, -1.05, 0.5))[0] for n in range(2, 9)]
    assert all(b < a for a, b in zip(energies, energies[1:]))


def test_degenerate_ground_state_is_flagged():
    with pytest.warns(UserWarning):
        _, _, degenerate = environment_ground_state(SpinChainConfig(3, 0.0, 0.0, 0.0))
    assert degenerate
    _, _, degenerate = environment_ground_state(SpinChainConfig(4))
    assert not degenerate


def test_spin_chain_config_validation():
    with pytest.raises(ValueError):
        SpinChainConfig(t=-1.0)
    with pytest.raises(ValueError):
        spin_chain_channel(SpinChainConfig(1))


def test_channel_at_time_zero_appends_ground_state(rng):
    cfg = SpinChainConfig(4, t=0.0)
    psi0, _, _ = environment_ground_state(cfg)
    c = spin_chain_channel(cfg)
    v = haar_ket(2, rng)
    rho = np.outer(v, v.conj())
    assert np.allclose(c.apply(rho), np.kron(rho, np.outer(psi0, psi0.conj())), atol=1e-12)


@pytest.mark.parametrize("t", [0.3, 1.0, 2.7])
def test_channel_is_isometric_and_preserves_purity(t, rng):
    c = spin_chain_channel(SpinChainConfig(4, t=t))
    k = c.kraus_ops[0]
    assert np.max(np.abs(k.conj().T @ k - I2)) <= 1e-10
    v = haar_ket(2, rng)
    out = c.apply(np.outer(v, v.conj()))
    assert abs(np.trace(out @ out).real - 1) <= 1e-10


def test_spin_chain_choi_marginal():
    choi = spin_chain_choi(SpinChainConfig(4, t=1.0))
    marg = reduced_matrix(choi.matrix, choi.state.dims, [0])
    assert np.max(np.abs(marg - I2 / 2)) <= 1e-10


SMALL = OptimizerConfig(restarts=3, seed=0)


def test_sweep_at_time_zero_is_decoupled():
    rows = figure3_sweep([0.0], [1, 2], SMALL, n_total=4)
    for row in rows:
        assert abs(row["alpha_q_bits"]) <= 1e-8
        assert row["measured_Q"] == (1,)


def test_sweep_bounds_and_error_rows():
    rows = figure3_sweep([0.8], [1, 2, 3, 4], SMALL, n_total=4)
    assert len(rows) == 4
    good = [r for r in rows if not r["error"]]
    assert [r["q"] for r in good] == [1, 2, 3]
    for r in good:
        assert -1e-9 <= r["alpha_q_bits"] <= r["bound_bits"] + 1e-3
        assert math.isclose(r["bound_bits"], r["entropy_a_bits"] / (1 + r["q"]))
        assert sum(r["step_values"]) <= r["entropy_a_bits"] + 1e-6
        assert len(r["Q_indices"]) == r["q"]
    bad = rows[3]
    assert math.isnan(bad["alpha_q_bits"]) and bad["error"]


def test_sweep_is_independent_of_worker_count():
    kw = dict(n_total=3)
    one = figure3_sweep([0.5, 1.5], [1, 2], SMALL, workers=1, **kw)
    two = figure3_sweep([0.5, 1.5], [1, 2], SMALL, workers=2, **kw)
    strip = lambda rows: [{k: v for k, v in r.items() if k != "runtime_s"} for r in rows]  # noqa: E731
    assert strip(one) == strip(two)


def test_csv_layout():
    rows = figure3_sweep([0.0], [1, 3], SMALL, n_total=3)
    text = rows_to_csv(rows)
    lines = text.splitlines()
    assert lines[0] == ",".join(CSV_HEADER)
    parsed = list(csv.DictReader(io.StringIO(text)))
    assert parsed[0]["Q_indices"] == "1"
    assert parsed[1]["alpha_q_bits"] == "nan"
    assert float(parsed[0]["bound_bits"]) == pytest.approx(0.5, abs=1e-8)


def test_compatible_pair_choi_structure(rng):
    half = appendix_b_choi(0.5)
    assert np.linalg.eigvalsh(half.rho)[0] >= -1e-12
    assert np.count_nonzero(np.abs(half.rho - np.diag(np.diag(half.rho))) > 1e-15) == 4  # |1+><1+| blocks only
    for p in rng.uniform(0, 1, 50):
        st = appendix_b_choi(float(p))
        assert abs(np.trace(st.rho).real - 1) <= 1e-12
        assert np.max(np.abs(st.rho - st.rho.conj().T)) <= 1e-12
    assert np.linalg.eigvalsh(appendix_b_choi(0.9).rho)[0] < 0
    with pytest.raises(ValueError):
        appendix_b_choi(1.5)


def test_compatible_pair_window_edges_are_exact():
    for edge in WINDOW:
        assert abs(np.linalg.eigvalsh(appendix_b_choi(edge).rho)[0]) <= 1e-12
    assert np.linalg.eigvalsh(appendix_b_choi(WINDOW[0] - 1e-3).rho)[0] < -1e-6
    assert np.linalg.eigvalsh(appendix_b_choi(WINDOW[1] + 1e-3).rho)[0] < -1e-6


def test_compatible_pair_marginals_and_witness():
    for p in np.linspace(0, 1, 11):
        st = appendix_b_choi(float(p))
        lam1, lam2 = compatible_pair_channels(float(p))
        assert np.max(np.abs(reduced_matrix(st.rho, st.dims, [0, 1]) - lam1.choi_matrix())) <= 1e-10
        assert np.max(np.abs(reduced_matrix(st.rho, st.dims, [0, 2]) - lam2.choi_matrix())) <= 1e-10
        plus = np.full((2, 2), 0.5)
        minus = np.array([[0.5, -0.5], [-0.5, 0.5]])
        assert abs(trace_norm(lam2.apply(plus) - lam2.apply(minus)) - 2 * abs(2 * p - 1)) <= 1e-12


def test_compatible_pair_check_report():
    r = appendix_b_check()
    assert r["ok"]
    assert r["expected"] == [0.1464466, 0.8535534]
    lo, hi = r["positive_window_detected"]
    assert WINDOW[0] <= lo <= WINDOW[0] + 1 / 200
    assert WINDOW[1] - 1 / 200 <= hi <= WINDOW[1]


def test_analytic_examples():
    r = analytic_examples_check(OptimizerConfig(restarts=4, seed=7), samples=100)
    assert r["ok"]
    assert r["constant"]["distance_empty_Q"] <= 1e-9
    assert r["ghz"]["distance_empty_Q_z_basis"] <= 1e-9
    assert r["identity_to_B1"]["Q"] == [1]
