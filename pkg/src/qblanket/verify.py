"""Property suites run by ``qblanket verify``.

Each suite returns a list of ``Check`` records; a suite passes when all of
its checks pass.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import permutations

import numpy as np

from .blanket import reconstruction_distance, separable_reconstruction
from .channels import (
    KrausChannel,
    apply_choi_matrix,
    choi_of_channel,
    reduced_matrix,
)
from .experiments import WINDOW, analytic_examples_check, appendix_b_check
from .linalg import haar_ket, random_unitary, trace_norm
from .measurement import ProjectiveMeasurement
from .state import (
    MultipartiteState,
    chain_rule_check,
    conditional_mutual_information,
    mutual_information,
    random_state,
    relative_entropy,
)


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}" + (f"  {self.detail}" if self.detail else "")


def random_kraus_channel(d_in: int, out_dims, n_kraus: int, rng: np.random.Generator) -> KrausChannel:
    """Random channel: n_kraus blocks of a Haar isometry d_in -> n_kraus * d_out."""
    d_out = int(np.prod(out_dims))
    v = random_unitary(n_kraus * d_out, rng)[:, :d_in]
    ops = tuple(v[k * d_out : (k + 1) * d_out] for k in range(n_kraus))
    return KrausChannel(ops, tuple(out_dims))


def ssa_suite(seed: int = 0, trials: int = 200) -> list[Check]:
    rng = np.random.default_rng(seed)
    worst = math.inf
    ok = 0
    for _ in range(trials):
        s = random_state((2, 2, 2, 2), rng)
        vals = [
            conditional_mutual_information(s, [x], [y], [z])
            for x, y, z in permutations(range(4), 3)
        ]
        vals.append(conditional_mutual_information(s, [0], [1], [2, 3]))
        worst = min(worst, min(vals))
        ok += min(vals) >= -1e-9
    return [Check("strong subadditivity", ok == trials, f"{ok}/{trials} states, min CMI {worst:.3e}")]


def chain_suite(seed: int = 0, trials: int = 100) -> list[Check]:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        s = random_state((2, 2, 2, 2), rng)
        worst = max(worst, chain_rule_check(s, [0], [[1], [2], [3]]))
    return [Check("chain rule", worst <= 1e-9, f"max residual {worst:.3e}")]


def pinsker_suite(seed: int = 0, trials: int = 200) -> list[Check]:
    rng = np.random.default_rng(seed)
    recon_gap = -math.inf
    pinsker_gap = -math.inf
    identity_dev = 0.0
    for _ in range(trials):
        s = random_state((2, 2, 2), rng)
        mq = ProjectiveMeasurement((2,), random_unitary(2, rng))
        ens, _, bound = separable_reconstruction(s, [0], [1], [mq])
        recon_gap = max(recon_gap, reconstruction_distance(s, [0], [1], ens) - bound)

        pair = random_state((2, 2), rng)
        rho_a = reduced_matrix(pair.rho, pair.dims, [0])
        rho_b = reduced_matrix(pair.rho, pair.dims, [1])
        prod = MultipartiteState(np.kron(rho_a, rho_b), (2, 2))
        d = relative_entropy(pair, prod)
        identity_dev = max(identity_dev, abs(d - mutual_information(pair, [0], [1])))
        pinsker_gap = max(pinsker_gap, trace_norm(pair.rho - prod.rho) ** 2 / (2 * math.log(2)) - d)
    return [
        Check("separable reconstruction within sqrt(2 ln2 eps)", recon_gap <= 1e-9, f"max excess {recon_gap:.3e}"),
        Check("I(A:B) = D(rho || rho_A x rho_B)", identity_dev <= 1e-9, f"max deviation {identity_dev:.3e}"),
        Check("Pinsker inequality", pinsker_gap <= 1e-9, f"max excess {pinsker_gap:.3e}"),
    ]


def choi_suite(seed: int = 0, trials: int = 100) -> list[Check]:
    rng = np.random.default_rng(seed)
    worst = 0.0
    marg = 0.0
    for _ in range(trials):
        c = random_kraus_channel(2, (2, 2), 3, rng)
        choi = choi_of_channel(c)
        rho = np.outer(*(lambda v: (v, v.conj()))(haar_ket(2, rng)))
        worst = max(worst, float(np.max(np.abs(apply_choi_matrix(choi.matrix, 2, rho) - c.apply(rho)))))
        marg = max(marg, float(np.max(np.abs(reduced_matrix(choi.matrix, choi.state.dims, [0]) - np.eye(2) / 2))))
    return [
        Check("Choi round trip", worst <= 1e-12, f"max deviation {worst:.3e}"),
        Check("Choi reference marginal maximally mixed", marg <= 1e-9, f"max deviation {marg:.3e}"),
    ]


def appendixb_suite() -> list[Check]:
    r = appendix_b_check()
    lo, hi = r["positive_window_detected"]
    elo, ehi = WINDOW
    return [
        Check(
            "compatible pair positivity window",
            r["ok"],
            f"window [{elo:.4f}, {ehi:.4f}] (grid detects [{lo:.4f}, {hi:.4f}])",
        ),
        Check("compatible pair marginals", r["marginals_match"], f"max deviation {r['marginal_max_deviation']:.3e}"),
    ]


def examples_suite(seed: int = 7) -> list[Check]:
    r = analytic_examples_check(seed=seed)
    return [Check(f"example {name}", v["ok"]) for name, v in r.items() if isinstance(v, dict)]


SUITES = {
    "ssa": ssa_suite,
    "chain": chain_suite,
    "pinsker": pinsker_suite,
    "choi": choi_suite,
    "appendixb": appendixb_suite,
    "examples": examples_suite,
}


def run_suite(name: str, seed: int = 0) -> list[Check]:
    if name == "all":
        return [c for key in SUITES for c in run_suite(key, seed)]
    fn = SUITES[name]
    return fn() if name == "appendixb" else fn(seed=seed)
