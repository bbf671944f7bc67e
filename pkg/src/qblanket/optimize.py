"""Derivative-free maximization over rank-1 projective measurements.

Each restart runs Nelder-Mead over the d^2 real parameters of U = exp(iH).
Restart 0 starts from H = 0 (the computational basis); the others start from
random points.  Every restart draws from its own RNG stream, derived from the
master seed and a caller-supplied key, so results do not depend on the order
in which cells of a larger grid are evaluated.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize

from .measurement import ProjectiveMeasurement, unitary_from_params


@dataclass(frozen=True)
class OptimizerConfig:
    restarts: int = 8
    max_iters: int = 400
    tol: float = 1e-10
    seed: int = 0
    initial_step: float = 0.6

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.tol <= 0:
            raise ValueError("tol must be > 0")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")


def restart_rng(cfg: OptimizerConfig, key: Sequence[int], restart: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(cfg.seed), spawn_key=tuple(int(k) for k in key) + (int(restart),))
    return np.random.default_rng(ss)


def maximize_unitary(
    objective: Callable[[np.ndarray], float],
    d: int,
    cfg: OptimizerConfig,
    key: Sequence[int] = (),
) -> tuple[np.ndarray, float]:
    """Maximize objective(U) over d x d unitaries; return the best (U, value) seen."""
    if d == 1:
        u = np.ones((1, 1), dtype=complex)
        return u, float(objective(u))

    npar = d * d

    def neg(theta):
        return -float(objective(unitary_from_params(theta, d)))

    best_theta = np.zeros(npar)
    best_val = -neg(best_theta)
    for k in range(cfg.restarts):
        if k == 0:
            x0 = np.zeros(npar)
        else:
            x0 = restart_rng(cfg, key, k).uniform(-np.pi, np.pi, npar)
        simplex = np.vstack([x0, x0 + cfg.initial_step * np.eye(npar)])
        res = minimize(
            neg,
            x0,
            method="Nelder-Mead",
            options={
                "initial_simplex": simplex,
                "maxiter": cfg.max_iters,
                "maxfev": 2 * cfg.max_iters,
                "xatol": cfg.tol,
                "fatol": cfg.tol,
            },
        )
        val = -float(res.fun)
        if val > best_val:
            best_val, best_theta = val, np.asarray(res.x)
    return unitary_from_params(best_theta, d), best_val


def optimize_measurement(
    objective: Callable[[ProjectiveMeasurement], float],
    reg: Sequence[int],
    dim: int,
    cfg: OptimizerConfig,
    key: Sequence[int] = (),
) -> tuple[ProjectiveMeasurement, float]:
    """Best rank-1 projective measurement on `reg` (joint dimension `dim`) for `objective`.

    The returned value is the objective at the returned measurement, hence a
    lower bound on the true maximum.
    """
    reg = tuple(reg)
    u, val = maximize_unitary(lambda u: objective(ProjectiveMeasurement(reg, u)), dim, cfg, key)
    return ProjectiveMeasurement(reg, u), val
