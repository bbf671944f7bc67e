"""Command-line interface: ``qblanket {blanket,spinchain,verify,appendixb}``.

Exit codes: 0 success, 1 verification failure, 2 usage or config error,
3 numerical invariant violation.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from .blanket import (
    OPTIMIZER_SLACK,
    SUM_SLACK,
    BlanketError,
    __version__,
    certificate_for_report,
    greedy_blanket,
)
from .channels import ChannelError, ChoiState, choi_of_channel
from .experiments import (
    SpinChainConfig,
    appendix_b_check,
    constant_channel,
    figure3_sweep,
    ghz_isometry,
    haar_isometry,
    identity_to_first,
    rows_to_csv,
    spin_chain_choi,
)
from .linalg import haar_ket
from .optimize import OptimizerConfig
from .state import MultipartiteState, StateError, random_state, state_from_dict
from .verify import SUITES, run_suite

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_INVARIANT = 0, 1, 2, 3
EXAMPLES = ("ghz", "constant", "identity", "haar")


class ConfigError(Exception):
    pass


def log(msg: str) -> None:
    print(msg, file=sys.stderr, flush=True)


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(json.dumps(cfg, sort_keys=True).encode()).hexdigest()[:16]


def load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        data = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    return {k.replace("-", "_"): v for k, v in data.items()}


def resolve(args: argparse.Namespace, defaults: dict) -> dict:
    """Flags win over the config file, which wins over the defaults."""
    file_cfg = load_config(getattr(args, "config", None))
    unknown = set(file_cfg) - set(defaults)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    out = {}
    for key, default in defaults.items():
        flag = getattr(args, key, None)
        out[key] = flag if flag is not None else file_cfg.get(key, default)
    return out


def optimizer_config(cfg: dict) -> OptimizerConfig:
    try:
        return OptimizerConfig(restarts=int(cfg["restarts"]), max_iters=int(cfg["opt_iters"]), seed=int(cfg["seed"]))
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def write_output(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    try:
        Path(out).write_text(text)
    except OSError as exc:
        raise ConfigError(f"cannot write {out}: {exc}") from None
    log(f"wrote {out}")


def parse_range(spec) -> list[int]:
    """'1..8' -> [1..8]; '1,3,5' -> [1, 3, 5]; lists pass through."""
    if isinstance(spec, (list, tuple)):
        return [int(x) for x in spec]
    spec = str(spec).strip()
    try:
        if ".." in spec:
            lo, hi = spec.split("..")
            return list(range(int(lo), int(hi) + 1))
        return [int(x) for x in spec.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"bad integer range {spec!r}") from None


# -- blanket -------------------------------------------------------------------

BLANKET_DEFAULTS = {
    "example": None,
    "state": None,
    "spinchain": False,
    "n": None,
    "g": -1.05,
    "h": 0.5,
    "t": 1.0,
    "a": [0],
    "r": 1,
    "q": 1,
    "certificate": False,
    "samples": 500,
    "seed": 0,
    "restarts": 8,
    "opt_iters": 400,
    "workers": 1,
    "out": None,
}


def example_choi(name: str, n: int | None, seed: int) -> ChoiState:
    rng = np.random.default_rng(seed)
    n = 3 if n is None else int(n)
    if name == "ghz":
        return choi_of_channel(ghz_isometry(n))
    if name == "constant":
        return choi_of_channel(constant_channel(random_state((2,) * n, rng).rho, 2, (2,) * n))
    if name == "identity":
        return choi_of_channel(identity_to_first(n, haar_ket(2 ** (n - 1), rng)))
    if name == "haar":
        return choi_of_channel(haar_isometry(n, rng))
    raise ConfigError(f"unknown example {name!r}; choose from {', '.join(EXAMPLES)}")


def blanket_source(cfg: dict) -> tuple[MultipartiteState, ChoiState | None, str]:
    chosen = [k for k in ("example", "state", "spinchain") if cfg[k]]
    if len(chosen) != 1:
        raise ConfigError("give exactly one state source: --example, --state or --spinchain")
    if cfg["example"]:
        choi = example_choi(cfg["example"], cfg["n"], cfg["seed"])
        return choi.state, choi, f"example:{cfg['example']}"
    if cfg["spinchain"]:
        n = 8 if cfg["n"] is None else int(cfg["n"])
        choi = spin_chain_choi(SpinChainConfig(n, float(cfg["g"]), float(cfg["h"]), float(cfg["t"])))
        return choi.state, choi, "spinchain"
    try:
        s = state_from_dict(json.loads(Path(cfg["state"]).read_text()))
    except FileNotFoundError:
        raise ConfigError(f"state file not found: {cfg['state']}") from None
    except (OSError, json.JSONDecodeError, StateError) as exc:
        raise ConfigError(f"bad state file {cfg['state']}: {exc}") from None
    try:
        choi = ChoiState(s)
    except ChannelError:
        choi = None
    return s, choi, f"state:{cfg['state']}"


def summary_table(report) -> str:
    lines = [f"{'step':>4}  {'region':<12}  {'CMI (bits)':>12}"]
    for i, st in enumerate(report.steps, 1):
        mark = "  <- bottleneck" if i == report.bottleneck_index else ""
        lines.append(f"{i:>4}  {str(list(st.region)):<12}  {st.cmi_bits:>12.6g}{mark}")
    lines.append(f"Q = {list(report.Q)}  padding = {list(report.padding)}")
    lines.append(f"alpha_Q = {report.alpha_q_bits:.6g} bits  bound S(A)/(1+q/r) = {report.bound_bits:.6g} bits")
    return "\n".join(lines) + "\n"


def cmd_blanket(args: argparse.Namespace) -> int:
    cfg = resolve(args, BLANKET_DEFAULTS)
    opt = optimizer_config(cfg)
    s, choi, source = blanket_source(cfg)
    a = [int(i) for i in (parse_range(cfg["a"]) if isinstance(cfg["a"], str) else cfg["a"])]
    log(f"greedy blanket on {source}: {s.n} subsystems, A={a}, r={cfg['r']}, q={cfg['q']}")
    try:
        report = greedy_blanket(s, a, int(cfg["r"]), int(cfg["q"]), opt)
    except (BlanketError, StateError) as exc:
        raise ConfigError(str(exc)) from None

    result = report.to_dict()
    result["source"] = source
    result["config_hash"] = config_hash(cfg)
    problems = report.violations()
    if cfg["certificate"]:
        if choi is None:
            raise ConfigError("--certificate needs a Choi state")
        cert = certificate_for_report(choi, report, opt, samples=int(cfg["samples"]), seed=opt.seed)
        result["certificate"] = cert.to_dict()
        if not cert.ok:
            problems.append("certificate bound violated")
    result["violations"] = problems

    write_output(json.dumps(result, indent=2) + "\n", cfg["out"])
    table = summary_table(report)
    if cfg["out"] is None:
        sys.stderr.write(table)
    else:
        sys.stdout.write(table)
    for p in problems:
        log(f"INVARIANT VIOLATION: {p}")
    return EXIT_INVARIANT if problems else EXIT_OK


# -- spinchain -----------------------------------------------------------------

SPINCHAIN_DEFAULTS = {
    "n": 8,
    "g": -1.05,
    "h": 0.5,
    "tmax": 3.0,
    "steps": 13,
    "q": "1..8",
    "r": 1,
    "no_timing": False,
    "seed": 0,
    "restarts": 8,
    "opt_iters": 400,
    "workers": None,
    "out": None,
}


def sweep_violations(rows: list[dict], r_size: int) -> list[str]:
    out = []
    for row in rows:
        if row["error"]:
            continue
        tag = f"t={row['t']:.6g} q={row['q']}"
        if row["bottleneck_bits"] > row["bound_bits"] + OPTIMIZER_SLACK:
            out.append(f"{tag}: bottleneck {row['bottleneck_bits']:.6g} exceeds bound {row['bound_bits']:.6g}")
        if sum(row["step_values"]) > row["entropy_a_bits"] + SUM_SLACK:
            out.append(f"{tag}: step values sum past S(A)")
    return out


def monotonicity_warnings(rows: list[dict], slack: float = 2e-3) -> list[str]:
    """alpha_Q rising with q at fixed t; reported, never fatal."""
    by_t: dict[float, list[dict]] = {}
    for row in rows:
        if not row["error"]:
            by_t.setdefault(row["t"], []).append(row)
    out = []
    for t, cells in by_t.items():
        cells.sort(key=lambda r: r["q"])
        for a, b in zip(cells, cells[1:]):
            if b["alpha_q_bits"] > a["alpha_q_bits"] + slack:
                out.append(f"t={t:.6g}: alpha_Q rises from q={a['q']} to q={b['q']} "
                           f"({a['alpha_q_bits']:.6g} -> {b['alpha_q_bits']:.6g})")
    return out


def cmd_spinchain(args: argparse.Namespace) -> int:
    cfg = resolve(args, SPINCHAIN_DEFAULTS)
    opt = optimizer_config(cfg)
    qs = parse_range(cfg["q"])
    steps = int(cfg["steps"])
    if steps < 1 or not qs or min(qs) < 1:
        raise ConfigError("need --steps >= 1 and q values >= 1")
    if not 2 <= int(cfg["n"]) <= 10:
        raise ConfigError("--n must be between 2 and 10")
    times = np.linspace(0.0, float(cfg["tmax"]), steps)
    workers = int(cfg["workers"] or os.cpu_count() or 1)
    log(f"spin-chain sweep: n={cfg['n']}, {steps} times in [0, {cfg['tmax']}], q={qs}, {workers} worker(s)")
    rows = figure3_sweep(
        times, qs, opt, n_total=int(cfg["n"]), g=float(cfg["g"]), h=float(cfg["h"]),
        r_size=int(cfg["r"]), workers=workers,
    )
    if cfg["no_timing"]:
        for row in rows:
            row["runtime_s"] = 0.0
    for row in rows:
        if row["error"]:
            log(f"t={row['t']:.6g} q={row['q']}: {row['error']}")

    # the worker count does not change the results, so it is left out of the hash
    hashed = {k: v for k, v in cfg.items() if k not in ("workers", "out")}
    write_output(rows_to_csv(rows), cfg["out"])
    if cfg["out"] is not None:
        meta = {
            "seed": opt.seed,
            "version": __version__,
            "config_hash": config_hash(hashed),
            "config": hashed,
            "cells": [
                {
                    "t": row["t"],
                    "q": row["q"],
                    "measured_Q": list(row.get("measured_Q", ())),
                    "step_values": row.get("step_values", []),
                    "entropy_a_bits": row.get("entropy_a_bits", math.nan),
                    "error": row["error"],
                }
                for row in rows
            ],
        }
        write_output(json.dumps(meta, indent=2) + "\n", cfg["out"] + ".meta.json")

    for w in monotonicity_warnings(rows):
        log(f"WARN {w}")
    problems = sweep_violations(rows, int(cfg["r"]))
    for p in problems:
        log(f"INVARIANT VIOLATION: {p}")
    return EXIT_INVARIANT if problems else EXIT_OK


# -- verify / appendixb ----------------------------------------------------------


def cmd_verify(args: argparse.Namespace) -> int:
    seed = 0 if args.seed is None else args.seed
    checks = run_suite(args.suite, seed=seed)
    for c in checks:
        print(c.line(), flush=True)
    return EXIT_OK if all(c.passed for c in checks) else EXIT_FAIL


def cmd_appendixb(args: argparse.Namespace) -> int:
    cfg = {"points": args.points, "seed": 0 if args.seed is None else args.seed}
    r = appendix_b_check(points=args.points)
    r.update(seed=cfg["seed"], version=__version__, config_hash=config_hash(cfg))
    write_output(json.dumps(r, indent=2) + "\n", args.out)
    lo, hi = r["positive_window_detected"]
    log(f"{'PASS' if r['ok'] else 'FAIL'} positivity window [{lo:.4f}, {hi:.4f}]")
    return EXIT_OK if r["ok"] else EXIT_FAIL


# -- parser --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--seed", type=int, help="master seed (default 0)")
    shared.add_argument("--workers", type=int, help="parallel workers")
    shared.add_argument("--out", help="output path (default: stdout)")
    shared.add_argument("--restarts", type=int, help="optimizer restarts per region")
    shared.add_argument("--opt-iters", dest="opt_iters", type=int, help="Nelder-Mead iterations per restart")

    p = argparse.ArgumentParser(prog="qblanket", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("blanket", parents=[shared], help="greedy Markov blanket of one state")
    b.add_argument("--config", help="JSON config; flags override its values")
    b.add_argument("--example", help=f"built-in channel: {', '.join(EXAMPLES)}")
    b.add_argument("--state", help="JSON state file {dims, labels, rho_real, rho_imag}")
    b.add_argument("--spinchain", action="store_true", default=None, help="spin-chain Choi state")
    b.add_argument("--n", type=int, help="outputs of the example channel, or spin-chain sites")
    b.add_argument("--g", type=float)
    b.add_argument("--h", type=float)
    b.add_argument("--t", type=float)
    b.add_argument("--a", help="system A as a comma list of subsystems (default 0)")
    b.add_argument("--r", type=int, help="region size")
    b.add_argument("--q", type=int, help="blanket size budget")
    b.add_argument("--certificate", action="store_true", default=None,
                   help="also compare each reduced channel with its measure-and-prepare reconstruction")
    b.add_argument("--samples", type=int, help="Haar inputs for the certificate")
    b.set_defaults(func=cmd_blanket)

    s = sub.add_parser("spinchain", parents=[shared], help="alpha_Q over a (t, q) grid; CSV output")
    s.add_argument("--config", help="JSON config; flags override its values")
    s.add_argument("--n", type=int, help="total sites (A plus environment)")
    s.add_argument("--g", type=float)
    s.add_argument("--h", type=float)
    s.add_argument("--tmax", type=float)
    s.add_argument("--steps", type=int, help="number of evenly spaced times in [0, tmax]")
    s.add_argument("--q", help="blanket sizes, e.g. 1..8 or 1,2,4")
    s.add_argument("--r", type=int)
    s.add_argument("--no-timing", dest="no_timing", action="store_true", default=None,
                   help="write runtime_s as 0 so reruns are byte-identical")
    s.set_defaults(func=cmd_spinchain)

    v = sub.add_parser("verify", parents=[shared], help="run a property suite")
    v.add_argument("suite", choices=[*SUITES, "all"])
    v.set_defaults(func=cmd_verify)

    a = sub.add_parser("appendixb", parents=[shared], help="compatible channels with distinct measurements")
    a.add_argument("--points", type=int, default=201)
    a.set_defaults(func=cmd_appendixb)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        return args.func(args)
    except ConfigError as exc:
        log(f"error: {exc}")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
