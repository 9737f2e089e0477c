"""Command-line interface.

Subcommands: eigen, solve, iterate, threshold, sweep, verify.  Options come
from defaults, then an optional flat key=value config file, then explicit
flags (flags win).  The effective configuration is echoed into the output
directory as <command>_config.json so every run is reproducible.  The
environment variable PLAP_SEED overrides the seed everywhere.

Exit codes: 0 success/converged, 1 invalid input, 2 diverged, 3 inconclusive.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import threshold as thr
from .core import CONVERGED, DIVERGED, SolverConfig
from .eigen import first_eigenpair
from .grid import GridFunction, make_grid, write_csv
from .model_problems import (
    Params,
    c_constant,
    solve_concave,
    solve_linear_concave,
    verify_supnorm_sandwich,
)
from .monotone import build_subsolution, build_supersolution, run_iteration

__all__ = ["main"]

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_DIVERGED = 2
EXIT_INCONCLUSIVE = 3

UNGUARDED_NOTE = (
    "note: between the closed-form bounds the iteration runs unguarded from the "
    "subsolution; classification assumes the subsolution lies below every "
    "positive solution"
)

_DEFAULTS: dict[str, object] = {
    "a": 0.0,
    "b": 1.0,
    "cells": 1024,
    "p": 2.0,
    "q": 1.5,
    "r": 3.0,
    "Lambda": 1.0,
    "lambda_frac": 0.0,
    "coeff": 1.0,
    "q_list": "1.6,1.8,1.9,1.95",
    "lambda_fracs": "0,0.3,0.6",
    "out_dir": ".",
    "jobs": 1,
    "seed": 0,
    "max_outer": 2000,
    "rel_width": 1e-3,
    "tol_residual": 1e-10,
    "tol_step": 1e-10,
    "max_inner": 200,
    "epsilon_reg": 1e-8,
    "blowup_cap": 1e6,
    "verbose": False,
    "trace": "",
}

_TYPES = {k: type(v) for k, v in _DEFAULTS.items()}


def _parse_config_file(path: str) -> dict[str, str]:
    """Flat key = value lines mirroring flag names; '#' starts a comment."""
    out: dict[str, str] = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"invalid-config-file: expected 'key = value', got {raw!r}")
        key, val = (tok.strip() for tok in line.split("=", 1))
        out[key.replace("-", "_")] = val
    return out


def _coerce(key: str, raw: str):
    ty = _TYPES.get(key)
    if ty is None:
        raise ValueError(f"invalid-config-key: unknown option {key!r}")
    if ty is bool:
        return raw.lower() in ("1", "true", "yes", "on")
    if ty is int:
        return int(raw)
    if ty is float:
        return float(raw)
    return raw


def _effective_config(args: argparse.Namespace) -> dict:
    """defaults < config file < explicit flags; PLAP_SEED overrides the seed."""
    cfg = dict(_DEFAULTS)
    if getattr(args, "config", None):
        for key, raw in _parse_config_file(args.config).items():
            cfg[key] = _coerce(key, raw)
    for key in _DEFAULTS:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    env_seed = os.environ.get("PLAP_SEED")
    if env_seed is not None:
        cfg["seed"] = int(env_seed)
    return cfg


def _solver_config(cfg: dict) -> SolverConfig:
    return SolverConfig(
        tol_residual=cfg["tol_residual"],
        tol_step=cfg["tol_step"],
        max_inner_iters=cfg["max_inner"],
        epsilon_reg=cfg["epsilon_reg"],
        blowup_cap=cfg["blowup_cap"],
    )


def _prepare_out_dir(cfg: dict, command: str) -> Path:
    out = Path(cfg["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    echo = {"command": command, **{k: cfg[k] for k in sorted(cfg)}}
    (out / f"{command}_config.json").write_text(json.dumps(echo, indent=2) + "\n")
    return out


def _parse_float_list(text: str, what: str) -> list[float]:
    items = [tok for tok in text.replace(";", ",").split(",") if tok.strip()]
    if not items:
        raise ValueError(f"empty-{what}: need at least one value")
    return [float(tok) for tok in items]


def _report_json(report) -> str:
    return json.dumps(report.as_dict() if hasattr(report, "as_dict") else report, indent=2)


def cmd_eigen(cfg: dict) -> int:
    grid = make_grid(cfg["a"], cfg["b"], cfg["cells"])
    out = _prepare_out_dir(cfg, "eigen")
    eig = first_eigenpair(cfg["p"], grid, _solver_config(cfg))
    print(f"lambda1 = {eig.lambda1:.12g}")
    print(f"iterations = {eig.iterations}")
    path = out / "eigenfunction.csv"
    write_csv(eig.eigenfunction, path)
    print(f"eigenfunction written to {path}")
    return EXIT_OK


def _write_solution(out: Path, solution: GridFunction | None, report_dict: dict) -> None:
    (out / "report.json").write_text(json.dumps(report_dict, indent=2) + "\n")
    if solution is not None:
        write_csv(solution, out / "solution.csv")


def cmd_solve(cfg: dict, kind: str) -> int:
    grid = make_grid(cfg["a"], cfg["b"], cfg["cells"])
    scfg = _solver_config(cfg)
    out = _prepare_out_dir(cfg, f"solve_{kind.replace('-', '_')}")
    params = Params(p=cfg["p"], q=cfg["q"], r=cfg["r"])

    if kind == "concave":
        sol = solve_concave(cfg["Lambda"], params, grid, scfg)
        _write_solution(out, sol.u, sol.report.as_dict())
        print(f"status = {sol.report.status}, sup_norm = {sol.sup_norm:.12g}")
        return EXIT_OK

    if kind == "linear-concave":
        eig = first_eigenpair(cfg["p"], grid, scfg)
        lam = cfg["lambda_frac"] * eig.lambda1
        sol = solve_linear_concave(lam, cfg["coeff"], params, grid, eig, scfg)
        _write_solution(out, sol.u, sol.report.as_dict())
        print(
            f"status = {sol.report.status}, sup_norm = {sol.sup_norm:.12g}, "
            f"c = {sol.c_value:.12g}"
        )
        return EXIT_OK

    # concave-convex: monotone iteration from the subsolution
    eig = first_eigenpair(cfg["p"], grid, scfg)
    sub = build_subsolution(cfg["Lambda"], params, grid, scfg)
    super_ = build_supersolution(cfg["Lambda"], params, grid, eig, scfg)
    trace: list | None = [] if (cfg["verbose"] or cfg["trace"]) else None
    outcome, _state = run_iteration(
        cfg["Lambda"], params, sub, super_, scfg, max_outer=cfg["max_outer"], trace=trace
    )
    report_dict = {
        "status": outcome.status,
        "k_final": outcome.k_final,
        "residual": outcome.residual,
        "supersolution_available": super_ is not None,
    }
    _write_solution(out, outcome.solution, report_dict)
    if trace is not None:
        trace_path = Path(cfg["trace"]) if cfg["trace"] else out / "trace.csv"
        lines = ["k,sup_norm,residual"]
        lines.extend(f"{k},{s:.17g},{r:.17g}" for k, s, r in trace)
        trace_path.write_text("\n".join(lines) + "\n")
        print(f"trace written to {trace_path}")
    print(f"status = {outcome.status}, k = {outcome.k_final}, residual = {outcome.residual:.6g}")
    if outcome.status == CONVERGED:
        return EXIT_OK
    return EXIT_DIVERGED if outcome.status == DIVERGED else EXIT_INCONCLUSIVE


def cmd_threshold(cfg: dict) -> int:
    grid = make_grid(cfg["a"], cfg["b"], cfg["cells"])
    scfg = _solver_config(cfg)
    out = _prepare_out_dir(cfg, "threshold")
    params = Params(p=cfg["p"], q=cfg["q"], r=cfg["r"])
    eig = first_eigenpair(cfg["p"], grid, scfg)
    print(UNGUARDED_NOTE)
    bracket = thr.empirical_threshold(
        params, grid, eig, scfg, max_outer=cfg["max_outer"], rel_width=cfg["rel_width"]
    )
    thr.write_sweep_csv([bracket], out / "threshold.csv")
    print(
        f"lambda_tilde = {bracket.lambda_tilde:.8g}\n"
        f"lambda_emp   = {bracket.lambda_emp:.8g}  "
        f"(bracket [{bracket.bracket_lo:.8g}, {bracket.bracket_hi:.8g}], "
        f"{bracket.n_inconclusive} inconclusive)\n"
        f"lambda_hat   = {bracket.lambda_hat:.8g}\n"
        f"lambda1      = {bracket.lambda1:.8g}"
    )
    return EXIT_OK


_PLOT_SCRIPT = """\
#!/usr/bin/env python3
\"\"\"Render the sweep CSV: threshold bounds and empirical estimate vs q.\"\"\"
import csv
import sys

import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else "sweep.csv"
rows = list(csv.DictReader(open(path)))
q = [float(r["q"]) for r in rows]
plt.figure(figsize=(6, 4))
plt.plot(q, [float(r["lambda_tilde"]) for r in rows], "s-", label="lambda_tilde")
plt.plot(q, [float(r["lambda_emp"]) for r in rows], "o-", label="lambda_emp")
plt.plot(q, [float(r["lambda_hat"]) for r in rows], "^-", label="lambda_hat")
plt.axhline(float(rows[0]["lambda1"]), color="k", ls="--", label="lambda1")
plt.xlabel("q")
plt.ylabel("Lambda")
plt.legend()
plt.tight_layout()
plt.savefig("sweep.png", dpi=150)
print("wrote sweep.png")
"""


def cmd_sweep(cfg: dict) -> int:
    grid = make_grid(cfg["a"], cfg["b"], cfg["cells"])
    scfg = _solver_config(cfg)
    out = _prepare_out_dir(cfg, "sweep")
    q_list = _parse_float_list(cfg["q_list"], "q-list")
    print(UNGUARDED_NOTE)
    result = thr.sweep_q(
        cfg["p"],
        cfg["r"],
        q_list,
        grid,
        cfg=scfg,
        jobs=cfg["jobs"],
        max_outer=cfg["max_outer"],
        rel_width=cfg["rel_width"],
    )
    for q, msg in result.row_errors:
        print(f"row q={q} failed: {msg}", file=sys.stderr)
    thr.write_sweep_csv(result.rows, out / "sweep.csv")
    (out / "plot_sweep.py").write_text(_PLOT_SCRIPT)
    print(f"{len(result.rows)} rows written to {out / 'sweep.csv'}")
    for b in result.rows:
        print(
            f"q={b.q:g}: tilde={b.lambda_tilde:.6g} emp={b.lambda_emp:.6g} "
            f"hat={b.lambda_hat:.6g} |emp-lambda1|={b.eigen_gap:.4g} "
            f"inconclusive={b.n_inconclusive}"
        )
    return EXIT_OK if result.rows else EXIT_INVALID


def cmd_verify(cfg: dict) -> int:
    grid = make_grid(cfg["a"], cfg["b"], cfg["cells"])
    scfg = _solver_config(cfg)
    out = _prepare_out_dir(cfg, "verify")
    q_list = _parse_float_list(cfg["q_list"], "q-list")
    fracs = _parse_float_list(cfg["lambda_fracs"], "lambda-fracs")
    eig = first_eigenpair(cfg["p"], grid, scfg)
    lines = ["p,q,lambda,sup_norm,c_value,lower,upper,holds"]
    all_ok = True
    for q in q_list:
        params = Params(p=cfg["p"], q=q, r=cfg["r"])
        for frac in fracs:
            lam = frac * eig.lambda1
            rep = verify_supnorm_sandwich(lam, params, grid, eig, scfg)
            c = c_constant(lam, params, grid, eig, scfg)
            ok = rep.holds and c >= 1.0 - 1e-3
            all_ok &= ok
            lines.append(
                f"{cfg['p']:.17g},{q:.17g},{lam:.17g},{rep.supnorm:.17g},"
                f"{c:.17g},{rep.lower:.17g},{rep.upper:.17g},{str(rep.holds).lower()}"
            )
            upper_txt = f"{rep.upper:.6g}" if rep.upper_defined else "undefined"
            print(
                f"q={q:g} lambda={lam:.6g}: lower={rep.lower:.6g} "
                f"sup={rep.supnorm:.6g} upper={upper_txt} c={c:.6g} "
                f"{'OK' if ok else 'VIOLATED'}"
            )
    (out / "verify.csv").write_text("\n".join(lines) + "\n")
    return EXIT_OK if all_ok else EXIT_INVALID


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="flat key = value config file")
    sub.add_argument("--a", type=float, help="left endpoint")
    sub.add_argument("--b", type=float, help="right endpoint")
    sub.add_argument("--cells", type=int, help="number of grid cells")
    sub.add_argument("--out-dir", dest="out_dir", help="output directory")
    sub.add_argument("--seed", type=int, help="seed recorded in the config echo")
    sub.add_argument("--tol-residual", dest="tol_residual", type=float)
    sub.add_argument("--tol-step", dest="tol_step", type=float)
    sub.add_argument("--max-inner", dest="max_inner", type=int)
    sub.add_argument("--epsilon-reg", dest="epsilon_reg", type=float)
    sub.add_argument("--blowup-cap", dest="blowup_cap", type=float)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plap",
        description=(
            "Concave-convex p-Laplacian boundary value problems on an interval: "
            "first eigenvalue, model problems, monotone iteration, and "
            "existence-threshold bracketing."
        ),
    )
    subs = parser.add_subparsers(dest="command", required=True)

    s = subs.add_parser("eigen", help="first eigenvalue and eigenfunction")
    s.add_argument("--p", type=float)
    _add_common(s)

    s = subs.add_parser("solve", help="solve one of the model problems")
    s.add_argument("kind", choices=["concave", "linear-concave", "concave-convex"])
    s.add_argument("--p", type=float)
    s.add_argument("--q", type=float)
    s.add_argument("--r", type=float)
    s.add_argument("--Lambda", dest="Lambda", type=float, help="concave-convex coefficient")
    s.add_argument("--lambda-frac", dest="lambda_frac", type=float, help="lambda / lambda1")
    s.add_argument("--coeff", type=float, help="concave coefficient (linear-concave)")
    s.add_argument("--max-outer", dest="max_outer", type=int)
    s.add_argument("--verbose", action="store_const", const=True)
    s.add_argument("--trace", help="iteration trace CSV path")
    _add_common(s)

    s = subs.add_parser("iterate", help="monotone iteration at a given Lambda")
    s.add_argument("--p", type=float)
    s.add_argument("--q", type=float)
    s.add_argument("--r", type=float)
    s.add_argument("--Lambda", dest="Lambda", type=float)
    s.add_argument("--max-outer", dest="max_outer", type=int)
    s.add_argument("--verbose", action="store_const", const=True)
    s.add_argument("--trace", help="iteration trace CSV path")
    _add_common(s)

    s = subs.add_parser("threshold", help="bracket the existence threshold")
    s.add_argument("--p", type=float)
    s.add_argument("--q", type=float)
    s.add_argument("--r", type=float)
    s.add_argument("--max-outer", dest="max_outer", type=int)
    s.add_argument("--rel-width", dest="rel_width", type=float)
    _add_common(s)

    s = subs.add_parser("sweep", help="threshold bracket for a ladder of q values")
    s.add_argument("--p", type=float)
    s.add_argument("--r", type=float)
    s.add_argument("--q-list", dest="q_list", help="comma-separated q values")
    s.add_argument("--jobs", type=int, help="concurrent rows")
    s.add_argument("--max-outer", dest="max_outer", type=int)
    s.add_argument("--rel-width", dest="rel_width", type=float)
    _add_common(s)

    s = subs.add_parser("verify", help="sup-norm sandwich and c-constant checks")
    s.add_argument("--p", type=float)
    s.add_argument("--r", type=float)
    s.add_argument("--q-list", dest="q_list", help="comma-separated q values")
    s.add_argument("--lambda-fracs", dest="lambda_fracs", help="lambda / lambda1 values")
    _add_common(s)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _effective_config(args)
        np.random.seed(cfg["seed"])  # no hot path draws; pinned for reproducibility
        if args.command == "eigen":
            return cmd_eigen(cfg)
        if args.command == "solve":
            return cmd_solve(cfg, args.kind)
        if args.command == "iterate":
            return cmd_solve(cfg, "concave-convex")
        if args.command == "threshold":
            return cmd_threshold(cfg)
        if args.command == "sweep":
            return cmd_sweep(cfg)
        if args.command == "verify":
            return cmd_verify(cfg)
        parser.error(f"unknown command {args.command!r}")
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except RuntimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INCONCLUSIVE
    return EXIT_INVALID


if __name__ == "__main__":
    raise SystemExit(main())
