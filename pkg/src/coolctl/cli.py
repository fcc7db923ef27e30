"""``coolctl`` command line front end.

Exit codes: 0 ok, 1 usage/parse error, 2 system not coolable, 3 violation found.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import io as cio
from .coolability import is_coolable
from .quantum import SIGMA_X, SIGMA_Z
from .qubit import (
    lambda_switch, mu, mu_branch, opt_path, path_constant, rotation, switch_time,
    u_y_terms, y_limit,
)
from .reduced import UnitarySchedule, haar_unitaries, integrate_reduced, j_matrices
from .systems import (
    j_polytope_bound, make_spin_spin, spin_spin_propagate, spin_spin_schedule,
    v_final_state, v_schedule, verify_conjecture,
)

EXIT_OK, EXIT_USAGE, EXIT_NOT_COOLABLE, EXIT_VIOLATION = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _default_seed() -> int:
    raw = os.environ.get("COOLCTL_SEED")
    try:
        return int(raw) if raw else 1
    except ValueError:
        raise UsageError(f"COOLCTL_SEED must be an integer, got {raw!r}") from None


def _parse_vector(text: str) -> np.ndarray:
    try:
        vec = np.array([float(x) for x in text.split(",")])
    except ValueError:
        raise UsageError(f"cannot parse vector {text!r}") from None
    if vec.min() < 0 or abs(vec.sum() - 1.0) > 1e-9:
        raise UsageError("initial state must be a probability vector")
    return vec


def _load_system(path):
    if path is None:
        raise UsageError("--config is required")
    cfg = cio.load_config(path)
    return cfg, cio.system_from_config(cfg)


def _emit(obj) -> None:
    print(json.dumps(obj, indent=2))


def cmd_coolable(args) -> int:
    _, sys_ = _load_system(args.config)
    verdict = is_coolable(sys_)
    out = {"system": sys_.name, **verdict.to_dict()}
    _emit(out)
    if args.out:
        cio.write_json(args.out, out)
    return EXIT_OK if verdict.coolable else EXIT_NOT_COOLABLE


def cmd_mu_curve(args) -> int:
    if not 0 <= args.nu < 1:
        raise UsageError("--nu must lie in [0, 1)")
    if args.grid < 1:
        raise UsageError("--grid must be positive")
    lam = np.linspace(0.0, 1.0, args.grid + 1)
    rows = zip(lam, mu(args.nu, lam), mu_branch(args.nu, lam).astype(str))
    text = cio.csv_text(["lambda", "mu", "branch"], rows)
    if args.out:
        cio.write_atomic(args.out, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_qubit_optimal(args) -> int:
    nu, dt = args.nu, args.dt
    if not 0 <= nu < 1:
        raise UsageError("--nu must lie in [0, 1)")
    if dt <= 0 or args.t_end < 0:
        raise UsageError("--dt must be positive and --t-end non-negative")
    n = int(np.ceil(args.t_end / dt - 1e-9))
    t = np.linspace(0.0, n * dt, n + 1)
    lam, y = opt_path(nu, t)
    t0 = switch_time(nu)
    direct, comp = u_y_terms(nu, t)
    near = np.abs(t - t0) < 0.5 * dt
    rows = []
    for k in range(len(t)):
        rho = rotation(y[k]) @ np.diag([lam[k], 1 - lam[k]]) @ rotation(y[k]).conj().T
        bx, bz = np.trace(rho @ SIGMA_X).real, np.trace(rho @ SIGMA_Z).real
        u = None if near[k] else direct[k] + comp[k]
        d = None if near[k] else direct[k]
        rows.append((t[k], lam[k], y[k], u, d, comp[k], bx, bz))
    header = ["t", "lambda_star", "y_star", "u_y", "u_direct", "u_compensation", "bloch_x", "bloch_z"]
    summary = {"nu": nu, "t0": None if not np.isfinite(t0) else t0,
               "c": None if not np.isfinite(t0) else path_constant(nu),
               "lambda0": lambda_switch(nu), "y_limit": y_limit(nu),
               "y_final": float(y[-1]), "rows": len(rows)}
    text = cio.csv_text(header, rows)
    if args.out:
        cio.write_atomic(args.out, text)
        cio.write_json(Path(args.out).with_suffix(".summary.json"), summary)
    _emit(summary)
    return EXIT_OK


def _verify_schedule(sys_, lam0, schedule, dt):
    ctrl = UnitarySchedule.piecewise(schedule.unitary_segments())
    total = schedule.total_time
    times, lams = integrate_reduced(sys_, lam0, ctrl, total, dt)
    return times, lams


def cmd_schedule(args) -> int:
    cfg, sys_ = _load_system(args.config)
    tag = cio.builtin_tag(cfg)
    if args.lam0 is None:
        raise UsageError("--lam0 is required")
    lam0 = np.sort(_parse_vector(args.lam0))[::-1]
    if tag == "vsys":
        if args.eps is None:
            raise UsageError("vsys schedules need --eps")
        p = cfg.get("params", {})
        g1, g2 = float(p.get("gamma1", 1.0)), float(p.get("gamma2", 2.0))
        try:
            sched = v_schedule(lam0, args.eps, g1, g2)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        closed = v_final_state(lam0, sched.segments[0][1], sched.segments[1][1], g1, g2)
    elif tag == "spinspin":
        if args.budget is None:
            raise UsageError("spinspin schedules need --budget")
        try:
            sched = spin_spin_schedule(lam0, args.cost, args.budget)
        except (ValueError, KeyError) as exc:
            raise UsageError(str(exc)) from None
        closed = spin_spin_propagate(lam0, sched.segments[0][1], sched.segments[1][1])
        sys_ = make_spin_spin()
    else:
        raise UsageError("schedule needs a builtin 'vsys' (eps mode) or 'spinspin' (budget mode) config")
    times, lams = _verify_schedule(sys_, lam0, sched, args.dt)
    out = sched.to_dict()
    out["verification_residual"] = float(np.max(np.abs(lams[-1] - closed)))
    out["rk4_final_state"] = lams[-1].tolist()
    _emit(out)
    if args.out:
        cio.write_json(args.out, out)
        header = ["t"] + [f"lambda_{i + 1}" for i in range(len(lam0))]
        cio.write_csv(Path(args.out).with_suffix(".csv"), header,
                      [(t, *lam) for t, lam in zip(times, lams)])
    return EXIT_OK


def cmd_verify(args) -> int:
    cfg, sys_ = _load_system(args.config)
    seed = args.seed if args.seed is not None else _default_seed()
    bound = j_polytope_bound(sys_)
    jb_samples = args.samples if args.samples else 0
    if jb_samples:
        js = j_matrices(sys_, haar_unitaries(sys_.n, jb_samples, seed))
        jb_viol = float(bound.violation(js).max())
    else:
        jb_viol = float("-inf")
    out = {"system": sys_.name, "seed": seed,
           "j_bound": {"samples": jb_samples, "halfspaces": len(bound.labels),
                       "max_violation": None if not np.isfinite(jb_viol) else jb_viol,
                       "tolerance": 1e-9}}
    violated = jb_viol > 1e-9
    if cio.builtin_tag(cfg) == "spinspin" or args.self_test:
        if cio.builtin_tag(cfg) == "spinspin":
            report = verify_conjecture(args.lam_count, args.samples, seed, plant=args.self_test)
        else:
            report = verify_conjecture(1, 0, seed, plant=True)
        out["conjecture"] = report.to_dict()
        violated = violated or report.violated
    _emit(out)
    if args.out:
        cio.write_json(args.out, out)
    return EXIT_VIOLATION if violated else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="coolctl", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("coolable", help="coolability verdict for a system config")
    c.add_argument("--config", required=True)
    c.add_argument("--out")
    c.set_defaults(func=cmd_coolable)

    c = sub.add_parser("mu-curve", help="maximal derivative curve of a rank-one qubit")
    c.add_argument("--nu", type=float, required=True)
    c.add_argument("--grid", type=int, default=100)
    c.add_argument("--out")
    c.set_defaults(func=cmd_mu_curve)

    c = sub.add_parser("qubit-optimal", help="optimal path and control of a rank-one qubit")
    c.add_argument("--nu", type=float, required=True)
    c.add_argument("--t-end", type=float, default=6.0)
    c.add_argument("--dt", type=float, default=1e-2)
    c.add_argument("--out")
    c.set_defaults(func=cmd_qubit_optimal)

    c = sub.add_parser("schedule", help="optimal cooling schedule (vsys or spinspin)")
    c.add_argument("--config", required=True)
    c.add_argument("--lam0", help="comma separated initial eigenvalues")
    c.add_argument("--eps", type=float)
    c.add_argument("--budget", type=float)
    c.add_argument("--cost", default="purity", choices=["purity", "entropy", "max_eigenvalue"])
    c.add_argument("--dt", type=float, default=1e-3)
    c.add_argument("--out")
    c.set_defaults(func=cmd_schedule)

    c = sub.add_parser("verify", help="J-matrix bounds and spin-spin conjecture harness")
    c.add_argument("--config", required=True)
    c.add_argument("--lam-count", type=int, default=100)
    c.add_argument("--samples", type=int, default=1000)
    c.add_argument("--seed", type=int)
    c.add_argument("--self-test", action="store_true", help="plant a known outside point")
    c.add_argument("--out")
    c.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        return args.func(args)
    except (UsageError, cio.ConfigError) as exc:
        print(f"coolctl: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
