"""Command-line front end: generate / solve / sweep / oracle / validate.

Exit codes: 0 = work completed (solver infeasibility is recorded, not an
error); 1 = the validated input is invalid; 2 = harness error (bad
arguments, unreadable files, oversized oracle instance).
"""
from __future__ import annotations

import argparse
import json
import sys

from . import constraints, scenario, sweep
from .solver import SolverSettings, solve_joint, solve_separate


def _parse_seeds(text: str) -> tuple[int, ...]:
    """"0..19" (inclusive range) or "1,5,9"."""
    if ".." in text:
        lo, hi = text.split("..", 1)
        return tuple(range(int(lo), int(hi) + 1))
    return tuple(int(t) for t in text.split(",") if t != "")


def _parse_values(text: str) -> tuple[float, ...]:
    return tuple(float(t) for t in text.split(",") if t != "")


def _load_config(path: str) -> scenario.ScenarioConfig:
    if path is None:
        return scenario.default_config()
    return scenario.load_config(path)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tactile-ra",
                                 description="joint radio + NFV resource allocation")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="generate a scenario and dump it")
    g.add_argument("--config", default=None)
    g.add_argument("--seed", type=int, default=None)
    g.add_argument("--out", required=True)

    s = sub.add_parser("solve", help="solve one instance")
    s.add_argument("--config", default=None)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--mode", choices=("ja", "sa"), default="ja")
    s.add_argument("--nfv-carve-ms", type=float, default=0.5)
    s.add_argument("--out", default=None)

    w = sub.add_parser("sweep", help="run a seeded experiment sweep")
    w.add_argument("--config", default=None)
    w.add_argument("--axis", choices=sweep.AXES, required=True)
    w.add_argument("--values", required=True, help="comma list, e.g. 3,4,5")
    w.add_argument("--seeds", default="0", help='"0..19" or "0,3,7"')
    w.add_argument("--mode", choices=("ja", "sa", "both"), default="ja")
    w.add_argument("--nfv-carve-ms", type=float, default=0.5)
    w.add_argument("--workers", type=int, default=1)
    w.add_argument("--format", choices=("table", "structured"), default="table")
    w.add_argument("--out", required=True)

    o = sub.add_parser("oracle", help="exhaustive-search comparison on a tiny instance")
    o.add_argument("--config", default=None)
    o.add_argument("--seed", type=int, default=0)
    o.add_argument("--levels", default="2,4,6",
                   help="spectral-efficiency ladder for the power grid")

    v = sub.add_parser("validate", help="validate a config file")
    v.add_argument("--config", required=True)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "generate":
            cfg = _load_config(args.config)
            scn = scenario.generate(cfg, args.seed)
            scenario.save_scenario(scn, args.out)
            print(f"wrote scenario ({scn.num_users} users, {scn.num_bs} BSs) to {args.out}")
            return 0

        if args.command == "solve":
            cfg = _load_config(args.config)
            scn = scenario.generate(cfg, args.seed)
            if args.mode == "ja":
                res = solve_joint(scn)
            else:
                res = solve_separate(scn, fixed_nfv_delay=args.nfv_carve_ms * 1e-3)
            if res.allocation is not None:
                res.constraint_report = constraints.check_allocation(
                    scn, res.allocation).to_dict()
            doc = res.to_dict()
            if args.out:
                with open(args.out, "w") as fh:
                    json.dump(doc, fh, indent=1)
            print(f"mode={args.mode} feasible={res.feasible} cost={res.cost:.6g} "
                  f"(power {res.power_cost:.6g} + exec {res.exec_cost:.6g}) "
                  f"iters={res.outer_iterations}")
            if not res.feasible:
                print(f"infeasible: {res.infeasible_reason}")
            return 0

        if args.command == "sweep":
            cfg = _load_config(args.config)
            spec = sweep.SweepSpec(axis=args.axis,
                                   values=_parse_values(args.values),
                                   mode=args.mode,
                                   seeds=_parse_seeds(args.seeds),
                                   sa_carve=args.nfv_carve_ms * 1e-3,
                                   workers=args.workers)
            rows, docs = sweep.run_sweep(spec, cfg)
            sweep.emit(rows, args.format, args.out, docs=docs, spec=spec)
            n_bad = sum(1 for r in rows if not r.feasible)
            print(f"{len(rows)} points -> {args.out} ({n_bad} recorded infeasible)")
            return 0

        if args.command == "oracle":
            cfg = _load_config(args.config)
            scn = scenario.generate(cfg, args.seed)
            ladder = _parse_values(args.levels)
            report = sweep.run_oracle_comparison(scn, se_ladder=ladder)
            print(json.dumps(report.to_dict(), indent=1))
            return 0

        if args.command == "validate":
            try:
                cfg = scenario.load_config(args.config)
            except FileNotFoundError as exc:
                print(f"error: {exc}", file=sys.stderr)
                return 2
            except scenario.ConfigError as exc:
                print("invalid config:", file=sys.stderr)
                for v in exc.violations:
                    print(f"  - {v}", file=sys.stderr)
                return 1
            print(f"config ok: {cfg.num_bs} BSs, {len(cfg.services)} services")
            return 0

        raise ValueError(f"unknown command {args.command}")
    except scenario.ConfigError as exc:
        print("error: invalid config:", file=sys.stderr)
        for v in exc.violations:
            print(f"  - {v}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
