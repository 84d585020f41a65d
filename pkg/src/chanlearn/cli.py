"""Command-line front end.

    chanlearn simulate CONFIG [--seed S] [--horizon N] [--out DIR] [--workers W]
    chanlearn optimal SPEC
    chanlearn pne SPEC
    chanlearn replicator SPEC [--starts K] [--seed S] [--step H] [--horizon T]
    chanlearn bounds --users M --channels N [...]

SPEC may be a bare game spec or a full experiment config (its ``spec`` key is
used).  Results go to stdout; ``simulate`` writes its CSV/JSONL files to the
output directory.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys

import numpy as np

from . import analysis
from .congestion import enumerate_pne
from .game import InstanceTooLarge, load_spec, socially_optimal
from .replicator import integrate
from .sim import run_batch, load_config


def _simulate(args) -> int:
    config = load_config(args.config)
    if args.seed is not None:
        config.seeds = [args.seed]
    if args.horizon is not None:
        config.horizon = args.horizon
    if args.out is not None:
        config.out = args.out
    if args.workers is not None:
        config.workers = args.workers
    if not config.out:
        raise ValueError("no output directory: set 'out' in the config or pass --out")
    result = run_batch(config)
    for key, value in result.summary.items():
        print(json.dumps({"key": key, "value": value}))
    return 0


def _optimal(args) -> int:
    sol = socially_optimal(load_spec(args.spec))
    print(json.dumps(sol.to_dict()))
    if not sol.unique:
        print(f"warning: optimum tied between {list(sol.ties)}", file=sys.stderr)
    return 0


def _pne(args) -> int:
    spec = load_spec(args.spec)
    sys.stdout.write(enumerate_pne(spec).to_jsonl(spec.num_channels))
    return 0


def _replicator(args) -> int:
    spec = load_spec(args.spec)
    rng = np.random.default_rng(args.seed)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["start", "time", "expected_potential", "limit_kind"])
    for s in range(args.starts):
        start = rng.dirichlet(np.ones(spec.num_channels), size=spec.num_users)
        res = integrate(spec, start, step=args.step, horizon=args.horizon, record_every=args.every)
        for t, pot in zip(res.times, res.potential):
            w.writerow([s, repr(float(t)), repr(float(pot)), res.limit_kind])
    return 0


def _bounds(args) -> int:
    m, n = args.users, args.channels
    out = {}
    out["tau"] = analysis.tau_threshold(m, n, args.eps, args.gamma, args.gamma_prime, args.a)
    for z in range(1, n + 1):
        out[f"settle_expectation[z*={z}]"] = analysis.settle_expectation_exact(m, z)
    if n >= 2:
        for l in range(1, m + 1):
            out[f"occupancy_weight[l={l}]"] = analysis.occupancy_weight(m, n, l)
        out["occupancy_weight_sum"] = float(sum(analysis.occupancy_weight_exact(m, n, l)
                                                for l in range(1, m + 1)))
        if m == 1:
            out["occupancy_weight_flag"] = "degenerate: a single user always occupies its channel alone"
    x = analysis.rla_explore_exponent(m, args.gamma)
    for horizon in (10, 100, 1000, 10_000, 100_000):
        lo, s, hi = analysis.power_sum_bounds(horizon, x)
        out[f"power_sum[n={horizon},p={x:g}]"] = [lo, s, hi]
        out[f"bad_step_budget[n={horizon}]"] = list(analysis.bad_step_budget(horizon, m, args.gamma))
    for k in (10, 100, 1000):
        for eps in (0.05, 0.1, 0.2):
            out[f"hoeffding[n={k},eps={eps}]"] = analysis.hoeffding_bound(k, eps)
    out["regret_exponent_bound"] = analysis.regret_exponent_bound(m, args.gamma)
    for key, value in out.items():
        print(json.dumps({"key": key, "value": value}))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="chanlearn", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a seeded Monte Carlo batch")
    p.add_argument("config")
    p.add_argument("--seed", type=int)
    p.add_argument("--horizon", type=int)
    p.add_argument("--out")
    p.add_argument("--workers", type=int)
    p.set_defaults(func=_simulate)

    p = sub.add_parser("optimal", help="socially optimal allocation")
    p.add_argument("spec")
    p.set_defaults(func=_optimal)

    p = sub.add_parser("pne", help="pure Nash equilibria (JSON lines)")
    p.add_argument("spec")
    p.set_defaults(func=_pne)

    p = sub.add_parser("replicator", help="replicator trajectories from random starts (CSV)")
    p.add_argument("spec")
    p.add_argument("--starts", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--step", type=float, default=1.0)
    p.add_argument("--horizon", type=float, default=1e5)
    p.add_argument("--every", type=int, default=1, help="record the potential every k steps")
    p.set_defaults(func=_replicator)

    p = sub.add_parser("bounds", help="regret-analysis constants (JSON lines)")
    p.add_argument("--users", "-M", type=int, required=True)
    p.add_argument("--channels", "-N", type=int, required=True)
    p.add_argument("--eps", type=float, default=0.05)
    p.add_argument("--gamma", type=float, default=0.02)
    p.add_argument("--gamma-prime", type=float, default=0.01)
    p.add_argument("--a", type=float, default=1.0)
    p.set_defaults(func=_bounds)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (OSError, ValueError, InstanceTooLarge, OverflowError) as exc:
        print(f"chanlearn {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
