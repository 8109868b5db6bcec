"""Command-line interface.

Subcommands:

- ``generate``     write instance.json / graph.json for a config
- ``run``          single configured run -> trace.csv + diagnostics.json
- ``diagnose``     rate/step-size report for a config (no run)
- ``experiment1``  directed-exponential / rank-deficient sweep
- ``experiment2``  Erdos-Renyi / full-row-rank sweep

Exit codes: 0 success, 1 bad usage or configuration, 2 runtime failure
(divergence or an inner solve missing its tolerance).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import harness
from .errors import (
    DivergenceError,
    DualTrackError,
    GenerationError,
    InfeasibleProblemError,
    ToleranceError,
)
from .trace import write_trace_csv

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on usage errors; the CLI contract wants 1.
    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def _build_parser() -> _Parser:
    parser = _Parser(prog="dualtrack", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", type=Path, required=True, help="run config JSON")
        p.add_argument("--seed", type=int, help="override the problem seed")
        p.add_argument("--beta", help="step size: number, 'auto' or 'tuned'")
        p.add_argument("--gamma", type=float, help="accuracy decay rate (0 = exact)")
        p.add_argument("--delta0", type=float, help="initial accuracy target")
        p.add_argument("--inner", choices=["exact", "gd", "agd", "tolerance"],
                       help="inner solver")
        p.add_argument("--inner-steps", type=int, dest="inner_steps",
                       help="fixed inner step budget")
        p.add_argument("--max-outer", type=int, dest="max_outer")
        p.add_argument("--gap-tol", type=float, dest="gap_tol")

    p_gen = sub.add_parser("generate", help="emit instance/graph JSON")
    add_common(p_gen)
    p_gen.add_argument("--out", type=Path, required=True, help="output directory")

    p_run = sub.add_parser("run", help="run one configuration")
    add_common(p_run)
    p_run.add_argument("--out", type=Path, required=True, help="output directory")

    p_diag = sub.add_parser("diagnose", help="rate and step-size report")
    add_common(p_diag)
    p_diag.add_argument("--out", type=Path, help="write the report here (default stdout)")

    for name in ("experiment1", "experiment2"):
        p_exp = sub.add_parser(name, help=f"run the {name} sweep")
        p_exp.add_argument("--seed", type=int, default=0)
        p_exp.add_argument("--out", type=Path, required=True)
        p_exp.add_argument("--gap-tol", type=float, dest="gap_tol",
                           default=harness.DEFAULT_GAP_TOL)
    return parser


def _load_config(args) -> harness.RunConfig:
    try:
        data = harness.load_json(args.config)
    except FileNotFoundError:
        raise harness.ConfigError(f"config file not found: {args.config}")
    except json.JSONDecodeError as exc:
        raise harness.ConfigError(f"config is not valid JSON: {exc}")
    cfg = dict(data)
    cfg.setdefault("algorithm", {})
    cfg.setdefault("stop", {})
    if args.seed is not None:
        cfg.setdefault("problem", {})
        cfg["problem"] = dict(cfg["problem"])
        cfg["problem"]["seed"] = args.seed
    overrides = {
        "beta": args.beta,
        "gamma": args.gamma,
        "delta0": args.delta0,
        "inner": args.inner,
        "steps": args.inner_steps,
    }
    cfg["algorithm"] = dict(cfg["algorithm"])
    for key, value in overrides.items():
        if value is not None:
            cfg["algorithm"][key] = value
    cfg["stop"] = dict(cfg["stop"])
    if args.max_outer is not None:
        cfg["stop"]["max_outer"] = args.max_outer
    if args.gap_tol is not None:
        cfg["stop"]["gap_tol"] = args.gap_tol
    return harness.RunConfig.from_dict(cfg)


def cli(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "generate":
            cfg = _load_config(args)
            instance = harness.build_problem(cfg.problem)
            topology = harness.build_topology(cfg.graph, n=instance.n)
            harness.save_json(instance.to_dict(), args.out / "instance.json")
            harness.save_json(topology.to_dict(), args.out / "graph.json")
            print(f"instance hash {harness.sha256_of(instance.to_dict())[:16]} "
                  f"graph hash {harness.sha256_of(topology.graph.to_dict())[:16]} "
                  f"-> {args.out}")
        elif args.command == "run":
            cfg = _load_config(args)
            trace, report = harness.run_config(cfg)
            write_trace_csv(trace, args.out / "trace.csv")
            harness.save_json(report, args.out / "diagnostics.json")
            print(f"{trace.iterations} iterations, final gap {trace.final_gap:.3e} "
                  f"-> {args.out}")
        elif args.command == "diagnose":
            cfg = _load_config(args)
            instance = harness.build_problem(cfg.problem)
            topology = harness.build_topology(cfg.graph, n=instance.n)
            strategy = cfg.strategy()
            report = harness.diagnose(
                instance, topology,
                beta=cfg.algorithm.get("beta", "auto"),
                gamma=strategy.gamma if strategy.gamma is not None else 0.0,
            )
            text = json.dumps(report, indent=2, sort_keys=True)
            if args.out is not None:
                args.out.parent.mkdir(parents=True, exist_ok=True)
                args.out.write_text(text + "\n")
            else:
                print(text)
        elif args.command == "experiment1":
            manifest = harness.experiment1(args.seed, args.out, gap_tol=args.gap_tol)
            print(f"{len(manifest['variants'])} variants -> {args.out}")
        elif args.command == "experiment2":
            manifest = harness.experiment2(args.seed, args.out, gap_tol=args.gap_tol)
            print(f"{len(manifest['variants'])} variants -> {args.out}")
        else:  # pragma: no cover - argparse enforces the choices
            parser.print_usage(sys.stderr)
            return EXIT_CONFIG
    except (harness.ConfigError, ValueError, GenerationError, InfeasibleProblemError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DivergenceError, ToleranceError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except DualTrackError as exc:  # pragma: no cover - catch-all for operational failures
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def main() -> None:
    raise SystemExit(cli())
