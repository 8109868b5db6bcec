"""Run configuration, experiment recipes, and reproducibility plumbing.

Configs are flat JSON.  A full run config looks like::

    {
      "problem": {"n": 2, "d_i": 1, "eig_lo": 1.0, "eig_hi": 10.0,
                  "constraint": "full_rank", "p": 2, "variance": 1.0,
                  "seed": 7},
      "graph":   {"kind": "exponential", "e": 1, "scheme": "uniform_regular"},
      "algorithm": {"inner": "tolerance", "beta": "auto", "gamma": 0.95,
                    "delta0": 1.0},
      "stop":    {"max_outer": 2000, "gap_tol": 1e-08}
    }

``problem`` may instead be {"path": "instance.json"} and ``graph`` may be
{"path": "graph.json"}.  Rank-deficient constraints add "base_rank".  The
Erdos-Renyi graph kind takes "p" (edge probability) and "seed".  ``beta`` is
either a number or one of "auto" (0.9x the certified bound) and "tuned" (the
practical dual-ascent-scale step).

The two experiment recipes regenerate the reference problem families (directed
exponential graph with a rank-deficient coupling matrix; Erdos-Renyi graph
with a full-row-rank one) and sweep the inner-solver variants over a small
step-size grid, one CSV per run plus a manifest.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import outer
from .diagnostics import build_rate_matrices, rho_upper_bound, theoretical_theta
from .errors import ConfigError, DivergenceError
from .inner import InnerStrategy
from .network import (
    Graph,
    MixingTopology,
    build_directed_exponential,
    build_erdos_renyi,
    mixing_matrix,
)
from .problem import (
    KktSolution,
    ProblemInstance,
    build_instance,
    generate_constraint_full_rank,
    generate_constraint_rank_deficient,
    generate_quadratic_agents,
    kkt_solve,
)
from .trace import Trace, write_trace_csv

DEFAULT_DELTA0 = 1.0
DEFAULT_MAX_OUTER = 2000
DEFAULT_GAP_TOL = 1e-8

# Iteration budgets for the experiment sweeps: grid points at the certified
# step size barely move on realistic instances, so they get a short budget;
# the practical step gets room to actually converge.
EXPERIMENT_BUDGET_CERTIFIED = 800
EXPERIMENT_BUDGET_TUNED = 60_000

VARIANTS = (
    ("exact", InnerStrategy.exact()),            # schedule decay 0 = exact solves
    ("tol_gamma_0.90", InnerStrategy.agd_tolerance(delta0=DEFAULT_DELTA0, gamma=0.90)),
    ("tol_gamma_0.95", InnerStrategy.agd_tolerance(delta0=DEFAULT_DELTA0, gamma=0.95)),
    ("fixed_s1", InnerStrategy.agd_fixed(1)),
    ("fixed_s5", InnerStrategy.agd_fixed(5)),
)


def canonical_json(data) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":"))


def sha256_of(data) -> str:
    return hashlib.sha256(canonical_json(data).encode()).hexdigest()


def save_json(data, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


def load_json(path):
    with open(path) as fh:
        return json.load(fh)


# ---------------------------------------------------------------------------
# Config parsing
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RunConfig:
    problem: dict
    graph: dict
    algorithm: dict
    stop: dict

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(data) - {"problem", "graph", "algorithm", "stop"}
        if unknown:
            raise ConfigError(f"unknown config sections: {sorted(unknown)}")
        for section in ("problem", "graph"):
            if section not in data:
                raise ConfigError(f"config is missing the {section!r} section")
        cfg = cls(
            problem=dict(data["problem"]),
            graph=dict(data["graph"]),
            algorithm=dict(data.get("algorithm", {})),
            stop=dict(data.get("stop", {})),
        )
        cfg.strategy()  # validate strategy fields eagerly
        return cfg

    def strategy(self) -> InnerStrategy:
        alg = self.algorithm
        inner = alg.get("inner", "tolerance")
        steps = alg.get("steps")
        gamma = alg.get("gamma")
        delta0 = alg.get("delta0")
        try:
            if inner == "exact" or (inner == "tolerance" and gamma == 0):
                if steps is not None:
                    raise ConfigError("exact solver takes no step budget")
                return InnerStrategy.exact()
            if inner == "gd":
                if gamma is not None or delta0 is not None:
                    raise ConfigError("gd takes a step budget, not a tolerance schedule")
                return InnerStrategy.gd_fixed(int(steps if steps is not None else 1))
            if inner == "agd":
                if steps is not None and gamma is not None:
                    raise ConfigError("give either a step budget or a gamma schedule, not both")
                if steps is not None:
                    return InnerStrategy.agd_fixed(int(steps))
                inner = "tolerance"
            if inner == "tolerance":
                if steps is not None:
                    raise ConfigError("tolerance mode takes no step budget")
                if gamma == 0:
                    return InnerStrategy.exact()
                return InnerStrategy.agd_tolerance(
                    delta0=float(delta0 if delta0 is not None else DEFAULT_DELTA0),
                    gamma=float(gamma if gamma is not None else 0.95),
                )
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        raise ConfigError(f"unknown inner solver {inner!r}")

    @property
    def max_outer(self) -> int:
        return int(self.stop.get("max_outer", DEFAULT_MAX_OUTER))

    @property
    def gap_tol(self) -> float:
        return float(self.stop.get("gap_tol", DEFAULT_GAP_TOL))


def build_problem(spec: dict) -> ProblemInstance:
    if "path" in spec:
        return ProblemInstance.from_dict(load_json(spec["path"]))
    try:
        n = int(spec["n"])
        d_i = int(spec["d_i"])
        seed = int(spec.get("seed", 0))
        eig_lo = float(spec.get("eig_lo", 1.0))
        eig_hi = float(spec.get("eig_hi", 10.0))
        variance = float(spec.get("variance", 1.0))
        constraint = spec.get("constraint", "full_rank")
        p = int(spec.get("p", n * d_i))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad problem spec: {exc}") from exc
    seeds = np.random.SeedSequence(seed).spawn(2)
    quads = generate_quadratic_agents(n, d_i, eig_lo, eig_hi, seeds[0])
    if constraint == "full_rank":
        blocks, b = generate_constraint_full_rank(n, d_i, p, variance, seeds[1])
    elif constraint == "rank_deficient":
        try:
            base_rank = int(spec["base_rank"])
        except KeyError as exc:
            raise ConfigError("rank_deficient constraint needs base_rank") from exc
        blocks, b = generate_constraint_rank_deficient(
            n, d_i, p, base_rank, variance, seeds[1]
        )
    else:
        raise ConfigError(f"unknown constraint kind {constraint!r}")
    return build_instance(quads, blocks, b)


def build_topology(spec: dict, n: int | None = None) -> MixingTopology:
    if "path" in spec:
        data = load_json(spec["path"])
        if "W" in data:
            return MixingTopology.from_dict(data)
        graph = Graph.from_dict(data)
        return mixing_matrix(graph, spec.get("scheme", "uniform_regular"))
    kind = spec.get("kind")
    size = int(spec.get("n", n if n is not None else 0))
    if size < 1:
        raise ConfigError("graph spec needs n (or a problem to take it from)")
    if kind == "exponential":
        graph = build_directed_exponential(size, int(spec.get("e", 1)))
        scheme = spec.get("scheme", "uniform_regular")
    elif kind == "erdos_renyi":
        graph = build_erdos_renyi(
            size, float(spec.get("p", 0.3)), int(spec.get("seed", 0))
        )
        scheme = spec.get("scheme", "metropolis")
    else:
        raise ConfigError(f"unknown graph kind {kind!r}")
    return mixing_matrix(graph, scheme)


def resolve_beta(
    beta_spec, instance: ProblemInstance, topology: MixingTopology
) -> float:
    if beta_spec in (None, "auto"):
        return outer.max_stepsize(instance, topology).beta_used
    if beta_spec == "tuned":
        return outer.practical_stepsize(instance, topology)
    try:
        value = float(beta_spec)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"beta must be a number, 'auto' or 'tuned', got {beta_spec!r}") from exc
    if value <= 0.0:
        raise ConfigError(f"beta must be positive, got {value}")
    return value


def run_config(cfg: RunConfig):
    """Build instance/topology/oracle from a config and run it.

    Returns (trace, report) where the report carries the constants and rate
    diagnostics of the run.
    """
    instance = build_problem(cfg.problem)
    topology = build_topology(cfg.graph, n=instance.n)
    if topology.graph.n != instance.n:
        raise ConfigError(
            f"graph has {topology.graph.n} nodes but the problem has {instance.n} agents"
        )
    strategy = cfg.strategy()
    beta = resolve_beta(cfg.algorithm.get("beta", "auto"), instance, topology)
    oracle = kkt_solve(instance)
    trace = outer.run(
        instance, topology, strategy, beta,
        max_outer=cfg.max_outer, gap_tol=cfg.gap_tol, oracle=oracle,
    )
    report = diagnose(instance, topology, beta=beta,
                      gamma=strategy.gamma if strategy.gamma is not None else 0.0)
    report["final_gap"] = trace.final_gap
    report["iterations"] = trace.iterations
    return trace, report


def diagnose(
    instance: ProblemInstance,
    topology: MixingTopology,
    beta=None,
    gamma: float = 0.0,
) -> dict:
    """Constants, step-size bounds, and rate quantities for a configuration."""
    beta_value = resolve_beta(beta, instance, topology)
    report = outer.max_stepsize(instance, topology, beta=beta_value, gamma=gamma)
    rate = build_rate_matrices(instance, topology, beta_value)
    return {
        "n": instance.n,
        "p": instance.p,
        "d": instance.d,
        "rank_A": instance.rank,
        "sigma": topology.sigma,
        "constants": rate.constants.to_dict(),
        "stepsize": report.to_dict(),
        "nu": rate.nu,
        "rho_M": rate.rho_M,
        "rho_upper_bound": rho_upper_bound(instance, topology, beta_value),
        "theta": theoretical_theta(instance, topology, beta_value, gamma),
        "beta_practical": outer.practical_stepsize(instance, topology),
    }


def fit_log_gap(trace: Trace, tail_fraction: float = 0.5):
    """Least-squares slope and R^2 of log(gap) vs k over the trailing window."""
    ks = trace.column("k").astype(float)
    gaps = trace.column("gap")
    mask = gaps > 0.0
    ks, gaps = ks[mask], gaps[mask]
    start = int(len(ks) * (1.0 - tail_fraction))
    ks, gaps = ks[start:], np.log(gaps[start:])
    if len(ks) < 3:
        raise ValueError("not enough positive-gap rows to fit a slope")
    slope, intercept = np.polyfit(ks, gaps, 1)
    fitted = slope * ks + intercept
    ss_res = float(np.sum((gaps - fitted) ** 2))
    ss_tot = float(np.sum((gaps - np.mean(gaps)) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0.0 else 1.0
    return float(slope), float(r2)


# ---------------------------------------------------------------------------
# Experiment recipes
# ---------------------------------------------------------------------------

def _experiment(
    name: str,
    instance: ProblemInstance,
    topology: MixingTopology,
    seed: int,
    out_dir,
    gap_tol: float,
    note: str,
) -> dict:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    oracle = kkt_solve(instance)
    beta_auto = outer.max_stepsize(instance, topology).beta_used
    beta_tuned = outer.practical_stepsize(instance, topology)
    grid = (
        ("beta_auto", beta_auto, EXPERIMENT_BUDGET_CERTIFIED),
        ("beta_auto_x2", 2.0 * beta_auto, EXPERIMENT_BUDGET_CERTIFIED),
        ("beta_auto_x5", 5.0 * beta_auto, EXPERIMENT_BUDGET_CERTIFIED),
        ("beta_tuned", beta_tuned, EXPERIMENT_BUDGET_TUNED),
    )
    manifest = {
        "experiment": name,
        "seed": seed,
        "note": note,
        "instance_hash": sha256_of(instance.to_dict()),
        "graph_hash": sha256_of(topology.graph.to_dict()),
        "sigma": topology.sigma,
        "rank_A": instance.rank,
        "n": instance.n,
        "p": instance.p,
        "gap_tol": gap_tol,
        "beta_bounds": outer.max_stepsize(instance, topology).to_dict(),
        "variants": [],
    }
    for variant_name, strategy in VARIANTS:
        entry = {
            "name": variant_name,
            "strategy": {
                "kind": strategy.kind,
                "steps": strategy.steps,
                "delta0": strategy.delta0,
                "gamma": strategy.gamma,
            },
            "runs": [],
        }
        for beta_label, beta, budget in grid:
            gamma = strategy.gamma if strategy.gamma is not None else 0.0
            csv_name = f"{variant_name}__{beta_label}.csv"
            record = {
                "beta_label": beta_label,
                "beta": beta,
                "csv": csv_name,
                "theta": (
                    theoretical_theta(instance, topology, beta, gamma)
                    if strategy.certified else None
                ),
                "rho_M": build_rate_matrices(instance, topology, beta).rho_M,
                "max_outer": budget,
            }
            try:
                trace = outer.run(
                    instance, topology, strategy, beta,
                    max_outer=budget, gap_tol=gap_tol, oracle=oracle,
                )
            except DivergenceError as exc:
                # Exploratory grid points beyond the certified bound may blow
                # up; record it instead of killing the sweep.
                record["status"] = "diverged"
                record["detail"] = str(exc)
                record["csv"] = None
                entry["runs"].append(record)
                continue
            write_trace_csv(trace, out_dir / csv_name)
            record["status"] = "converged" if trace.final_gap <= gap_tol else "max_outer"
            record["iterations"] = trace.iterations
            record["final_gap"] = trace.final_gap
            record["grad_steps"] = int(trace.column("grad_steps")[-1])
            record["exact_solves"] = int(trace.column("exact_solves")[-1])
            entry["runs"].append(record)
        manifest["variants"].append(entry)
    save_json(manifest, out_dir / "manifest.json")
    return manifest


def experiment1(seed: int, out_dir, gap_tol: float = DEFAULT_GAP_TOL) -> dict:
    """Directed exponential graph, rank-deficient coupling (rank 20 of 100 rows).

    20 agents with 2x2 quadratics (eigenvalues in [1, 10]), constraint blocks
    of 100 rows whose stacked matrix has rank 20, variance 10.  Runs every
    inner-solver variant over the step-size grid; one CSV per run.
    """
    seeds = np.random.SeedSequence(seed).spawn(2)
    quads = generate_quadratic_agents(20, 2, 1.0, 10.0, seeds[0])
    blocks, b = generate_constraint_rank_deficient(20, 2, 100, 20, 10.0, seeds[1])
    instance = build_instance(quads, blocks, b)
    topology = mixing_matrix(build_directed_exponential(20, 4), "uniform_regular")
    return _experiment(
        "experiment1", instance, topology, seed, out_dir, gap_tol,
        note=(
            "Directed exponential graph, rank-deficient stacked constraint. "
            "Variants compare inner-solve strategies of the same method; no "
            "external algorithms are run."
        ),
    )


def experiment2(seed: int, out_dir, gap_tol: float = DEFAULT_GAP_TOL) -> dict:
    """Erdos-Renyi graph (p=0.3), full-row-rank coupling, Metropolis weights."""
    seeds = np.random.SeedSequence(seed).spawn(3)
    quads = generate_quadratic_agents(20, 2, 1.0, 10.0, seeds[0])
    blocks, b = generate_constraint_full_rank(20, 2, 20, 10.0, seeds[1])
    instance = build_instance(quads, blocks, b)
    graph = build_erdos_renyi(20, 0.3, seeds[2])
    topology = mixing_matrix(graph, "metropolis")
    return _experiment(
        "experiment2", instance, topology, seed, out_dir, gap_tol,
        note=(
            "Undirected Erdos-Renyi graph, full-row-rank stacked constraint. "
            "Cross-algorithm comparison is replaced by cross-variant "
            "comparison of inner-solve strategies."
        ),
    )
