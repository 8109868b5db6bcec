"""The decentralized outer iteration and the centralized dual-ascent baseline.

One outer step, per agent i:

1. solve the shifted subproblem at lam_i (per the inner strategy) -> x_i,
2. tracker exchange:  z_i <- sum_j W_ij z_j + A_i (x_i_new - x_i_old),
3. dual exchange:     lam_i <- sum_j W_ij (lam_j + beta z_j_new).

Each step therefore costs exactly two communication rounds.  With the
initialization x = 0, z_i = -b/n, lam = 0, the tracker average equals the
scaled constraint residual (1/n)(A x - b) at every iteration, so the mean dual
performs plain dual ascent with step beta/n while the network only ever
exchanges local quantities.  The simulator applies W as a dense multiply,
equivalent to synchronous message rounds for doubly stochastic weights.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .diagnostics import (
    build_rate_matrices,
    consensus_errors,
    theoretical_theta,
    transition_violation,
)
from .errors import DivergenceError, ToleranceError
from .inner import InnerStrategy, agd, gd, solve_exact, solve_to_tolerance
from .network import MixingTopology
from .problem import KktSolution, ProblemInstance, minimizer_at
from .trace import Trace, TraceRow

DIVERGENCE_GAP = 1e6


@dataclass(frozen=True, eq=False)
class OuterState:
    """Stacked iterates plus cumulative cost counters.

    ``x`` is the concatenated primal vector (d,); ``z`` and ``lam`` hold one
    row per agent, shape (n, p).  ``lam_prev`` is kept only so diagnostics can
    evaluate the dual-increment error norm.
    """

    x: np.ndarray
    z: np.ndarray
    lam: np.ndarray
    lam_prev: np.ndarray
    k: int = 0
    grad_steps: int = 0
    exact_solves: int = 0
    comm_rounds: int = 0


def initial_state(instance: ProblemInstance) -> OuterState:
    n, p = instance.n, instance.p
    return OuterState(
        x=np.zeros(instance.d),
        z=np.tile(-instance.b / n, (n, 1)),
        lam=np.zeros((n, p)),
        lam_prev=np.zeros((n, p)),
    )


def tracking_step(
    state: OuterState,
    instance: ProblemInstance,
    topology: MixingTopology,
    strategy: InnerStrategy,
    beta: float,
) -> OuterState:
    """Advance one outer iteration; returns a fresh state.

    Tolerance strategies solve to delta0 * gamma^(k+1) at outer index k.
    A :class:`ToleranceError` from an inner solve is re-raised with the agent
    index attached.
    """
    n = instance.n
    off = instance.offsets
    x_new = np.empty_like(state.x)
    dz = np.empty_like(state.z)
    grad_steps = 0
    exact_solves = 0
    delta_next = None
    if strategy.kind == "agd_tolerance":
        delta_next = strategy.delta0 * strategy.gamma ** (state.k + 1)
    for i, agent in enumerate(instance.agents):
        xi = state.x[off[i]:off[i + 1]]
        lam_i = state.lam[i]
        try:
            if strategy.kind == "exact":
                res = solve_exact(agent, lam_i)
            elif strategy.kind == "gd_fixed":
                res = gd(agent, lam_i, xi, strategy.steps)
            elif strategy.kind == "agd_fixed":
                res = agd(agent, lam_i, xi, steps=strategy.steps)
            else:
                res = solve_to_tolerance(
                    agent, lam_i, xi, delta_next, n, mu=instance.mu
                )
        except ToleranceError as exc:
            raise ToleranceError(f"agent {i} at outer iteration {state.k}: {exc}") from exc
        x_new[off[i]:off[i + 1]] = res.x_new
        dz[i] = agent.A @ (res.x_new - xi)
        grad_steps += res.grad_steps
        exact_solves += res.exact_solves
    W = topology.W
    z_new = W @ state.z + dz
    lam_new = W @ (state.lam + beta * z_new)
    return OuterState(
        x=x_new,
        z=z_new,
        lam=lam_new,
        lam_prev=state.lam,
        k=state.k + 1,
        grad_steps=state.grad_steps + grad_steps,
        exact_solves=state.exact_solves + exact_solves,
        comm_rounds=state.comm_rounds + 2,
    )


@dataclass(frozen=True)
class StepSizeReport:
    """Theoretical step-size bounds and the guaranteed rate at the chosen step.

    ``bound_smooth`` = mu / smax_blockdiag^2 and ``bound_rate`` is the
    (much smaller) bound under which the error-propagation radius is certified
    below one; the usable guarantee needs both, so ``beta_theoretical`` is
    their minimum.  ``theta`` is the certified linear rate at ``beta_used``
    and schedule decay ``gamma``; ``contracting`` flags theta < 1.
    """

    beta_theoretical: float
    beta_used: float
    bound_smooth: float
    bound_rate: float
    theta: float
    gamma: float
    contracting: bool

    def to_dict(self) -> dict:
        return {
            "beta_theoretical": self.beta_theoretical,
            "beta_used": self.beta_used,
            "bound_smooth": self.bound_smooth,
            "bound_rate": self.bound_rate,
            "theta": self.theta,
            "gamma": self.gamma,
            "contracting": self.contracting,
        }


def max_stepsize(
    instance: ProblemInstance,
    topology: MixingTopology,
    beta: float | None = None,
    gamma: float = 0.0,
) -> StepSizeReport:
    """Evaluate both step-size bounds and the rate theta(beta, gamma).

    ``beta_used`` defaults to 0.9x the theoretical bound.  The bound is very
    conservative on badly conditioned constraints; pass an explicit beta to
    override (the report still shows both bounds).
    """
    mu, ell = instance.mu, instance.ell
    n = instance.n
    sigma = topology.sigma
    sb = instance.smax_blockdiag
    su = instance.smin_nonzero
    bound_smooth = mu / sb**2
    bound_rate = (1.0 - sigma) ** 2 * su**2 * mu**2 / (16.0 * sb**4 * n * ell)
    beta_theoretical = min(bound_smooth, bound_rate)
    beta_used = 0.9 * beta_theoretical if beta is None else float(beta)
    theta = theoretical_theta(instance, topology, beta_used, gamma)
    return StepSizeReport(
        beta_theoretical=beta_theoretical,
        beta_used=beta_used,
        bound_smooth=bound_smooth,
        bound_rate=bound_rate,
        theta=theta,
        gamma=gamma,
        contracting=theta < 1.0,
    )


def practical_stepsize(
    instance: ProblemInstance, topology: MixingTopology | None = None
) -> float:
    """Half the dual-ascent-optimal step, lifted by n and damped by consensus.

    The mean dual iterate ascends with effective step beta/n, so
    beta = n / (smax^2/mu + smin_nonzero^2/ell) sits at half the optimal
    centralized step and inside every stability hypothesis of the mean
    recursion.  Consensus feedback tightens the usable range on poorly mixing
    graphs, so the step is further scaled by min(1, 2(1 - sigma)) when a
    topology is given.  This is a heuristic working step, not a certified
    one: the certified bound is far smaller on realistic instances.
    """
    sa2 = instance.smax_stacked**2
    su2 = instance.smin_nonzero**2
    beta = instance.n / (sa2 / instance.mu + su2 / instance.ell)
    if topology is not None:
        beta *= min(1.0, 2.0 * (1.0 - topology.sigma))
    return beta


def _gap(x: np.ndarray, oracle: KktSolution, denom: float) -> float:
    err = float(np.linalg.norm(x - oracle.x_star))
    return err / denom if denom > 0.0 else err


def run(
    instance: ProblemInstance,
    topology: MixingTopology,
    strategy: InnerStrategy,
    beta: float,
    max_outer: int,
    gap_tol: float,
    oracle: KktSolution,
    observer=None,
) -> Trace:
    """Iterate until the optimality gap reaches gap_tol or max_outer steps.

    The gap is ||x^k - x*|| / ||x^0 - x*||.  Every row carries the four
    error norms; certified strategies (exact / tolerance-controlled) also get
    the per-transition exceedance of the error-propagation bound.  For the
    first transition the trailing accuracy entry is widened to the true
    initial error ||x^0 - x*(lam^0)||, which is what the bound assumes about
    the starting point.  Raises :class:`DivergenceError` if the gap passes
    1e6.

    ``observer``, when given, is called with every fresh state (tests use it
    to assert per-iteration invariants without re-implementing the loop).
    """
    if max_outer < 0:
        raise ValueError(f"max_outer must be nonnegative, got {max_outer}")
    rate = build_rate_matrices(instance, topology, beta)
    state = initial_state(instance)
    denom = float(np.linalg.norm(oracle.x_star))  # x^0 = 0
    certified = strategy.certified

    def schedule(k: int):
        return strategy.delta_at(k)

    delta0 = schedule(0)
    if certified:
        e0 = float(np.linalg.norm(state.x - minimizer_at(instance, np.zeros(instance.p))))
        xi_now0 = max(delta0, e0)
    else:
        xi_now0 = None
    zeta = consensus_errors(state, oracle, delta_next=schedule(1), delta_now=xi_now0)
    gap = _gap(state.x, oracle, denom)
    rows = [TraceRow(
        k=0, grad_steps=0, exact_solves=0, comm_rounds=0, gap=gap,
        delta_k=np.nan if delta0 is None else delta0,
        zeta1=zeta.components[0], zeta2=zeta.components[1],
        zeta3=zeta.components[2], zeta4=zeta.components[3],
        lmi_violation=np.nan,
    )]
    while state.k < max_outer and gap > gap_tol:
        state = tracking_step(state, instance, topology, strategy, beta)
        if observer is not None:
            observer(state)
        k = state.k
        zeta_new = consensus_errors(
            state, oracle, delta_next=schedule(k + 1), delta_now=schedule(k)
        )
        violation = transition_violation(zeta, zeta_new, rate) if certified else np.nan
        gap = _gap(state.x, oracle, denom)
        if gap > DIVERGENCE_GAP:
            raise DivergenceError(
                f"optimality gap {gap:.3e} at outer iteration {k} "
                f"(beta={beta:.3e}); |x|={np.linalg.norm(state.x):.3e}, "
                f"|lam|={np.linalg.norm(state.lam):.3e}"
            )
        dk = schedule(k)
        rows.append(TraceRow(
            k=k, grad_steps=state.grad_steps, exact_solves=state.exact_solves,
            comm_rounds=state.comm_rounds, gap=gap,
            delta_k=np.nan if dk is None else dk,
            zeta1=zeta_new.components[0], zeta2=zeta_new.components[1],
            zeta3=zeta_new.components[2], zeta4=zeta_new.components[3],
            lmi_violation=violation,
        ))
        zeta = zeta_new
    return Trace(rows=rows, final_state=state)


@dataclass(eq=False)
class DualAscentTrace:
    """Distance to the projected dual optimum along a centralized run."""

    errors: np.ndarray       # ||lam^k - lam*_c||, length iterations + 1
    eta: float               # contraction factor max(|1 - a smax^2/mu|, |1 - a smin^2/ell|)
    alpha: float
    final_x: np.ndarray

    @property
    def ratios(self) -> np.ndarray:
        """Per-step contraction ratios where the error is above 1e-12."""
        prev, nxt = self.errors[:-1], self.errors[1:]
        mask = prev > 1e-12
        return nxt[mask] / prev[mask]


def dual_ascent_eta(instance: ProblemInstance, alpha: float) -> float:
    return max(
        abs(1.0 - alpha * instance.smax_stacked**2 / instance.mu),
        abs(1.0 - alpha * instance.smin_nonzero**2 / instance.ell),
    )


def dual_ascent_run(
    instance: ProblemInstance,
    alpha: float,
    max_iter: int,
    oracle: KktSolution,
) -> DualAscentTrace:
    """Centralized dual ascent with exact subproblem solves, lam^0 = 0.

    Requires 0 < alpha < 2 mu / smax_stacked^2, the range on which the dual
    iterate contracts toward the projected optimum at factor eta.
    """
    alpha_max = 2.0 * instance.mu / instance.smax_stacked**2
    if not 0.0 < alpha < alpha_max:
        raise ValueError(
            f"alpha must lie in (0, {alpha_max:.6g}), got {alpha}"
        )
    lam = np.zeros(instance.p)
    errors = [float(np.linalg.norm(lam - oracle.lambda_star_c))]
    x = np.zeros(instance.d)
    for _ in range(max_iter):
        x = minimizer_at(instance, lam)
        lam = lam + alpha * instance.constraint_residual(x)
        errors.append(float(np.linalg.norm(lam - oracle.lambda_star_c)))
    return DualAscentTrace(
        errors=np.array(errors),
        eta=dual_ascent_eta(instance, alpha),
        alpha=alpha,
        final_x=x,
    )
