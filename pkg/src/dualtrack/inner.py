"""Solvers for the per-agent shifted subproblem.

At each outer iteration agent i minimizes

    F_i(x) = (1/2) x^T P_i x + q_i^T x + lam_i^T (A_i x - b/n)

whose gradient is P_i x + q_i + A_i^T lam_i (the b term is constant in x).
The subproblem can be solved exactly (dense factorization), with a fixed
budget of plain or accelerated gradient steps, or to a certified accuracy:
stopping once ||grad F_i(x)|| <= mu * delta / sqrt(n) guarantees
||x - x_i*(lam_i)|| <= delta / sqrt(n) by strong convexity, where mu is the
global strong-convexity constant (min over agents).

Gradient-step accounting: ``grad_steps`` counts every gradient evaluation the
solver consumed, including evaluations at momentum points and the certifying
evaluations of the tolerance stop rule.  The fixed-budget solvers report the
final gradient norm as a diagnostic; that evaluation never feeds an update and
is not charged, so a budget of s costs exactly s gradient steps.  Exact solves
are counted separately (``exact_solves``) so gradient-step totals stay
meaningful.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ToleranceError
from .problem import AgentProblem

KINDS = ("exact", "gd_fixed", "agd_fixed", "agd_tolerance")


@dataclass(frozen=True)
class InnerStrategy:
    """Choice of inner solver and its accuracy control.

    ``gd_fixed`` / ``agd_fixed`` take a step budget ``steps >= 1``;
    ``agd_tolerance`` takes a geometric accuracy schedule delta0 * gamma^k.
    """

    kind: str
    steps: int | None = None
    delta0: float | None = None
    gamma: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown inner solver {self.kind!r}, expected one of {KINDS}")
        if self.kind in ("gd_fixed", "agd_fixed"):
            if self.steps is None or self.steps < 1:
                raise ValueError(f"{self.kind} needs steps >= 1, got {self.steps}")
            if self.delta0 is not None or self.gamma is not None:
                raise ValueError(f"{self.kind} does not take a tolerance schedule")
        elif self.kind == "agd_tolerance":
            if self.delta0 is None or self.delta0 <= 0.0:
                raise ValueError(f"agd_tolerance needs delta0 > 0, got {self.delta0}")
            if self.gamma is None or not 0.0 < self.gamma < 1.0:
                raise ValueError(f"agd_tolerance needs gamma in (0, 1), got {self.gamma}")
            if self.steps is not None:
                raise ValueError("agd_tolerance does not take a step budget")
        else:  # exact
            if self.steps is not None or self.delta0 is not None or self.gamma is not None:
                raise ValueError("exact solver takes no options")

    @classmethod
    def exact(cls) -> "InnerStrategy":
        return cls(kind="exact")

    @classmethod
    def gd_fixed(cls, steps: int) -> "InnerStrategy":
        return cls(kind="gd_fixed", steps=steps)

    @classmethod
    def agd_fixed(cls, steps: int) -> "InnerStrategy":
        return cls(kind="agd_fixed", steps=steps)

    @classmethod
    def agd_tolerance(cls, delta0: float = 1.0, gamma: float = 0.95) -> "InnerStrategy":
        return cls(kind="agd_tolerance", delta0=delta0, gamma=gamma)

    def delta_at(self, k: int) -> float | None:
        """Accuracy target delta0 * gamma^k; 0 for exact, None for fixed budgets."""
        if self.kind == "agd_tolerance":
            return self.delta0 * self.gamma ** k
        if self.kind == "exact":
            return 0.0
        return None

    @property
    def certified(self) -> bool:
        return self.kind in ("exact", "agd_tolerance")


@dataclass(frozen=True, eq=False)
class InnerResult:
    x_new: np.ndarray
    grad_steps: int
    achieved_grad_norm: float
    exact_solves: int = 0


def subproblem_gradient(agent: AgentProblem, x: np.ndarray, lam: np.ndarray) -> np.ndarray:
    """Gradient of the shifted objective: P x + q + A^T lam."""
    return agent.P @ x + agent.q + agent.A.T @ lam


def subproblem_value(
    agent: AgentProblem, x: np.ndarray, lam: np.ndarray, b_over_n: np.ndarray
) -> float:
    return float(0.5 * x @ agent.P @ x + agent.q @ x + lam @ (agent.A @ x - b_over_n))


def solve_exact(agent: AgentProblem, lam: np.ndarray) -> InnerResult:
    """Closed-form subproblem solution via dense factorization of P."""
    rhs = -(agent.q + agent.A.T @ lam)
    x = np.linalg.solve(agent.P, rhs)
    residual = float(np.linalg.norm(agent.P @ x - rhs))
    return InnerResult(x_new=x, grad_steps=0, achieved_grad_norm=residual, exact_solves=1)


def gd(agent: AgentProblem, lam: np.ndarray, x0: np.ndarray, steps: int) -> InnerResult:
    """Plain gradient descent with step 1/ell for a fixed number of steps."""
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    step = 1.0 / agent.ell
    shift = agent.q + agent.A.T @ lam
    x = np.asarray(x0, dtype=float).copy()
    for _ in range(steps):
        x = x - step * (agent.P @ x + shift)
    achieved = float(np.linalg.norm(agent.P @ x + shift))
    return InnerResult(x_new=x, grad_steps=steps, achieved_grad_norm=achieved)


def _momentum(agent: AgentProblem) -> float:
    kappa = agent.ell / agent.mu
    rk = math.sqrt(kappa)
    return (rk - 1.0) / (rk + 1.0)


def _agd_until(agent, shift, x0, grad_tol, max_iter, g0=None, count0=0):
    """Two-sequence accelerated descent until ||grad|| <= grad_tol.

    Returns (x, grad_evals, achieved_norm).  The evaluation at the warm start
    doubles as the first certifying check; y0 = x0 so it is reused for the
    first step.  Raises ToleranceError at the iteration cap.
    """
    step = 1.0 / agent.ell
    m = _momentum(agent)
    x = np.asarray(x0, dtype=float)
    count = count0
    if g0 is None:
        g0 = agent.P @ x + shift
        count += 1
    norm_g = float(np.linalg.norm(g0))
    if norm_g <= grad_tol:
        return x.copy(), count, norm_g
    y, gy = x, g0
    iters = 0
    while True:
        iters += 1
        x_next = y - step * gy
        gx = agent.P @ x_next + shift
        count += 1
        norm_g = float(np.linalg.norm(gx))
        if norm_g <= grad_tol:
            return x_next, count, norm_g
        if iters >= max_iter:
            raise ToleranceError(
                f"inner solve hit the {max_iter}-iteration cap "
                f"(gradient norm {norm_g:.3e}, target {grad_tol:.3e})"
            )
        y = x_next + m * (x_next - x)
        gy = agent.P @ y + shift
        count += 1
        x = x_next


def agd(
    agent: AgentProblem,
    lam: np.ndarray,
    x0: np.ndarray,
    steps: int | None = None,
    grad_tol: float | None = None,
    max_iter: int = 1_000_000,
) -> InnerResult:
    """Accelerated gradient descent with step 1/ell and constant momentum.

    Momentum coefficient (sqrt(kappa) - 1)/(sqrt(kappa) + 1) with
    kappa = ell/mu.  Exactly one of ``steps`` (fixed budget) or ``grad_tol``
    (stop when the gradient norm falls below it) must be given.
    """
    if (steps is None) == (grad_tol is None):
        raise ValueError("specify exactly one of steps or grad_tol")
    shift = agent.q + agent.A.T @ lam
    if grad_tol is not None:
        x, count, achieved = _agd_until(agent, shift, x0, grad_tol, max_iter)
        return InnerResult(x_new=x, grad_steps=count, achieved_grad_norm=achieved)
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    step = 1.0 / agent.ell
    m = _momentum(agent)
    x = np.asarray(x0, dtype=float)
    y = x
    for _ in range(steps):
        gy = agent.P @ y + shift
        x_next = y - step * gy
        y = x_next + m * (x_next - x)
        x = x_next
    achieved = float(np.linalg.norm(agent.P @ x + shift))  # diagnostic, not charged
    return InnerResult(x_new=x, grad_steps=steps, achieved_grad_norm=achieved)


def agd_iteration_bound(
    agent: AgentProblem,
    grad_norm_at_start: float,
    delta_target: float,
    n: int,
    mu: float | None = None,
) -> int:
    """Worst-case accelerated-descent iterations to certify delta_target.

    Evaluates ceil( sqrt(ell_i/mu_i) * ln(n (ell_i + mu_i) g0^2 /
    (delta^2 mu^3)) ) where mu is the global strong-convexity constant
    (defaults to the agent's own).  Returns 0 when the log argument is <= 1,
    in which case the warm start already certifies the target.
    """
    if delta_target <= 0.0:
        raise ValueError(f"delta_target must be positive, got {delta_target}")
    if grad_norm_at_start < 0.0:
        raise ValueError("grad_norm_at_start must be nonnegative")
    if grad_norm_at_start == 0.0:
        return 0
    mu_global = agent.mu if mu is None else mu
    arg = (
        n * (agent.ell + agent.mu) * grad_norm_at_start**2
        / (delta_target**2 * mu_global**3)
    )
    if arg <= 1.0:
        return 0
    return int(math.ceil(math.sqrt(agent.ell / agent.mu) * math.log(arg)))


def solve_to_tolerance(
    agent: AgentProblem,
    lam: np.ndarray,
    x0: np.ndarray,
    delta_target: float,
    n: int,
    mu: float | None = None,
) -> InnerResult:
    """Accelerated descent until the certified stop rule fires.

    Stops once ||grad F_i(x)|| <= mu * delta_target / sqrt(n), which certifies
    ||x - x_i*(lam)|| <= delta_target / sqrt(n).  A hard iteration cap of
    10x the worst-case bound plus 100 turns a silent hang into a
    :class:`ToleranceError` that reports the achieved gradient norm.

    Geometric schedules eventually push the threshold below what float64 can
    evaluate (the computed gradient at the exact minimizer is rounding noise
    of the cancellation P x + shift).  The threshold is therefore clamped at a
    noise floor proportional to machine epsilon times the shift magnitude; a
    clamped solve returns a machine-precision solution, which is the best any
    certificate can ask for.
    """
    if delta_target < 0.0:
        raise ValueError(f"delta_target must be nonnegative, got {delta_target}")
    mu_global = agent.mu if mu is None else mu
    shift = agent.q + agent.A.T @ lam
    floor = 64.0 * np.finfo(float).eps * (1.0 + float(np.linalg.norm(shift)))
    # A geometric schedule can underflow delta_target to exactly zero; the
    # floor then asks for a machine-precision solve, the best available.
    grad_tol = max(mu_global * delta_target / math.sqrt(n), floor)
    delta_eff = grad_tol * math.sqrt(n) / mu_global
    x = np.asarray(x0, dtype=float)
    g0 = agent.P @ x + shift
    cap = 10 * agd_iteration_bound(
        agent, float(np.linalg.norm(g0)), delta_eff, n, mu=mu_global
    ) + 100
    x_new, count, achieved = _agd_until(
        agent, shift, x, grad_tol, cap, g0=g0, count0=1
    )
    return InnerResult(x_new=x_new, grad_steps=count, achieved_grad_norm=achieved)
