"""Convergence-rate machinery: the 4x4 error-propagation matrix and checks.

The outer iteration admits a componentwise bound zeta^{k+1} <= M zeta^k +
H xi^k, where zeta stacks the four error norms

    [ ||z - 1 zbar||, ||lam - 1 lambar||, ||lam - lam_prev||,
      sqrt(n) ||lambar - lam*_c|| ]

and xi = [delta^{k+1}, delta^k] carries the inner-solve accuracy targets.
Everything here is numeric: the matrices are filled from the instance and
mixing constants, the spectral radius comes from power iteration (M is
nonnegative, and irreducible whenever sigma > 0, so the dominant eigenvalue is
its Perron root), and ``check_lmi`` verifies the bound transition by
transition along a run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .network import MixingTopology
from .problem import KktSolution, ProblemInstance


@dataclass(frozen=True)
class RateConstants:
    """Snapshot of every scalar entering the rate matrices."""

    sigma: float
    beta: float
    mu: float
    ell: float
    n: int
    smax_stacked: float
    smin_nonzero: float
    smax_blockdiag: float

    def to_dict(self) -> dict:
        return {
            "sigma": self.sigma,
            "beta": self.beta,
            "mu": self.mu,
            "ell": self.ell,
            "n": self.n,
            "smax_stacked": self.smax_stacked,
            "smin_nonzero": self.smin_nonzero,
            "smax_blockdiag": self.smax_blockdiag,
        }


@dataclass(frozen=True, eq=False)
class RateMatrices:
    M: np.ndarray  # 4x4, nonnegative
    H: np.ndarray  # 4x2, nonnegative
    rho_M: float
    nu: float
    constants: RateConstants


def build_rate_matrices(
    instance: ProblemInstance, topology: MixingTopology, beta: float
) -> RateMatrices:
    """Fill M and H from the instance/mixing constants at step size beta."""
    if beta <= 0.0:
        raise ValueError(f"beta must be positive, got {beta}")
    s = topology.sigma
    n = instance.n
    mu, ell = instance.mu, instance.ell
    sa = instance.smax_stacked
    su = instance.smin_nonzero
    sb = instance.smax_blockdiag
    rn = math.sqrt(n)
    nu = max(
        abs(1.0 - beta * sa**2 / (n * mu)),
        abs(1.0 - beta * su**2 / (n * ell)),
    )
    M = np.array([
        [s, 0.0, sb**2 / mu, 0.0],
        [beta * s**2, s, beta * s * sb**2 / mu, 0.0],
        [beta * s, 1.0 + s + beta * sa * sb / (rn * mu), beta * sb**2 / mu,
         beta * sa**2 / (n * mu)],
        [0.0, beta * sa * sb / (rn * mu), 0.0, nu],
    ])
    H = np.array([
        [sb, sb],
        [beta * s * sb, beta * s * sb],
        [beta * (sb + sa / rn), beta * sb],
        [beta * sa / rn, 0.0],
    ])
    constants = RateConstants(
        sigma=s, beta=beta, mu=mu, ell=ell, n=n,
        smax_stacked=sa, smin_nonzero=su, smax_blockdiag=sb,
    )
    return RateMatrices(M=M, H=H, rho_M=perron_radius(M), nu=nu, constants=constants)


def perron_radius(M: np.ndarray, tol: float = 1e-12, max_iter: int = 200_000) -> float:
    """Spectral radius of a nonnegative matrix by power iteration.

    With a positive start vector the iteration converges to the Perron root;
    no symmetrization is needed.
    """
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    v = np.full(n, 1.0 / math.sqrt(n))
    rho = 0.0
    for _ in range(max_iter):
        w = M @ v
        norm_w = float(np.linalg.norm(w))
        if norm_w == 0.0:
            return 0.0
        rho_new = norm_w  # v is unit length, so |Mv| estimates the dominant eigenvalue
        v = w / norm_w
        if abs(rho_new - rho) <= tol * max(1.0, rho_new):
            residual = float(np.linalg.norm(M @ v - rho_new * v))
            if residual <= math.sqrt(tol) * max(1.0, rho_new):
                return rho_new
        rho = rho_new
    return rho


def rho_upper_bound(
    instance: ProblemInstance, topology: MixingTopology, beta: float
) -> float:
    """Closed-form bound on the spectral radius of M at an admissible beta."""
    n = instance.n
    mu, ell = instance.mu, instance.ell
    su = instance.smin_nonzero
    sb = instance.smax_blockdiag
    term_rate = 1.0 - beta * su**2 / (2.0 * n * ell)
    term_mix = topology.sigma + 4.0 * math.sqrt(
        beta * sb**4 * n * ell / (su**2 * mu**2)
    )
    return max(term_rate, term_mix)


def theoretical_theta(
    instance: ProblemInstance, topology: MixingTopology, beta: float, gamma: float
) -> float:
    """Guaranteed linear rate: max of the two radius terms and the schedule decay."""
    return max(rho_upper_bound(instance, topology, beta), gamma)


@dataclass(frozen=True, eq=False)
class ZetaVector:
    """The four stacked error norms at one iteration, plus the accuracy pair.

    ``components`` = [tracker deviation, dual deviation, dual increment,
    sqrt(n) * mean-dual error]; ``xi`` = [delta_next, delta_now] (NaN when the
    run carries no certified accuracy schedule).
    """

    components: np.ndarray
    xi: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.components, dtype=float)
        x = np.asarray(self.xi, dtype=float)
        if c.shape != (4,):
            raise ValueError(f"components must have shape (4,), got {c.shape}")
        if x.shape != (2,):
            raise ValueError(f"xi must have shape (2,), got {x.shape}")
        c.setflags(write=False)
        x.setflags(write=False)
        object.__setattr__(self, "components", c)
        object.__setattr__(self, "xi", x)


def consensus_errors(
    state,
    oracle: KktSolution,
    delta_next: float | None = None,
    delta_now: float | None = None,
) -> ZetaVector:
    """Compute the four error norms of an outer state against the dual optimum.

    ``state`` is an outer iterate carrying ``z``, ``lam`` and ``lam_prev`` as
    (n, p) arrays.  The delta pair fills xi; pass None for runs without a
    certified schedule.
    """
    z = state.z
    lam = state.lam
    n = z.shape[0]
    zbar = z.mean(axis=0)
    lambar = lam.mean(axis=0)
    c1 = float(np.linalg.norm(z - zbar))
    c2 = float(np.linalg.norm(lam - lambar))
    c3 = float(np.linalg.norm(lam - state.lam_prev))
    c4 = float(math.sqrt(n) * np.linalg.norm(lambar - oracle.lambda_star_c))
    xi = np.array([
        np.nan if delta_next is None else float(delta_next),
        np.nan if delta_now is None else float(delta_now),
    ])
    return ZetaVector(components=np.array([c1, c2, c3, c4]), xi=xi)


def transition_violation(zeta_from: ZetaVector, zeta_to: ZetaVector, rate: RateMatrices) -> float:
    """Largest componentwise exceedance of zeta_to over M zeta + H xi (0 if none)."""
    bound = rate.M @ zeta_from.components + rate.H @ zeta_from.xi
    return float(max(0.0, np.max(zeta_to.components - bound)))


@dataclass(frozen=True)
class LmiReport:
    n_transitions: int
    max_violation: float
    worst_transition: int
    n_beyond_slack: int
    slack_scale: float


def check_lmi(
    zetas: Sequence[ZetaVector], rate: RateMatrices, slack_scale: float = 1e-8
) -> LmiReport:
    """Verify zeta^{k+1} <= M zeta^k + H xi^k along a run.

    The per-transition slack is ``slack_scale * (1 + ||zeta^k||)``, absorbing
    float accumulation in the stacked norms.  The report carries the largest
    raw exceedance and how many transitions exceeded their slack.
    """
    if len(zetas) < 2:
        raise ValueError("need at least two iterates to check a transition")
    max_violation = 0.0
    worst = -1
    beyond = 0
    for k in range(len(zetas) - 1):
        v = transition_violation(zetas[k], zetas[k + 1], rate)
        if v > max_violation:
            max_violation = v
            worst = k
        if v > slack_scale * (1.0 + float(np.linalg.norm(zetas[k].components))):
            beyond += 1
    return LmiReport(
        n_transitions=len(zetas) - 1,
        max_violation=max_violation,
        worst_transition=worst,
        n_beyond_slack=beyond,
        slack_scale=slack_scale,
    )
