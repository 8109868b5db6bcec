"""Constraint-coupled quadratic instances and their ground-truth solutions.

Each agent i owns a strongly convex quadratic (1/2) x^T P_i x + q_i^T x and a
constraint block A_i; the agents are coupled only through sum_i A_i x_i = b.
The stacked constraint matrix A = [A_1 ... A_n] need not have full row rank,
in which case the dual optimum is non-unique and the quantity of interest is
its projection onto the column space of A.

Randomness: generators draw from PCG64 streams spawned off a single
``numpy.random.SeedSequence``, one child stream per agent (and separate
streams for the constraint and right-hand side), so results are reproducible
and independent of evaluation order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GenerationError, InfeasibleProblemError

# Relative cutoff for the numerical rank of the stacked constraint matrix.
RANK_RTOL = 1e-8


@dataclass(frozen=True, eq=False)
class AgentProblem:
    """One agent's quadratic objective and constraint block.

    P must be symmetric positive definite; its extreme eigenvalues (the
    strong-convexity and smoothness constants) are computed once and cached.
    """

    P: np.ndarray
    q: np.ndarray
    A: np.ndarray
    mu: float = field(init=False)
    ell: float = field(init=False)

    def __post_init__(self):
        P = np.asarray(self.P, dtype=float)
        q = np.asarray(self.q, dtype=float)
        A = np.asarray(self.A, dtype=float)
        if P.ndim != 2 or P.shape[0] != P.shape[1]:
            raise ValueError(f"P must be square, got shape {P.shape}")
        d = P.shape[0]
        if q.shape != (d,):
            raise ValueError(f"q must have shape ({d},), got {q.shape}")
        if A.ndim != 2 or A.shape[1] != d:
            raise ValueError(f"A must have {d} columns, got shape {A.shape}")
        asym = np.max(np.abs(P - P.T))
        if asym > 1e-12 * (1.0 + np.max(np.abs(P))):
            raise ValueError(f"P is not symmetric (asymmetry {asym:.2e})")
        eigs = np.linalg.eigvalsh(P)
        if eigs[0] <= 0.0:
            raise ValueError(f"P is not positive definite (min eigenvalue {eigs[0]:.2e})")
        for name, arr in (("P", P), ("q", q), ("A", A)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "mu", float(eigs[0]))
        object.__setattr__(self, "ell", float(eigs[-1]))

    @property
    def dim(self) -> int:
        return self.P.shape[0]

    def objective_gradient(self, x: np.ndarray) -> np.ndarray:
        return self.P @ x + self.q


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    """The coupled problem: minimize sum_i f_i(x_i) subject to sum_i A_i x_i = b.

    Spectral constants of the constraint are cached on construction:

    - ``smax_stacked``: largest singular value of A = [A_1 ... A_n]
    - ``smin_nonzero``: smallest nonzero singular value of A (cutoff relative
      to the largest at ``RANK_RTOL``)
    - ``smax_blockdiag``: largest singular value of blockdiag(A_1, ..., A_n),
      i.e. the largest block singular value
    """

    agents: tuple[AgentProblem, ...]
    b: np.ndarray
    mu: float = field(init=False)
    ell: float = field(init=False)
    smax_stacked: float = field(init=False)
    smin_nonzero: float = field(init=False)
    smax_blockdiag: float = field(init=False)
    rank: int = field(init=False)

    def __post_init__(self):
        agents = tuple(self.agents)
        if not agents:
            raise ValueError("instance needs at least one agent")
        b = np.asarray(self.b, dtype=float)
        p = agents[0].A.shape[0]
        if any(a.A.shape[0] != p for a in agents):
            raise ValueError("all constraint blocks must have the same row count")
        if b.shape != (p,):
            raise ValueError(f"b must have shape ({p},), got {b.shape}")
        b.setflags(write=False)
        object.__setattr__(self, "agents", agents)
        object.__setattr__(self, "b", b)
        stacked = np.hstack([a.A for a in agents])
        singulars = np.linalg.svd(stacked, compute_uv=False)
        cutoff = RANK_RTOL * (singulars[0] if singulars.size else 0.0)
        nonzero = singulars[singulars > cutoff]
        object.__setattr__(self, "mu", min(a.mu for a in agents))
        object.__setattr__(self, "ell", max(a.ell for a in agents))
        object.__setattr__(self, "smax_stacked", float(singulars[0]) if singulars.size else 0.0)
        object.__setattr__(self, "smin_nonzero", float(nonzero[-1]) if nonzero.size else 0.0)
        object.__setattr__(self, "smax_blockdiag", max(
            float(np.linalg.svd(a.A, compute_uv=False)[0]) for a in agents
        ))
        object.__setattr__(self, "rank", int(nonzero.size))

    @property
    def n(self) -> int:
        return len(self.agents)

    @property
    def p(self) -> int:
        return self.b.shape[0]

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(a.dim for a in self.agents)

    @property
    def d(self) -> int:
        return sum(self.dims)

    @property
    def offsets(self) -> tuple[int, ...]:
        out = [0]
        for a in self.agents:
            out.append(out[-1] + a.dim)
        return tuple(out)

    def stacked_A(self) -> np.ndarray:
        return np.hstack([a.A for a in self.agents])

    def split(self, x: np.ndarray) -> list[np.ndarray]:
        """Split a stacked primal vector into per-agent blocks."""
        off = self.offsets
        return [x[off[i]:off[i + 1]] for i in range(self.n)]

    def objective(self, x: np.ndarray) -> float:
        total = 0.0
        for a, xi in zip(self.agents, self.split(x)):
            total += 0.5 * xi @ a.P @ xi + a.q @ xi
        return float(total)

    def objective_gradient(self, x: np.ndarray) -> np.ndarray:
        return np.concatenate(
            [a.objective_gradient(xi) for a, xi in zip(self.agents, self.split(x))]
        )

    def constraint_residual(self, x: np.ndarray) -> np.ndarray:
        res = -self.b.copy()
        for a, xi in zip(self.agents, self.split(x)):
            res += a.A @ xi
        return res

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "p": self.p,
            "dims": list(self.dims),
            "agents": [
                {"P": a.P.tolist(), "q": a.q.tolist(), "A": a.A.tolist()}
                for a in self.agents
            ],
            "b": self.b.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ProblemInstance":
        agents = tuple(
            AgentProblem(
                P=np.asarray(spec["P"], dtype=float),
                q=np.asarray(spec["q"], dtype=float),
                A=np.asarray(spec["A"], dtype=float),
            )
            for spec in data["agents"]
        )
        return cls(agents=agents, b=np.asarray(data["b"], dtype=float))


@dataclass(frozen=True, eq=False)
class KktSolution:
    """Primal optimum and the dual optimum projected onto Col(A)."""

    x_star: np.ndarray
    lambda_star_c: np.ndarray

    def __post_init__(self):
        for name in ("x_star", "lambda_star_c"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


def _seed_sequence(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


def generate_quadratic_agents(
    n: int, d_i: int, eig_lo: float, eig_hi: float, seed
) -> list[tuple[np.ndarray, np.ndarray]]:
    """Per-agent quadratics (P_i, q_i) with eigenvalues in [eig_lo, eig_hi].

    Each P_i is rebuilt from a random orthogonal basis and uniformly drawn
    eigenvalues; q_i entries are standard normal.  ``seed`` is an integer or a
    ``numpy.random.SeedSequence``; one spawned generator per agent keeps the
    output independent of generation order.
    """
    if n < 1 or d_i < 1:
        raise ValueError(f"need n >= 1 and d_i >= 1, got n={n}, d_i={d_i}")
    if not 0.0 < eig_lo <= eig_hi:
        raise ValueError(f"need 0 < eig_lo <= eig_hi, got [{eig_lo}, {eig_hi}]")
    out = []
    for stream in _seed_sequence(seed).spawn(n):
        rng = np.random.default_rng(stream)
        gauss = rng.standard_normal((d_i, d_i))
        Q, R = np.linalg.qr(gauss)
        Q = Q * np.sign(np.diag(R))  # fix column signs so the draw is unambiguous
        eigs = rng.uniform(eig_lo, eig_hi, size=d_i)
        P = (Q * eigs) @ Q.T
        P = 0.5 * (P + P.T)
        q = rng.standard_normal(d_i)
        out.append((P, q))
    return out


def _project_onto_range(A: np.ndarray, v: np.ndarray) -> np.ndarray:
    U, s, _ = np.linalg.svd(A, full_matrices=False)
    r = int(np.sum(s > RANK_RTOL * s[0])) if s.size else 0
    Ur = U[:, :r]
    return Ur @ (Ur.T @ v)


def generate_constraint_rank_deficient(
    n: int, d_i: int, p: int, base_rank: int, variance: float, seed
) -> tuple[list[np.ndarray], np.ndarray]:
    """Constraint blocks whose stacked matrix has rank base_rank < p.

    The first ``base_rank`` rows of the stacked A are i.i.d. normal with the
    given variance; the remaining rows are random linear combinations of them
    (standard normal coefficients).  b is drawn standard normal and then
    projected onto the range of A so the coupled problem stays solvable, which
    every consumer of the instance (KKT oracle, dual contraction, gap metric)
    requires.
    """
    if n < 1 or d_i < 1 or p < 1:
        raise ValueError("n, d_i and p must be positive")
    if not 1 <= base_rank <= p:
        raise ValueError(f"base_rank must lie in [1, p={p}], got {base_rank}")
    if variance <= 0.0:
        raise ValueError(f"variance must be positive, got {variance}")
    ss_a, ss_b = _seed_sequence(seed).spawn(2)
    rng = np.random.default_rng(ss_a)
    d = n * d_i
    head = np.sqrt(variance) * rng.standard_normal((base_rank, d))
    if p > base_rank:
        coeffs = rng.standard_normal((p - base_rank, base_rank))
        A = np.vstack([head, coeffs @ head])
    else:
        A = head
    b = np.random.default_rng(ss_b).standard_normal(p)
    b = _project_onto_range(A, b)
    blocks = [A[:, i * d_i:(i + 1) * d_i].copy() for i in range(n)]
    return blocks, b


def generate_constraint_full_rank(
    n: int, d_i: int, p: int, variance: float, seed, max_attempts: int = 50
) -> tuple[list[np.ndarray], np.ndarray]:
    """Constraint blocks whose stacked matrix has full row rank p.

    All entries are i.i.d. normal with the given variance; the draw is
    repeated until the numerical rank equals p (almost surely the first try).
    b is standard normal; any b is feasible at full row rank.
    """
    if n < 1 or d_i < 1 or p < 1:
        raise ValueError("n, d_i and p must be positive")
    if p > n * d_i:
        raise ValueError(f"full row rank needs p <= n*d_i = {n * d_i}, got p={p}")
    if variance <= 0.0:
        raise ValueError(f"variance must be positive, got {variance}")
    ss_a, ss_b = _seed_sequence(seed).spawn(2)
    rng = np.random.default_rng(ss_a)
    d = n * d_i
    for _ in range(max_attempts):
        A = np.sqrt(variance) * rng.standard_normal((p, d))
        s = np.linalg.svd(A, compute_uv=False)
        if np.sum(s > RANK_RTOL * s[0]) == p:
            b = np.random.default_rng(ss_b).standard_normal(p)
            blocks = [A[:, i * d_i:(i + 1) * d_i].copy() for i in range(n)]
            return blocks, b
    raise GenerationError(
        f"could not draw a rank-{p} constraint in {max_attempts} attempts"
    )


def build_instance(
    quadratics: list[tuple[np.ndarray, np.ndarray]],
    blocks: list[np.ndarray],
    b: np.ndarray,
) -> ProblemInstance:
    """Assemble an instance from (P_i, q_i) pairs and constraint blocks."""
    if len(quadratics) != len(blocks):
        raise ValueError(
            f"{len(quadratics)} quadratics but {len(blocks)} constraint blocks"
        )
    agents = tuple(
        AgentProblem(P=P, q=q, A=A) for (P, q), A in zip(quadratics, blocks)
    )
    return ProblemInstance(agents=agents, b=np.asarray(b, dtype=float))


def _blockdiag_P(instance: ProblemInstance) -> np.ndarray:
    d = instance.d
    out = np.zeros((d, d))
    off = instance.offsets
    for i, a in enumerate(instance.agents):
        out[off[i]:off[i + 1], off[i]:off[i + 1]] = a.P
    return out


def kkt_solve(instance: ProblemInstance, feas_rtol: float = 1e-9) -> KktSolution:
    """Ground-truth primal/dual solution from the stationarity+feasibility system.

    Solves [blockdiag(P)  A^T; A  0] [x; lam] = [-q; b] by minimum-norm least
    squares.  The primal block is unique by strong convexity; the minimum-norm
    dual is exactly the projection of any dual optimum onto Col(A).

    Raises :class:`InfeasibleProblemError` when b is not in the range of A
    (the least-squares residual then equals the out-of-range component of b).
    """
    d, p = instance.d, instance.p
    A = instance.stacked_A()
    K = np.zeros((d + p, d + p))
    K[:d, :d] = _blockdiag_P(instance)
    K[:d, d:] = A.T
    K[d:, :d] = A
    q = np.concatenate([a.q for a in instance.agents])
    rhs = np.concatenate([-q, instance.b])
    sol, *_ = np.linalg.lstsq(K, rhs, rcond=None)
    x, lam = sol[:d], sol[d:]
    feas = float(np.linalg.norm(A @ x - instance.b))
    if feas > feas_rtol * (1.0 + float(np.linalg.norm(instance.b))):
        raise InfeasibleProblemError(
            f"constraint is infeasible: b is outside the range of A "
            f"(residual {feas:.3e}, |b| {np.linalg.norm(instance.b):.3e})"
        )
    return KktSolution(x_star=x, lambda_star_c=lam)


def minimizer_at(instance: ProblemInstance, lam: np.ndarray) -> np.ndarray:
    """Exact minimizer of the dual-shifted objective: per agent P_i x = -(q_i + A_i^T lam)."""
    parts = [
        np.linalg.solve(a.P, -(a.q + a.A.T @ lam)) for a in instance.agents
    ]
    return np.concatenate(parts)


def dual_gradient(instance: ProblemInstance, lam: np.ndarray) -> np.ndarray:
    """Gradient of the dual function: A x*(lam) - b with x*(lam) solved exactly."""
    return instance.constraint_residual(minimizer_at(instance, lam))
