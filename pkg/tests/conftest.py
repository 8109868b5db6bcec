import numpy as np
import pytest

import dualtrack as dt


def hand_instance() -> dt.ProblemInstance:
    """Two scalar agents, f1 = x^2 and f2 = 2x^2, coupled by x1 + x2 = 3.

    Solvable by hand: x* = (2, 1), projected dual optimum -4, mu = 2, ell = 4,
    stacked singular values sqrt(2), blockdiag largest singular value 1.
    """
    return dt.build_instance(
        [(np.array([[2.0]]), np.zeros(1)), (np.array([[4.0]]), np.zeros(1))],
        [np.array([[1.0]]), np.array([[1.0]])],
        np.array([3.0]),
    )


def complete_topology(n: int) -> dt.MixingTopology:
    nbrs = tuple(tuple(j for j in range(n) if j != i) for i in range(n))
    graph = dt.Graph(n=n, in_neighbors=nbrs, directed=False)
    return dt.mixing_matrix(graph, "uniform_regular")


def path3_topology() -> dt.MixingTopology:
    graph = dt.Graph(n=3, in_neighbors=((1,), (0, 2), (1,)), directed=False)
    return dt.mixing_matrix(graph, "metropolis")


def random_instance(
    seed: int,
    n: int = 3,
    d_i: int = 2,
    p: int | None = None,
    full_rank: bool = True,
    base_rank: int | None = None,
    variance: float = 1.0,
    eig_lo: float = 1.0,
    eig_hi: float = 10.0,
) -> dt.ProblemInstance:
    ss = np.random.SeedSequence(seed).spawn(2)
    quads = dt.generate_quadratic_agents(n, d_i, eig_lo, eig_hi, ss[0])
    if p is None:
        p = max(1, n * d_i // 2)
    if full_rank:
        blocks, b = dt.generate_constraint_full_rank(n, d_i, p, variance, ss[1])
    else:
        blocks, b = dt.generate_constraint_rank_deficient(
            n, d_i, p, base_rank if base_rank is not None else max(1, p // 2),
            variance, ss[1],
        )
    return dt.build_instance(quads, blocks, b)


def desk_instance() -> tuple[dt.ProblemInstance, dt.MixingTopology]:
    """Small rank-deficient instance over a directed ring with a usable
    certified rate (theta ~ 0.998 at the certified step size)."""
    ss = np.random.SeedSequence(1).spawn(2)
    quads = dt.generate_quadratic_agents(3, 1, 1.0, 10.0, ss[0])
    blocks, b = dt.generate_constraint_rank_deficient(3, 1, 2, 1, 1.0, ss[1])
    instance = dt.build_instance(quads, blocks, b)
    topology = dt.mixing_matrix(dt.build_directed_exponential(3, 0), "uniform_regular")
    return instance, topology


def experiment1_instance(seed: int = 7) -> tuple[dt.ProblemInstance, dt.MixingTopology]:
    """The directed-exponential / rank-deficient reference family at full scale."""
    ss = np.random.SeedSequence(seed).spawn(2)
    quads = dt.generate_quadratic_agents(20, 2, 1.0, 10.0, ss[0])
    blocks, b = dt.generate_constraint_rank_deficient(20, 2, 100, 20, 10.0, ss[1])
    instance = dt.build_instance(quads, blocks, b)
    topology = dt.mixing_matrix(dt.build_directed_exponential(20, 4), "uniform_regular")
    return instance, topology


@pytest.fixture(scope="session")
def hand():
    return hand_instance()


@pytest.fixture(scope="session")
def hand_oracle(hand):
    return dt.kkt_solve(hand)


@pytest.fixture(scope="session")
def k2():
    return complete_topology(2)


@pytest.fixture(scope="session")
def desk():
    return desk_instance()
