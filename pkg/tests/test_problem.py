import numpy as np
import pytest

import dualtrack as dt
from dualtrack.errors import InfeasibleProblemError

from conftest import hand_instance, random_instance


# ---------------------------------------------------------------------------
# quadratic generation
# ---------------------------------------------------------------------------

def test_quadratic_eigenvalues_in_band():
    quads = dt.generate_quadratic_agents(20, 2, 1.0, 10.0, seed=5)
    assert len(quads) == 20
    for P, q in quads:
        eigs = np.linalg.eigvalsh(P)
        assert eigs[0] >= 1.0 - 1e-10
        assert eigs[-1] <= 10.0 + 1e-10
        assert q.shape == (2,)


def test_quadratic_degenerate_band_gives_scaled_identity():
    for P, _ in dt.generate_quadratic_agents(4, 3, 2.5, 2.5, seed=0):
        assert np.allclose(P, 2.5 * np.eye(3), atol=1e-12)


def test_quadratic_determinism_and_validation():
    a = dt.generate_quadratic_agents(5, 2, 1.0, 10.0, seed=9)
    b = dt.generate_quadratic_agents(5, 2, 1.0, 10.0, seed=9)
    for (Pa, qa), (Pb, qb) in zip(a, b):
        assert np.array_equal(Pa, Pb) and np.array_equal(qa, qb)
    with pytest.raises(ValueError):
        dt.generate_quadratic_agents(0, 2, 1.0, 10.0, seed=0)
    with pytest.raises(ValueError):
        dt.generate_quadratic_agents(2, 2, -1.0, 10.0, seed=0)


# ---------------------------------------------------------------------------
# constraint generation
# ---------------------------------------------------------------------------

def test_rank_deficient_constraint_has_requested_rank():
    blocks, b = dt.generate_constraint_rank_deficient(20, 2, 100, 20, 10.0, seed=3)
    A = np.hstack(blocks)
    assert A.shape == (100, 40)
    s = np.linalg.svd(A, compute_uv=False)
    assert int(np.sum(s > 1e-8 * s[0])) == 20
    # b lies in the range of A (projection residual at rounding level)
    U, sv, _ = np.linalg.svd(A, full_matrices=False)
    Ur = U[:, sv > 1e-8 * sv[0]]
    assert np.linalg.norm(b - Ur @ (Ur.T @ b)) <= 1e-10 * (1 + np.linalg.norm(b))


def test_full_rank_constraint():
    blocks, b = dt.generate_constraint_full_rank(20, 2, 20, 10.0, seed=3)
    A = np.hstack(blocks)
    assert A.shape == (20, 40)
    s = np.linalg.svd(A, compute_uv=False)
    assert int(np.sum(s > 1e-8 * s[0])) == 20
    assert b.shape == (20,)


def test_full_rank_single_row():
    blocks, _ = dt.generate_constraint_full_rank(3, 2, 1, 1.0, seed=1)
    A = np.hstack(blocks)
    assert A.shape == (1, 6)
    assert np.linalg.norm(A) > 0


def test_constraint_validation_errors():
    with pytest.raises(ValueError):
        dt.generate_constraint_rank_deficient(3, 2, 4, 5, 1.0, seed=0)  # rank > p
    with pytest.raises(ValueError):
        dt.generate_constraint_full_rank(2, 2, 5, 1.0, seed=0)  # p > n d_i


def test_singular_values_scale_homogeneously():
    inst = random_instance(7, n=4, d_i=2, p=3)
    c = 3.5
    scaled = dt.build_instance(
        [(a.P, a.q) for a in inst.agents],
        [c * a.A for a in inst.agents],
        inst.b,
    )
    assert scaled.smax_stacked == pytest.approx(c * inst.smax_stacked, rel=1e-12)
    assert scaled.smin_nonzero == pytest.approx(c * inst.smin_nonzero, rel=1e-12)
    assert scaled.smax_blockdiag == pytest.approx(c * inst.smax_blockdiag, rel=1e-12)


def test_stacked_vs_blockdiag_singular_inequality():
    for seed in range(5):
        inst = random_instance(seed, n=4, d_i=2, p=3)
        assert inst.smax_stacked <= np.sqrt(inst.n) * inst.smax_blockdiag + 1e-9


def test_agent_validation():
    with pytest.raises(ValueError, match="symmetric"):
        dt.AgentProblem(P=np.array([[1.0, 0.5], [0.0, 1.0]]), q=np.zeros(2),
                        A=np.zeros((1, 2)))
    with pytest.raises(ValueError, match="positive definite"):
        dt.AgentProblem(P=np.array([[1.0, 0.0], [0.0, -2.0]]), q=np.zeros(2),
                        A=np.zeros((1, 2)))


# ---------------------------------------------------------------------------
# KKT oracle
# ---------------------------------------------------------------------------

def test_kkt_zero_data_gives_zero_solution():
    inst = dt.build_instance(
        [(np.eye(2), np.zeros(2)), (2 * np.eye(2), np.zeros(2))],
        [np.ones((1, 2)), np.ones((1, 2))],
        np.zeros(1),
    )
    sol = dt.kkt_solve(inst)
    assert np.allclose(sol.x_star, 0.0, atol=1e-12)
    assert np.allclose(sol.lambda_star_c, 0.0, atol=1e-12)


def test_kkt_hand_instance():
    sol = dt.kkt_solve(hand_instance())
    assert sol.x_star == pytest.approx([2.0, 1.0], abs=1e-10)
    assert sol.lambda_star_c == pytest.approx([-4.0], abs=1e-10)


@pytest.mark.parametrize("seed,full_rank", [(0, True), (1, True), (2, False), (3, False)])
def test_kkt_residuals_on_random_instances(seed, full_rank):
    inst = random_instance(seed, n=4, d_i=3, p=5, full_rank=full_rank, base_rank=2)
    sol = dt.kkt_solve(inst)
    A = inst.stacked_A()
    feas = np.linalg.norm(A @ sol.x_star - inst.b)
    assert feas <= 1e-9 * (1 + np.linalg.norm(inst.b))
    stat = np.linalg.norm(inst.objective_gradient(sol.x_star) + A.T @ sol.lambda_star_c)
    assert stat <= 1e-9
    # the dual lies in the column space of A
    U, sv, _ = np.linalg.svd(A, full_matrices=False)
    Ur = U[:, sv > 1e-8 * sv[0]]
    in_col = Ur @ (Ur.T @ sol.lambda_star_c)
    assert np.linalg.norm(sol.lambda_star_c - in_col) <= 1e-9


def test_kkt_rejects_infeasible():
    # rank-1 stacked constraint with b outside its range
    inst = dt.build_instance(
        [(np.eye(1), np.zeros(1)), (np.eye(1), np.zeros(1))],
        [np.array([[1.0], [1.0]]), np.array([[1.0], [1.0]])],
        np.array([1.0, -1.0]),
    )
    with pytest.raises(InfeasibleProblemError, match="residual"):
        dt.kkt_solve(inst)


# ---------------------------------------------------------------------------
# dual gradient
# ---------------------------------------------------------------------------

def test_dual_gradient_at_zero_with_zero_q():
    inst = dt.build_instance(
        [(np.eye(2), np.zeros(2)), (np.eye(2), np.zeros(2))],
        [np.eye(2), np.eye(2)],
        np.array([1.0, 2.0]),
    )
    assert np.allclose(dt.dual_gradient(inst, np.zeros(2)), -inst.b, atol=1e-14)


def test_dual_gradient_vanishes_at_dual_optimum():
    inst = hand_instance()
    assert np.linalg.norm(dt.dual_gradient(inst, np.array([-4.0]))) <= 1e-12


def _dual_value(inst, lam):
    # independent closed form: -(1/2)(q + A^T lam)^T P^-1 (q + A^T lam) - lam^T b
    total = -float(lam @ inst.b)
    for a in inst.agents:
        shift = a.q + a.A.T @ lam
        total -= 0.5 * float(shift @ np.linalg.solve(a.P, shift))
    return total


def test_dual_gradient_matches_central_differences():
    inst = random_instance(11, n=3, d_i=2, p=4, full_rank=False, base_rank=2)
    rng = np.random.default_rng(0)
    lam = rng.standard_normal(inst.p)
    grad = dt.dual_gradient(inst, lam)
    h = 1e-6
    for j in range(inst.p):
        e = np.zeros(inst.p)
        e[j] = h
        fd = (_dual_value(inst, lam + e) - _dual_value(inst, lam - e)) / (2 * h)
        assert grad[j] == pytest.approx(fd, abs=1e-7 * (1 + abs(grad[j])))


def test_dual_smoothness_constant():
    for seed in (0, 1):
        inst = random_instance(seed, n=3, d_i=2, p=3, full_rank=seed == 0, base_rank=2)
        L = inst.smax_stacked**2 / inst.mu
        rng = np.random.default_rng(seed + 100)
        for _ in range(100):
            l1 = rng.standard_normal(inst.p)
            l2 = rng.standard_normal(inst.p)
            lhs = np.linalg.norm(dt.dual_gradient(inst, l1) - dt.dual_gradient(inst, l2))
            assert lhs <= L * np.linalg.norm(l1 - l2) + 1e-9


def test_dual_strong_concavity_on_column_space():
    for seed in (0, 1):
        inst = random_instance(seed, n=3, d_i=2, p=3, full_rank=seed == 0, base_rank=2)
        A = inst.stacked_A()
        m = inst.smin_nonzero**2 / inst.ell
        rng = np.random.default_rng(seed + 200)
        for _ in range(100):
            l1 = A @ rng.standard_normal(inst.d)
            l2 = A @ rng.standard_normal(inst.d)
            g1 = dt.dual_gradient(inst, l1)
            g2 = dt.dual_gradient(inst, l2)
            inner = float((g1 - g2) @ (l1 - l2))
            assert inner <= -m * np.linalg.norm(l1 - l2) ** 2 + 1e-9


def test_strong_convexity_gradient_bound_per_agent():
    inst = random_instance(4, n=3, d_i=3, p=2)
    rng = np.random.default_rng(77)
    for a in inst.agents:
        for _ in range(50):
            x = rng.standard_normal(a.dim)
            y = rng.standard_normal(a.dim)
            lhs = a.mu * np.linalg.norm(x - y)
            rhs = np.linalg.norm(a.objective_gradient(x) - a.objective_gradient(y))
            assert lhs <= rhs + 1e-9


def test_averaging_inequality_for_stacked_blocks():
    rng = np.random.default_rng(31)
    for _ in range(50):
        n, m = rng.integers(2, 6), rng.integers(1, 5)
        B = rng.standard_normal((n, m))
        centered = B - B.mean(axis=0)
        assert np.linalg.norm(centered) <= np.linalg.norm(B) + 1e-12


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def test_instance_round_trip():
    inst = random_instance(2, n=3, d_i=2, p=3, full_rank=False, base_rank=2)
    again = dt.ProblemInstance.from_dict(inst.to_dict())
    assert np.array_equal(again.b, inst.b)
    for a, b in zip(inst.agents, again.agents):
        assert np.array_equal(a.P, b.P)
        assert np.array_equal(a.q, b.q)
        assert np.array_equal(a.A, b.A)
    assert again.rank == inst.rank
