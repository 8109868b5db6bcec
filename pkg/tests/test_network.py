import numpy as np
import pytest

import dualtrack as dt
from dualtrack.errors import GenerationError

from conftest import complete_topology, path3_topology


# ---------------------------------------------------------------------------
# directed exponential graphs
# ---------------------------------------------------------------------------

def test_exponential_20_4_offsets():
    g = dt.build_directed_exponential(20, 4)
    assert g.out_neighbors[0] == (1, 2, 4, 8, 16)
    assert g.out_neighbors[19] == (0, 1, 3, 7, 15)
    assert g.directed
    # out-degree regular
    assert set(g.out_degrees) == {5}
    assert set(g.in_degrees) == {5}


def test_exponential_smallest_ring():
    g = dt.build_directed_exponential(2, 0)
    assert g.out_neighbors[0] == (1,)
    assert g.out_neighbors[1] == (0,)


def test_exponential_aliasing_offsets_dropped():
    # offset 8 mod 8 = 0 aliases to self and is dropped
    g = dt.build_directed_exponential(8, 3)
    assert g.out_neighbors[0] == (1, 2, 4)


def test_exponential_invalid_size():
    with pytest.raises(ValueError):
        dt.build_directed_exponential(1, 0)


# ---------------------------------------------------------------------------
# Erdos-Renyi graphs
# ---------------------------------------------------------------------------

def test_erdos_renyi_connected_undirected():
    g = dt.build_erdos_renyi(20, 0.3, seed=11)
    assert g.n == 20 and not g.directed
    for i, nbrs in enumerate(g.in_neighbors):
        for j in nbrs:
            assert i in g.in_neighbors[j]


def test_erdos_renyi_forced_edge_and_complete():
    g2 = dt.build_erdos_renyi(2, 1.0, seed=0)
    assert g2.in_neighbors == ((1,), (0,))
    g5 = dt.build_erdos_renyi(5, 1.0, seed=0)
    for i in range(5):
        assert g5.in_neighbors[i] == tuple(j for j in range(5) if j != i)


def test_erdos_renyi_determinism():
    a = dt.build_erdos_renyi(15, 0.25, seed=42)
    b = dt.build_erdos_renyi(15, 0.25, seed=42)
    assert a.in_neighbors == b.in_neighbors


def test_erdos_renyi_bad_probability():
    with pytest.raises(ValueError):
        dt.build_erdos_renyi(5, 0.0, seed=0)
    with pytest.raises(ValueError):
        dt.build_erdos_renyi(5, 1.5, seed=0)


def test_erdos_renyi_retry_budget_exhausted():
    # p tiny on a larger graph: connectivity is essentially impossible
    with pytest.raises(GenerationError, match="attempts"):
        dt.build_erdos_renyi(30, 1e-6, seed=0, max_attempts=5)


# ---------------------------------------------------------------------------
# graph validation
# ---------------------------------------------------------------------------

def test_graph_rejects_self_loop_and_duplicates():
    with pytest.raises(ValueError, match="itself"):
        dt.Graph(n=2, in_neighbors=((0, 1), (0,)), directed=True)
    with pytest.raises(ValueError, match="duplicate"):
        dt.Graph(n=3, in_neighbors=((1, 1), (0,), (0, 1)), directed=True)


def test_graph_rejects_disconnected():
    with pytest.raises(ValueError, match="strongly connected"):
        dt.Graph(n=2, in_neighbors=((), (0,)), directed=True)


# ---------------------------------------------------------------------------
# mixing matrices
# ---------------------------------------------------------------------------

def test_complete_graph_uniform_is_exact_averaging():
    top = complete_topology(4)
    assert np.allclose(top.W, 0.25, atol=1e-15)
    assert top.sigma < 1e-12


def test_path3_metropolis_weights():
    top = path3_topology()
    W = top.W
    assert W[0, 1] == pytest.approx(1 / 3, abs=1e-15)
    assert W[1, 2] == pytest.approx(1 / 3, abs=1e-15)
    assert np.allclose(np.diag(W), [2 / 3, 1 / 3, 2 / 3], atol=1e-15)
    assert np.max(np.abs(W.sum(axis=0) - 1)) <= 1e-12
    assert np.max(np.abs(W.sum(axis=1) - 1)) <= 1e-12


def test_exponential_uniform_rows():
    top = dt.mixing_matrix(dt.build_directed_exponential(20, 4), "uniform_regular")
    W = top.W
    for i in range(20):
        row = W[i][W[i] > 0]
        assert len(row) == 6
        assert np.allclose(row, 1 / 6, atol=1e-15)
    assert np.max(np.abs(W.sum(axis=0) - 1)) <= 1e-12
    assert np.max(np.abs(W.sum(axis=1) - 1)) <= 1e-12


def test_scheme_mismatch_errors():
    path = dt.Graph(n=3, in_neighbors=((1,), (0, 2), (1,)), directed=False)
    with pytest.raises(ValueError, match="uniform_regular"):
        dt.mixing_matrix(path, "uniform_regular")  # degrees 1, 2, 1
    directed = dt.build_directed_exponential(5, 1)
    with pytest.raises(ValueError, match="undirected"):
        dt.mixing_matrix(directed, "metropolis")
    with pytest.raises(ValueError, match="scheme"):
        dt.mixing_matrix(path, "nonsense")


def test_identity_matrix_rejected():
    graph = dt.Graph(n=2, in_neighbors=((1,), (0,)), directed=False)
    assert dt.spectral_gap(np.eye(2)) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        dt.MixingTopology(graph=graph, W=np.eye(2), sigma=1.0)


def test_mixing_determinism():
    a = dt.mixing_matrix(dt.build_erdos_renyi(12, 0.4, seed=3), "metropolis")
    b = dt.mixing_matrix(dt.build_erdos_renyi(12, 0.4, seed=3), "metropolis")
    assert np.array_equal(a.W, b.W)
    assert a.sigma == b.sigma


# ---------------------------------------------------------------------------
# spectral gap
# ---------------------------------------------------------------------------

def test_spectral_gap_of_exact_averaging_is_zero():
    J = np.full((5, 5), 0.2)
    assert dt.spectral_gap(J) <= 1e-12


def test_spectral_gap_matches_dense_eigensolve():
    for top in (path3_topology(),
                dt.mixing_matrix(dt.build_directed_exponential(20, 4), "uniform_regular"),
                dt.mixing_matrix(dt.build_erdos_renyi(10, 0.5, seed=9), "metropolis")):
        W = top.W
        n = W.shape[0]
        D = W - 1.0 / n
        oracle = float(np.sqrt(np.max(np.linalg.eigvalsh(D.T @ D))))
        assert top.sigma == pytest.approx(oracle, abs=1e-10)
        assert 0.0 < top.sigma < 1.0


def test_path3_sigma_value():
    # eigenvalues of the metropolis path-3 matrix are 1, 2/3, 0
    assert path3_topology().sigma == pytest.approx(2 / 3, abs=1e-10)


def test_consensus_contraction_property():
    rng = np.random.default_rng(123)
    tops = (
        complete_topology(4),
        path3_topology(),
        dt.mixing_matrix(dt.build_directed_exponential(20, 4), "uniform_regular"),
        dt.mixing_matrix(dt.build_erdos_renyi(12, 0.4, seed=5), "metropolis"),
    )
    for top in tops:
        n = top.graph.n
        for _ in range(100):
            x = rng.standard_normal(n)
            avg = np.full(n, x.mean())
            lhs = np.linalg.norm(top.W @ x - avg)
            rhs = top.sigma * np.linalg.norm(x - avg)
            assert lhs <= rhs + 1e-10


def test_topology_serialization_round_trip():
    top = path3_topology()
    again = dt.MixingTopology.from_dict(top.to_dict())
    assert np.array_equal(top.W, again.W)
    assert again.graph.in_neighbors == top.graph.in_neighbors
