"""Communication graphs and doubly stochastic mixing matrices.

A mixing matrix W encodes one synchronous communication round: W[i, j] is the
weight node i puts on the message received from node j (the self weight sits
on the diagonal).  Valid matrices are nonnegative, doubly stochastic,
primitive, and have a strictly positive diagonal; their deviation from exact
averaging is measured by the spectral norm of W - (1/n) 11^T, which must be
below one for consensus to contract.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GenerationError

SCHEMES = ("uniform_regular", "metropolis")

# Tolerances used when validating a constructed mixing matrix.
STOCHASTIC_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Graph:
    """Communication graph over n nodes.

    ``in_neighbors[i]`` lists the nodes whose messages node i receives.  The
    self loop is implicit (it appears in the mixing matrix, not here).  The
    graph must be strongly connected; this is checked on construction.
    """

    n: int
    in_neighbors: tuple[tuple[int, ...], ...]
    directed: bool = True

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"graph needs at least one node, got n={self.n}")
        if len(self.in_neighbors) != self.n:
            raise ValueError("in_neighbors must have one entry per node")
        for i, nbrs in enumerate(self.in_neighbors):
            if i in nbrs:
                raise ValueError(f"node {i} lists itself as a neighbor")
            if len(set(nbrs)) != len(nbrs):
                raise ValueError(f"node {i} has duplicate neighbors")
            if any(j < 0 or j >= self.n for j in nbrs):
                raise ValueError(f"node {i} has a neighbor out of range")
        if not self.directed:
            for i, nbrs in enumerate(self.in_neighbors):
                for j in nbrs:
                    if i not in self.in_neighbors[j]:
                        raise ValueError(
                            "undirected graph must have symmetric neighbor lists"
                        )
        if not self._strongly_connected():
            raise ValueError("graph is not strongly connected")

    @property
    def out_neighbors(self) -> tuple[tuple[int, ...], ...]:
        outs: list[list[int]] = [[] for _ in range(self.n)]
        for i, nbrs in enumerate(self.in_neighbors):
            for j in nbrs:
                outs[j].append(i)
        return tuple(tuple(sorted(o)) for o in outs)

    @property
    def in_degrees(self) -> tuple[int, ...]:
        return tuple(len(nbrs) for nbrs in self.in_neighbors)

    @property
    def out_degrees(self) -> tuple[int, ...]:
        return tuple(len(o) for o in self.out_neighbors)

    def _strongly_connected(self) -> bool:
        # Every node reachable from node 0 along in-edges and along out-edges.
        return (
            _reaches_all(self.in_neighbors, self.n)
            and _reaches_all(self.out_neighbors, self.n)
        )

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "directed": self.directed,
            "in_neighbors": [list(nbrs) for nbrs in self.in_neighbors],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Graph":
        return cls(
            n=int(data["n"]),
            in_neighbors=tuple(tuple(int(j) for j in nbrs) for nbrs in data["in_neighbors"]),
            directed=bool(data["directed"]),
        )


def _reaches_all(adjacency, n: int) -> bool:
    seen = [False] * n
    seen[0] = True
    stack = [0]
    while stack:
        i = stack.pop()
        for j in adjacency[i]:
            if not seen[j]:
                seen[j] = True
                stack.append(j)
    return all(seen)


def build_directed_exponential(n: int, e: int) -> Graph:
    """Directed graph where node i sends to nodes (i + 2^j) mod n, j = 0..e.

    Offsets that alias to the node itself or to each other are dropped, so the
    graph stays simple for small n.  The result is circulant, hence in- and
    out-degree regular and strongly connected.
    """
    if n < 2:
        raise ValueError(f"directed exponential graph needs n >= 2, got {n}")
    if e < 0:
        raise ValueError(f"exponent must be nonnegative, got {e}")
    offsets = sorted({pow(2, j, n) for j in range(e + 1)} - {0})
    if not offsets:
        raise ValueError(f"all offsets alias to self for n={n}, e={e}")
    in_neighbors = tuple(
        tuple(sorted((i - o) % n for o in offsets)) for i in range(n)
    )
    return Graph(n=n, in_neighbors=in_neighbors, directed=True)


def build_erdos_renyi(n: int, p: float, seed, max_attempts: int = 1000) -> Graph:
    """Connected undirected graph with each edge present with probability p.

    Resamples until connected; raises :class:`GenerationError` with the
    attempt count if the retry budget runs out.  Deterministic per seed
    (an integer or a ``numpy.random.SeedSequence``).
    """
    if n < 2:
        raise ValueError(f"random graph needs n >= 2, got {n}")
    if not 0.0 < p <= 1.0:
        raise ValueError(f"edge probability must be in (0, 1], got {p}")
    rng = np.random.default_rng(seed)
    for attempt in range(1, max_attempts + 1):
        nbrs: list[set[int]] = [set() for _ in range(n)]
        for i in range(n):
            for j in range(i + 1, n):
                if rng.random() < p:
                    nbrs[i].add(j)
                    nbrs[j].add(i)
        if _reaches_all([tuple(s) for s in nbrs], n):
            return Graph(
                n=n,
                in_neighbors=tuple(tuple(sorted(s)) for s in nbrs),
                directed=False,
            )
    raise GenerationError(
        f"no connected graph on {n} nodes with p={p} after {max_attempts} attempts"
    )


@dataclass(frozen=True, eq=False)
class MixingTopology:
    """A graph together with its validated mixing matrix and contraction factor.

    sigma is the spectral norm of W - (1/n) 11^T; zero means exact averaging
    (complete graph with uniform weights) and values >= 1 are rejected.
    """

    graph: Graph
    W: np.ndarray
    sigma: float

    def __post_init__(self):
        W = np.asarray(self.W, dtype=float)
        W.setflags(write=False)
        object.__setattr__(self, "W", W)
        n = self.graph.n
        if W.shape != (n, n):
            raise ValueError(f"W must be {n}x{n}, got {W.shape}")
        if np.any(W < 0.0):
            raise ValueError("mixing matrix has negative entries")
        if np.any(np.diag(W) <= 0.0):
            raise ValueError("mixing matrix needs strictly positive diagonal entries")
        row_err = np.max(np.abs(W.sum(axis=1) - 1.0))
        col_err = np.max(np.abs(W.sum(axis=0) - 1.0))
        if row_err > STOCHASTIC_TOL or col_err > STOCHASTIC_TOL:
            raise ValueError(
                f"mixing matrix is not doubly stochastic "
                f"(row error {row_err:.2e}, column error {col_err:.2e})"
            )
        # Positive diagonal + strong connectivity makes W^n entrywise positive;
        # checking the power directly also covers hand-built matrices.
        if np.any(np.linalg.matrix_power(W, n) <= 0.0):
            raise ValueError("mixing matrix is not primitive (W^n has zero entries)")
        if not 0.0 <= self.sigma < 1.0:
            raise ValueError(
                f"contraction factor must lie in [0, 1), got {self.sigma}"
            )

    def to_dict(self) -> dict:
        return {
            "graph": self.graph.to_dict(),
            "W": self.W.tolist(),
            "sigma": float(self.sigma),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MixingTopology":
        return cls(
            graph=Graph.from_dict(data["graph"]),
            W=np.asarray(data["W"], dtype=float),
            sigma=float(data["sigma"]),
        )


def mixing_matrix(graph: Graph, scheme: str = "uniform_regular") -> MixingTopology:
    """Build a doubly stochastic mixing matrix for the graph.

    ``uniform_regular`` puts weight 1/(d+1) on every in-edge and the self loop;
    it requires in-degree = out-degree = d at every node (true for the directed
    exponential graphs and any regular undirected graph).  ``metropolis`` uses
    1/(1 + max(deg_i, deg_j)) on undirected edges and absorbs the remainder on
    the diagonal.

    Diagonal entries are always computed as 1 minus the off-diagonal row sum,
    which keeps row sums exact in floating point.
    """
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}, expected one of {SCHEMES}")
    n = graph.n
    W = np.zeros((n, n))
    if scheme == "uniform_regular":
        degs = set(graph.in_degrees) | set(graph.out_degrees)
        if len(degs) != 1:
            raise ValueError(
                "uniform_regular needs in-degree == out-degree constant across "
                f"nodes, got degrees {sorted(degs)}"
            )
        d = degs.pop()
        w = 1.0 / (d + 1)
        for i, nbrs in enumerate(graph.in_neighbors):
            for j in nbrs:
                W[i, j] = w
    else:
        if graph.directed:
            raise ValueError("metropolis weights require an undirected graph")
        deg = graph.in_degrees
        for i, nbrs in enumerate(graph.in_neighbors):
            for j in nbrs:
                W[i, j] = 1.0 / (1 + max(deg[i], deg[j]))
    for i in range(n):
        off = W[i].sum() - W[i, i]
        W[i, i] = 1.0 - off
    sigma = spectral_gap(W)
    return MixingTopology(graph=graph, W=W, sigma=sigma)


def spectral_gap(W: np.ndarray, tol: float = 1e-12, max_iter: int = 200_000) -> float:
    """Spectral norm of W - (1/n) 11^T via power iteration.

    Iterates on (W - J)^T (W - J), whose dominant eigenvalue is the squared
    norm.  The deterministic start vector comes from a fixed-seed generator.
    """
    W = np.asarray(W, dtype=float)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise ValueError(f"W must be square, got shape {W.shape}")
    n = W.shape[0]
    D = W - 1.0 / n
    B = D.T @ D
    v = np.random.default_rng(0x5EED).standard_normal(n)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iter):
        w = B @ v
        norm_w = np.linalg.norm(w)
        if norm_w == 0.0:
            return 0.0
        lam_new = float(v @ w)  # Rayleigh quotient at the normalized iterate
        v = w / norm_w
        if abs(lam_new - lam) <= tol * max(1.0, abs(lam_new)):
            lam = lam_new
            break
        lam = lam_new
    return float(np.sqrt(max(lam, 0.0)))
