"""Graph container, random-graph generation and matrix exports.

The :class:`Graph` type is the topology input for the assembly machinery.
It stores a directedness flag plus an ordered edge list; for undirected
graphs the stored (src, dst) orientation of each edge is the fiducial one,
i.e. the arbitrary but fixed direction that determines the argument order
of coupling functions.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp


@dataclass(frozen=True)
class Graph:
    """Directedness flag plus a stable, 0-based edge list.

    Invariants enforced on construction: vertex indices lie in
    ``[0, n_vertices)``; undirected graphs contain each edge exactly once
    (one stored orientation) and no self-loops; duplicate edges are
    rejected for both graph kinds. The edge ordering is stable, edge j
    always refers to the same pair.
    """

    directed: bool
    n_vertices: int
    edges: tuple

    def __post_init__(self):
        object.__setattr__(self, "edges",
                           tuple((int(s), int(d)) for s, d in self.edges))
        n = self.n_vertices
        if n < 0:
            raise ValueError("n_vertices must be nonnegative")
        seen = set()
        for s, d in self.edges:
            if not (0 <= s < n and 0 <= d < n):
                raise ValueError(f"edge ({s}, {d}) out of range for {n} vertices")
            if not self.directed:
                if s == d:
                    raise ValueError(f"self-loop ({s}, {d}) not allowed in an undirected graph")
                key = (min(s, d), max(s, d))
            else:
                key = (s, d)
            if key in seen:
                raise ValueError(f"duplicate edge ({s}, {d})")
            seen.add(key)

    @property
    def n_edges(self):
        return len(self.edges)


def watts_strogatz(n, k, p, seed):
    """Watts-Strogatz small-world graph on ``n`` vertices.

    Starts from a ring lattice where every vertex connects to its ``k``
    nearest neighbors, then rewires each lattice edge with probability
    ``p``, avoiding self-loops and duplicates. ``p = 0`` returns the plain
    lattice; ``k = 2`` with ``p = 0`` is a simple ring.

    RNG protocol (documented so instances are reproducible from the seed
    alone): a ``numpy.random.default_rng(seed)`` (PCG64) is consumed as
    follows. Lattice edges are visited lap by lap, first all
    ``(i, i+1 mod n)`` for i = 0..n-1, then all ``(i, i+2 mod n)``, up to
    lap ``k/2``. For every lattice edge in this order one uniform
    ``rng.random()`` is drawn. If it falls below ``p`` and the near
    endpoint i has degree below ``n - 1``, the far endpoint is replaced by
    ``rng.integers(n)`` candidates, redrawn until the candidate is neither
    i itself nor a current neighbor of i. A rewired edge keeps its
    position in the edge list.

    Parameters
    ----------
    n : int
        Number of vertices, must exceed ``k``.
    k : int
        Even mean degree of the initial lattice, at least 2.
    p : float
        Rewiring probability in [0, 1].
    seed : int
        Seed for the generator.

    Returns
    -------
    Graph
        Undirected graph with ``n * k / 2`` edges.
    """
    n = int(n)
    k = int(k)
    if k < 2 or k % 2 != 0:
        raise ValueError(f"k must be even and at least 2, got {k}")
    if n <= k:
        raise ValueError(f"n must exceed k, got n={n}, k={k}")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"rewiring probability must lie in [0, 1], got {p}")

    rng = np.random.default_rng(seed)
    edges = []
    for lap in range(1, k // 2 + 1):
        for i in range(n):
            edges.append((i, (i + lap) % n))
    neighbors = [set() for _ in range(n)]
    for s, d in edges:
        neighbors[s].add(d)
        neighbors[d].add(s)

    for idx in range(len(edges)):
        i, far = edges[idx]
        if rng.random() >= p:
            continue
        if len(neighbors[i]) == n - 1:
            # fully connected vertex, nothing left to rewire to
            continue
        new = int(rng.integers(n))
        while new == i or new in neighbors[i]:
            new = int(rng.integers(n))
        neighbors[i].discard(far)
        neighbors[far].discard(i)
        neighbors[i].add(new)
        neighbors[new].add(i)
        edges[idx] = (i, new)

    return Graph(directed=False, n_vertices=n, edges=tuple(edges))


def oriented_incidence(g, sparse=True):
    """N x M oriented incidence matrix of an undirected graph.

    Column j carries -1 at the source and +1 at the destination of edge j
    (the stored fiducial orientation), so ``B @ B.T`` equals the graph
    Laplacian and each column sums to zero.

    Parameters
    ----------
    g : Graph
    sparse : bool
        Return a scipy CSR matrix (default) or a dense ndarray.
    """
    if g.directed:
        raise ValueError("oriented incidence is only defined here for undirected graphs")
    n, m = g.n_vertices, g.n_edges
    if sparse:
        rows = np.empty(2 * m, dtype=np.int64)
        cols = np.empty(2 * m, dtype=np.int64)
        vals = np.empty(2 * m)
        for j, (s, d) in enumerate(g.edges):
            rows[2 * j] = s
            cols[2 * j] = j
            vals[2 * j] = -1.0
            rows[2 * j + 1] = d
            cols[2 * j + 1] = j
            vals[2 * j + 1] = 1.0
        return sp.csr_matrix((vals, (rows, cols)), shape=(n, m))
    B = np.zeros((n, m))
    for j, (s, d) in enumerate(g.edges):
        B[s, j] = -1.0
        B[d, j] = 1.0
    return B


def adjacency(g):
    """Dense N x N 0/1 adjacency matrix.

    ``A[j, i] = 1`` iff the edge j -> i exists; symmetric for undirected
    graphs.
    """
    n = g.n_vertices
    A = np.zeros((n, n), dtype=np.int64)
    for s, d in g.edges:
        A[s, d] = 1
        if not g.directed:
            A[d, s] = 1
    return A


def save_edge_list(g, path):
    """Write a graph as text: header ``directed|undirected <n>``, then one
    ``src dst`` pair per line, 0-based."""
    with open(path, "w") as fh:
        kind = "directed" if g.directed else "undirected"
        fh.write(f"{kind} {g.n_vertices}\n")
        for s, d in g.edges:
            fh.write(f"{s} {d}\n")


def load_edge_list(path):
    """Read a graph written by :func:`save_edge_list`."""
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 2 or header[0] not in ("directed", "undirected"):
            raise ValueError(f"malformed edge-list header in {path!r}")
        n = int(header[1])
        edges = []
        for line in fh:
            line = line.strip()
            if not line:
                continue
            s, d = line.split()
            edges.append((int(s), int(d)))
    return Graph(directed=(header[0] == "directed"), n_vertices=n, edges=tuple(edges))
