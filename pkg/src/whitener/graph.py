"""Random graphs with a directed-edge index for message passing.

A :class:`Graph` stores its adjacency in CSR form.  Directed edge ``i -> j``
gets the integer ``offsets[i] + t`` where ``t`` is the position of ``j`` in
the sorted neighbor list of ``i``, so every node's outgoing messages are a
contiguous slice and ``rev`` gives the opposite direction in O(1).
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameterError


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected simple graph on nodes ``0..n-1``.

    Attributes
    ----------
    n : int
        Number of nodes.
    edges : ndarray, shape (M, 2)
        Unordered edges stored as ``(i, j)`` with ``i < j``, lexicographically sorted.
    offsets : ndarray, shape (n + 1,)
        CSR row pointers.
    nbrs : ndarray, shape (2M,)
        Concatenated sorted neighbor lists; ``nbrs[e]`` is the head of directed edge ``e``.
    src : ndarray, shape (2M,)
        Tail of each directed edge.
    rev : ndarray, shape (2M,)
        Index of the reversed directed edge.
    edge_id : ndarray, shape (2M,)
        Row of ``edges`` that each directed edge belongs to.
    """

    n: int
    edges: np.ndarray
    offsets: np.ndarray = field(repr=False)
    nbrs: np.ndarray = field(repr=False)
    src: np.ndarray = field(repr=False)
    rev: np.ndarray = field(repr=False)
    edge_id: np.ndarray = field(repr=False)

    @classmethod
    def from_edges(cls, n: int, edges) -> "Graph":
        """Build a graph, rejecting self-loops, duplicates and out-of-range nodes."""
        if n < 0:
            raise InvalidParameterError(f"node count must be non-negative, got {n}")
        e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if e.size and (e.min() < 0 or e.max() >= n):
            raise InvalidParameterError("edge endpoint out of range")
        if np.any(e[:, 0] == e[:, 1]):
            raise InvalidParameterError("self-loops are not allowed")
        e = np.sort(e, axis=1)
        order = np.lexsort((e[:, 1], e[:, 0]))
        e = e[order]
        if len(e) > 1 and np.any(np.all(e[1:] == e[:-1], axis=1)):
            raise InvalidParameterError("duplicate edges are not allowed")
        m = len(e)

        tails = np.concatenate([e[:, 0], e[:, 1]])
        heads = np.concatenate([e[:, 1], e[:, 0]])
        ids = np.concatenate([np.arange(m), np.arange(m)])
        order = np.lexsort((heads, tails))
        src, nbrs, edge_id = tails[order], heads[order], ids[order]
        offsets = np.zeros(n + 1, dtype=np.int64)
        np.add.at(offsets, src + 1, 1)
        offsets = np.cumsum(offsets)

        # the reverse of (i -> j) is (j -> i); both carry the same edge id
        rev = np.empty(2 * m, dtype=np.int64)
        pos = np.argsort(edge_id, kind="stable")
        rev[pos[0::2]] = pos[1::2]
        rev[pos[1::2]] = pos[0::2]
        for arr in (e, offsets, nbrs, src, rev, edge_id):
            arr.setflags(write=False)
        return cls(n, e, offsets, nbrs, src, rev, edge_id)

    @property
    def m(self) -> int:
        return len(self.edges)

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.offsets)

    def neighbors(self, i: int) -> np.ndarray:
        return self.nbrs[self.offsets[i]:self.offsets[i + 1]]

    def out_edges(self, i: int) -> range:
        return range(int(self.offsets[i]), int(self.offsets[i + 1]))

    def directed_index(self, i: int, j: int) -> int:
        """Index of directed edge ``i -> j``; KeyError if ``{i, j}`` is not an edge."""
        lo, hi = int(self.offsets[i]), int(self.offsets[i + 1])
        t = lo + int(np.searchsorted(self.nbrs[lo:hi], j))
        if t >= hi or self.nbrs[t] != j:
            raise KeyError((i, j))
        return t

    def has_edge(self, i: int, j: int) -> bool:
        try:
            self.directed_index(i, j)
        except KeyError:
            return False
        return True

    def directed_pair(self, e: int) -> tuple[int, int]:
        return int(self.src[e]), int(self.nbrs[e])

    def without_edge(self, i: int, j: int) -> "Graph":
        keep = ~(((self.edges[:, 0] == min(i, j)) & (self.edges[:, 1] == max(i, j))))
        return Graph.from_edges(self.n, self.edges[keep])

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, m={self.m})"


def generate_random_graph(n: int, m: int, seed: int) -> Graph:
    """Draw uniformly from the simple graphs with ``n`` nodes and ``m`` edges.

    Pairs are sampled i.i.d. uniformly and self-loops / repeats are rejected;
    keeping distinct pairs in order of first appearance gives a uniform
    ``m``-subset of all node pairs.
    """
    max_edges = n * (n - 1) // 2
    if n < 0 or m < 0 or m > max_edges:
        raise InvalidParameterError(f"need 0 <= m <= n(n-1)/2 = {max_edges}, got m={m}")
    rng = np.random.default_rng(seed)
    if m == 0:
        return Graph.from_edges(n, np.empty((0, 2), dtype=np.int64))

    chosen = np.empty(0, dtype=np.int64)
    while len(chosen) < m:
        batch = max(2 * (m - len(chosen)), 64)
        a = rng.integers(0, n, size=batch)
        b = rng.integers(0, n, size=batch)
        ok = a != b
        lo, hi = np.minimum(a[ok], b[ok]), np.maximum(a[ok], b[ok])
        keys = np.concatenate([chosen, lo * n + hi])
        _, first = np.unique(keys, return_index=True)
        chosen = keys[np.sort(first)][:m]
    return Graph.from_edges(n, np.stack([chosen // n, chosen % n], axis=1))


def random_tree(n: int, seed: int) -> Graph:
    """Uniform labelled tree via a random Pruefer sequence."""
    if n < 1:
        raise InvalidParameterError("a tree needs at least one node")
    if n == 1:
        return Graph.from_edges(1, [])
    if n == 2:
        return Graph.from_edges(2, [(0, 1)])
    rng = np.random.default_rng(seed)
    seq = rng.integers(0, n, size=n - 2)
    degree = np.ones(n, dtype=np.int64)
    np.add.at(degree, seq, 1)
    edges = []
    for x in seq:
        leaf = int(np.flatnonzero(degree == 1)[0])
        edges.append((leaf, int(x)))
        degree[leaf] -= 1
        degree[x] -= 1
    u, v = np.flatnonzero(degree == 1)
    edges.append((int(u), int(v)))
    return Graph.from_edges(n, edges)


def ring_graph(n: int) -> Graph:
    if n < 3:
        raise InvalidParameterError("a ring needs at least 3 nodes")
    return Graph.from_edges(n, [(i, (i + 1) % n) for i in range(n)])


def path_graph(n: int) -> Graph:
    return Graph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def complete_graph(n: int) -> Graph:
    return Graph.from_edges(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


@dataclass(frozen=True)
class Ball:
    center: int
    radius: int
    nodes: frozenset
    boundary: frozenset
    distance: dict = field(repr=False, compare=False)

    @property
    def interior(self) -> frozenset:
        """Nodes strictly closer than ``radius`` to the center."""
        return self.nodes - self.boundary


def ball(g: Graph, center: int, radius: int) -> Ball:
    """Breadth-first geodesic ball of the given radius."""
    if not 0 <= center < g.n:
        raise InvalidParameterError(f"center {center} out of range")
    if radius < 0:
        raise InvalidParameterError("radius must be non-negative")
    dist = {center: 0}
    queue = deque([center])
    while queue:
        u = queue.popleft()
        if dist[u] == radius:
            continue
        for v in g.neighbors(u):
            v = int(v)
            if v not in dist:
                dist[v] = dist[u] + 1
                queue.append(v)
    nodes = frozenset(dist)
    boundary = frozenset(v for v, d in dist.items() if d == radius)
    return Ball(center, radius, nodes, boundary, dist)


def induced_edges(g: Graph, nodes) -> list[tuple[int, int]]:
    s = set(int(v) for v in nodes)
    out = []
    for a in sorted(s):
        for b in g.neighbors(a):
            b = int(b)
            if b > a and b in s:
                out.append((a, b))
    return out


def is_tree_region(g: Graph, nodes) -> bool:
    """True iff the subgraph induced on ``nodes`` is connected and acyclic."""
    s = set(int(v) for v in nodes)
    if not s:
        return False
    if len(induced_edges(g, s)) != len(s) - 1:
        return False
    start = next(iter(s))
    seen = {start}
    stack = [start]
    while stack:
        u = stack.pop()
        for v in g.neighbors(u):
            v = int(v)
            if v in s and v not in seen:
                seen.add(v)
                stack.append(v)
    return len(seen) == len(s)


def connected_components(g: Graph) -> np.ndarray:
    """Component label per node."""
    from scipy.sparse import coo_matrix
    from scipy.sparse.csgraph import connected_components as cc

    adj = coo_matrix((np.ones(g.m), (g.edges[:, 0], g.edges[:, 1])), shape=(g.n, g.n))
    return cc(adj, directed=False)[1]
