"""Colorings, the monochromatic-edge energy, exact enumeration and local search.

Colorings are integer arrays with one entry per node and colors ``1..q``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import InvalidArgumentError, InvalidParameterError, ResourceLimitError
from .graph import Graph, generate_random_graph


def _check_size(g: Graph, c) -> np.ndarray:
    c = np.asarray(c, dtype=np.int64)
    if c.shape != (g.n,):
        raise InvalidArgumentError(f"coloring has shape {c.shape}, graph has {g.n} nodes")
    return c


def is_legal(g: Graph, c) -> bool:
    c = _check_size(g, c)
    return bool(np.all(c[g.edges[:, 0]] != c[g.edges[:, 1]]))


def energy(g: Graph, c) -> int:
    """Number of monochromatic edges; each edge counted once."""
    c = _check_size(g, c)
    return int(np.count_nonzero(c[g.edges[:, 0]] == c[g.edges[:, 1]]))


def random_coloring(n: int, q: int, rng: np.random.Generator) -> np.ndarray:
    return rng.integers(1, q + 1, size=n)


@dataclass
class EntropyEstimate:
    """Exact count of legal colorings and the entropy density ``ln(count) / n``."""

    count: int
    n: int
    colorings: np.ndarray | None = None

    @property
    def s(self) -> float | None:
        if self.count < 1 or self.n == 0:
            return None
        return math.log(self.count) / self.n


@njit(cache=True)
def _enumerate_kernel(offsets, nbrs, order, q, cap, budget, out):
    n_nodes = offsets.shape[0] - 1
    n = order.shape[0]
    col = np.zeros(n_nodes, dtype=np.int64)
    if n == 0:
        return 1
    count = 0
    visited = 0
    t = 0
    while t >= 0:
        v = order[t]
        c = col[v] + 1
        while c <= q:
            ok = True
            for e in range(offsets[v], offsets[v + 1]):
                if col[nbrs[e]] == c:
                    ok = False
                    break
            if ok:
                break
            c += 1
        if c > q:
            col[v] = 0
            t -= 1
            continue
        col[v] = c
        visited += 1
        if visited > budget:
            return -1
        if t == n - 1:
            if count < cap:
                out[count, :] = col
            count += 1
        else:
            t += 1
    return count


def enumerate_legal_colorings(g: Graph, q: int, cap: int = 0, budget: int = 10**8) -> EntropyEstimate:
    """Count legal colorings exactly by backtracking in decreasing-degree order.

    The colorings themselves are returned (as an ``(count, n)`` array) when
    ``count <= cap``.  ``budget`` bounds the number of search-tree nodes.
    """
    if q < 2:
        raise InvalidParameterError("q must be at least 2")
    order = np.argsort(-g.degrees, kind="stable").astype(np.int64)
    out = np.zeros((cap + 1, g.n), dtype=np.int64)
    count = int(_enumerate_kernel(g.offsets, g.nbrs, order, q, cap + 1, budget, out))
    if count < 0:
        raise ResourceLimitError(f"coloring enumeration exceeded {budget} search nodes")
    listed = out[:count].copy() if count <= cap else None
    return EntropyEstimate(count, g.n, listed)


@njit(cache=True)
def _walkcol_kernel(offsets, nbrs, edge_id, edges, colors, q, max_steps, noise, seed):
    np.random.seed(seed)
    m = edges.shape[0]
    pos = np.full(m, -1, dtype=np.int64)
    viol = np.empty(m, dtype=np.int64)
    nv = 0
    for k in range(m):
        if colors[edges[k, 0]] == colors[edges[k, 1]]:
            pos[k] = nv
            viol[nv] = k
            nv += 1
    cnt = np.zeros(q + 1, dtype=np.int64)
    cand_v = np.empty(2 * q, dtype=np.int64)
    cand_c = np.empty(2 * q, dtype=np.int64)
    steps = 0
    while nv > 0 and steps < max_steps:
        k = viol[np.random.randint(nv)]
        if np.random.random() < noise:
            v = edges[k, np.random.randint(2)]
            new = np.random.randint(q - 1) + 1
            if new >= colors[v]:
                new += 1
        else:
            best = 1 << 40
            nc = 0
            for side in range(2):
                v = edges[k, side]
                cnt[:] = 0
                for e in range(offsets[v], offsets[v + 1]):
                    cnt[colors[nbrs[e]]] += 1
                cur = colors[v]
                for col in range(1, q + 1):
                    if col == cur:
                        continue
                    d = cnt[col] - cnt[cur]
                    if d < best:
                        best = d
                        nc = 0
                    if d == best:
                        cand_v[nc] = v
                        cand_c[nc] = col
                        nc += 1
            pick = np.random.randint(nc)
            v = cand_v[pick]
            new = cand_c[pick]
        old = colors[v]
        for e in range(offsets[v], offsets[v + 1]):
            u = nbrs[e]
            kk = edge_id[e]
            if colors[u] == old:
                p = pos[kk]
                last = viol[nv - 1]
                viol[p] = last
                pos[last] = p
                pos[kk] = -1
                nv -= 1
            elif colors[u] == new:
                pos[kk] = nv
                viol[nv] = kk
                nv += 1
        colors[v] = new
        steps += 1
    return steps, nv


@dataclass
class LocalSearchResult:
    coloring: np.ndarray
    steps: int
    energy: int

    @property
    def legal(self) -> bool:
        return self.energy == 0


def walkcol(g: Graph, q: int, seed: int, max_steps: int = 10**6, noise: float = 0.3,
            initial=None) -> LocalSearchResult:
    """Run the focused recoloring search and return its final state.

    Each step picks a monochromatic edge uniformly at random.  With
    probability ``noise`` one endpoint gets a uniformly random different
    color; otherwise the (endpoint, color) pair that removes the most
    conflicts is applied, ties broken uniformly at random.
    """
    if q < 2:
        raise InvalidParameterError("q must be at least 2")
    if not 0.0 <= noise <= 1.0:
        raise InvalidParameterError("noise must be a probability")
    rng = np.random.default_rng(seed)
    if initial is None:
        colors = random_coloring(g.n, q, rng)
    else:
        colors = _check_size(g, initial).copy()
    kernel_seed = int(rng.integers(0, 2**31 - 1))
    steps, nv = _walkcol_kernel(g.offsets, g.nbrs, g.edge_id, g.edges, colors, q,
                                int(max_steps), float(noise), kernel_seed)
    return LocalSearchResult(colors, int(steps), int(nv))


def find_legal_coloring(g: Graph, q: int, seed: int = 0, max_steps: int = 10**6,
                        noise: float = 0.3) -> np.ndarray | None:
    """Legal coloring found by :func:`walkcol`, or ``None`` when the step budget runs out.

    ``None`` does not prove the graph is uncolorable.
    """
    res = walkcol(g, q, seed, max_steps, noise)
    return res.coloring if res.legal else None


def planted_instance(n: int, m: int, q: int, seed: int) -> tuple[Graph, np.ndarray]:
    """Random graph with ``m`` edges, all bichromatic under a hidden uniform coloring."""
    rng = np.random.default_rng(seed)
    hidden = random_coloring(n, q, rng)
    chosen = np.empty(0, dtype=np.int64)
    while len(chosen) < m:
        batch = max(2 * (m - len(chosen)), 64)
        a = rng.integers(0, n, size=batch)
        b = rng.integers(0, n, size=batch)
        ok = hidden[a] != hidden[b]
        lo, hi = np.minimum(a[ok], b[ok]), np.maximum(a[ok], b[ok])
        keys = np.concatenate([chosen, lo * n + hi])
        _, first = np.unique(keys, return_index=True)
        chosen = keys[np.sort(first)][:m]
        if len(chosen) < m and batch > 64 * max(n * n, 1):
            raise InvalidParameterError("too many edges for a planted instance")
    g = Graph.from_edges(n, np.stack([chosen // n, chosen % n], axis=1))
    return g, hidden


def colorable_random_graph(n: int, m: int, q: int, seed: int, max_steps: int = 10**6,
                           noise: float = 0.3, attempts: int = 20):
    """Draw G(n, m) graphs until local search colors one; return ``(graph, coloring)`` or ``None``."""
    rng = np.random.default_rng(seed)
    for _ in range(attempts):
        g = generate_random_graph(n, m, int(rng.integers(2**31)))
        c = find_legal_coloring(g, q, int(rng.integers(2**31)), max_steps, noise)
        if c is not None:
            return g, c
    return None


def recolorings_within(g: Graph, c, q: int, region, limit: int = 10**5, budget: int = 10**7):
    """All legal colorings equal to ``c`` outside ``region`` (including ``c`` itself if legal).

    Returns a list of arrays; stops after ``limit`` solutions.
    """
    c = _check_size(g, c)
    region = sorted(int(v) for v in region)
    inside = set(region)
    fixed_forbid = {}
    for v in region:
        fixed_forbid[v] = {int(c[u]) for u in g.neighbors(v) if int(u) not in inside}
    order = sorted(region, key=lambda v: -len(g.neighbors(v)))
    work = c.copy()
    found = []
    visited = 0

    def rec(t):
        nonlocal visited
        if len(found) >= limit:
            return
        if t == len(order):
            found.append(work.copy())
            return
        v = order[t]
        for col in range(1, q + 1):
            if col in fixed_forbid[v]:
                continue
            if any(work[u] == col and int(u) in inside and order.index(int(u)) < t for u in g.neighbors(v)):
                continue
            visited += 1
            if visited > budget:
                raise ResourceLimitError("local recoloring search exceeded its budget")
            work[v] = col
            rec(t + 1)
        work[v] = c[v]

    rec(0)
    return found


def random_local_recoloring(g: Graph, c, q: int, region, rng: np.random.Generator,
                            budget: int = 10**6) -> np.ndarray | None:
    """A legal coloring differing from ``c`` somewhere inside ``region`` and nowhere else.

    Tries (node, new color) pairs in random order and completes each by a
    depth-first search over the rest of the region that prefers the current
    colors.  Returns ``None`` when no such coloring exists.
    """
    c = _check_size(g, c)
    region = [int(v) for v in region]
    inside = set(region)
    pairs = [(v, x) for v in region for x in range(1, q + 1) if x != c[v]]
    rng.shuffle(pairs)
    visited = 0
    for v0, x0 in pairs:
        work = c.copy()
        work[v0] = x0
        assigned = {v0}
        # a fixed-outside neighbor of v0 with color x0 kills the pair immediately
        if any(int(u) not in inside and c[u] == x0 for u in g.neighbors(v0)):
            continue
        rest = sorted(inside - {v0})
        order = _bfs_order(g, v0, rest)

        def rec(t):
            nonlocal visited
            if t == len(order):
                return True
            v = order[t]
            colors = [int(c[v])] + [int(x) for x in rng.permutation(np.arange(1, q + 1)) if x != c[v]]
            for col in colors:
                clash = False
                for u in g.neighbors(v):
                    u = int(u)
                    if (u not in inside or u in assigned) and work[u] == col:
                        clash = True
                        break
                if clash:
                    continue
                visited += 1
                if visited > budget:
                    raise ResourceLimitError("local recoloring search exceeded its budget")
                work[v] = col
                assigned.add(v)
                if rec(t + 1):
                    return True
                assigned.discard(v)
            work[v] = c[v]
            return False

        if rec(0):
            return work
    return None


def _bfs_order(g: Graph, start: int, nodes) -> list[int]:
    want = set(nodes)
    seen = {start}
    order = []
    frontier = [start]
    while frontier:
        nxt = []
        for u in frontier:
            for v in g.neighbors(u):
                v = int(v)
                if v not in seen and v in want:
                    seen.add(v)
                    order.append(v)
                    nxt.append(v)
        frontier = nxt
    order.extend(sorted(want - seen))
    return order


def coloring_clusters(g: Graph, colorings: np.ndarray, q: int) -> int:
    """Connected components of the legal colorings under single-node recolorings."""
    colorings = np.asarray(colorings)
    if len(colorings) == 0:
        return 0
    index = {row.tobytes(): k for k, row in enumerate(colorings)}
    parent = list(range(len(colorings)))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for k, row in enumerate(colorings):
        for v in range(g.n):
            for x in range(1, q + 1):
                if x == row[v]:
                    continue
                other = row.copy()
                other[v] = x
                j = index.get(other.tobytes())
                if j is not None:
                    ra, rb = find(k), find(j)
                    if ra != rb:
                        parent[ra] = rb
    return len({find(k) for k in range(len(colorings))})
