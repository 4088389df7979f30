"""k-stable minima, ball-restricted energy shifts and the min-sum local equations.

The energy is the number of monochromatic edges.  ``node_delta`` pins one
node to a color, lets every other node within a ball rearrange, keeps the
rest of the graph at the reference configuration, and reports the lowest
achievable energy change.  It is computed exactly by a branch-and-bound search
over each connected component of the free nodes and serves as the oracle for the
min-sum update :func:`min_sum_update_F`.

Message tables have shape ``(2M, q)``: row ``e = (i -> j)`` holds
``Delta(c; i, j)`` for colors ``c = 1..q`` (column ``c - 1``), the energy
shift of pinning ``i`` to ``c`` in the graph with edge ``{i, j}`` removed.
"""
from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .coloring import energy
from .errors import InvalidArgumentError, InvalidParameterError, ResourceLimitError, UnsupportedError
from .graph import Graph

DEFAULT_BUDGET = 20_000_000


def _skip(e_pair, a, b) -> bool:
    return e_pair is not None and {a, b} == e_pair


def _ball_nodes(g: Graph, center: int, radius: int, skip=None) -> list[int]:
    skip = None if skip is None else set(skip)
    dist = {center: 0}
    queue = deque([center])
    while queue:
        u = queue.popleft()
        if dist[u] == radius:
            continue
        for v in g.neighbors(u):
            v = int(v)
            if v not in dist and not _skip(skip, u, v):
                dist[v] = dist[u] + 1
                queue.append(v)
    return sorted(dist)


def _optimize(g: Graph, ref: np.ndarray, q: int, free, pins: dict, skip=None, budget=DEFAULT_BUDGET):
    """Minimum of ``H - H(ref)`` over colorings of ``free`` with ``pins`` applied.

    Everything outside ``free`` and ``pins`` keeps its ``ref`` color.  The
    free set is split into connected components that are searched
    independently by branch and bound.  Returns ``(delta, best)`` where ``best`` is the
    lexicographically smallest minimizer (in sorted node order).
    """
    skip = None if skip is None else set(skip)
    free = sorted(set(int(v) for v in free) - set(pins))
    work = ref.copy()
    for v, x in pins.items():
        work[v] = x
    touched = set(free) | set(pins)

    def local_energy(col):
        h = 0
        for a in touched:
            for b in g.neighbors(a):
                b = int(b)
                if _skip(skip, a, b):
                    continue
                # count each edge once: from its smaller touched endpoint
                if b in touched and b < a:
                    continue
                h += col[a] == col[b]
        return h

    base = local_energy(ref)
    free_set = set(free)
    comps = []
    seen = set()
    for v in free:
        if v in seen:
            continue
        comp, stack = [], [v]
        seen.add(v)
        while stack:
            u = stack.pop()
            comp.append(u)
            for w in g.neighbors(u):
                w = int(w)
                if w in free_set and w not in seen and not _skip(skip, u, w):
                    seen.add(w)
                    stack.append(w)
        comps.append(sorted(comp))

    best = work.copy()
    for v in free:
        best[v] = 0
    for comp in comps:
        f = len(comp)
        pos = {v: t for t, v in enumerate(comp)}
        unary = np.zeros((f, q), dtype=np.int64)
        earlier = [[] for _ in range(f)]
        for v in comp:
            for u in g.neighbors(v):
                u = int(u)
                if _skip(skip, u, v):
                    continue
                if u in pos:
                    if pos[u] < pos[v]:
                        earlier[pos[v]].append(pos[u])
                else:
                    unary[pos[v], work[u] - 1] += 1
        ptr = np.zeros(f + 1, dtype=np.int64)
        ptr[1:] = np.cumsum([len(x) for x in earlier])
        idx = np.array([u for x in earlier for u in x], dtype=np.int64)
        out = np.zeros(f, dtype=np.int64)
        visited = _branch_and_bound(unary, ptr, idx, q, budget, work[comp], out)
        if visited < 0:
            raise ResourceLimitError(f"exhaustive search over {f} nodes exceeded the budget of {budget}")
        best[comp] = out
    return local_energy(best) - base, best


@njit(cache=True)
def _branch_and_bound(unary, ptr, idx, q, budget, start, out):
    """Exact minimum of unary + pairwise-equality costs by depth-first search.

    Nodes are assigned in index order and colors in increasing order.  A
    branch is cut once its partial cost plus the unary minima of the
    unassigned nodes reaches the best complete cost; the cost of ``start``
    plus one seeds that bound.  Since the bound never cuts an optimum before
    the first one is found, that first optimum is the lexicographically
    smallest.  Writes colors ``1..q`` into ``out`` and returns the number of
    search nodes, or -1 when ``budget`` is exceeded.
    """
    f = unary.shape[0]
    if f == 0:
        return 0
    rest = np.zeros(f + 1, dtype=np.int64)
    for t in range(f - 1, -1, -1):
        rest[t] = rest[t + 1] + unary[t].min()
    best = 1
    for t in range(f):
        best += unary[t, start[t] - 1]
        for k in range(ptr[t], ptr[t + 1]):
            best += start[idx[k]] == start[t]
    col = np.zeros(f, dtype=np.int64)
    partial = np.zeros(f + 1, dtype=np.int64)
    visited = 0
    t = 0
    while t >= 0:
        x = col[t] + 1
        placed = False
        while x <= q:
            cost = partial[t] + unary[t, x - 1]
            for k in range(ptr[t], ptr[t + 1]):
                if col[idx[k]] == x:
                    cost += 1
            visited += 1
            if visited > budget:
                return -1
            if cost + rest[t + 1] < best:
                col[t] = x
                partial[t + 1] = cost
                placed = True
                break
            x += 1
        if not placed:
            col[t] = 0
            t -= 1
            continue
        if t == f - 1:
            best = partial[f]
            out[:] = col
            # stay on this node: larger colors can only tie or lose
            continue
        t += 1
    return visited


def _check_coloring(g: Graph, c, q: int) -> np.ndarray:
    c = np.asarray(c, dtype=np.int64)
    if c.shape != (g.n,):
        raise InvalidArgumentError(f"coloring has shape {c.shape}, graph has {g.n} nodes")
    if c.size and (c.min() < 1 or c.max() > q):
        raise InvalidArgumentError("colors must lie in 1..q")
    return c


# -- k-stability ---------------------------------------------------------------

def is_k_stable(g: Graph, c, q: int, k: int, budget: int = DEFAULT_BUDGET) -> bool:
    """No recoloring of any radius-``k`` ball strictly lowers the energy."""
    c = _check_coloring(g, c, q)
    if energy(g, c) == 0:
        return True
    for i in range(g.n):
        delta, _ = _optimize(g, c, q, _ball_nodes(g, i, k), {}, budget=budget)
        if delta < 0:
            return False
    return True


@dataclass
class KStableConfig:
    coloring: np.ndarray
    k: int
    energy: int
    stable: bool
    sweeps: int
    moves: int
    energy_trace: list = field(default_factory=list, repr=False)


def k_stable_descent(g: Graph, q: int, c0, k: int, seed: int = 0, budget: int = DEFAULT_BUDGET,
                     max_sweeps: int = 1000) -> KStableConfig:
    """Greedy ball-recoloring descent until no radius-``k`` move improves the energy.

    Sweeps visit nodes in a fresh random order; at each node the best
    recoloring of its ball (lexicographically smallest among ties) is
    applied when it strictly lowers the energy.  A sweep without any move
    certifies k-stability.  ``stable`` is False when ``max_sweeps`` runs out.
    """
    c = _check_coloring(g, c0, q).copy()
    rng = np.random.default_rng(seed)
    h = energy(g, c)
    trace = [h]
    moves = 0
    for sweep in range(1, max_sweeps + 1):
        if h == 0:
            return KStableConfig(c, k, 0, True, sweep - 1, moves, trace)
        improved = False
        for i in rng.permutation(g.n):
            delta, best = _optimize(g, c, q, _ball_nodes(g, int(i), k), {}, budget=budget)
            if delta < 0:
                c = best
                h += delta
                trace.append(h)
                moves += 1
                improved = True
        if not improved:
            return KStableConfig(c, k, h, True, sweep, moves, trace)
    return KStableConfig(c, k, h, False, max_sweeps, moves, trace)


# -- energy shifts ---------------------------------------------------------------

def node_delta(g: Graph, cstar, i: int, c: int, b: int, forbidden_edge=None, q: int | None = None,
               budget: int = DEFAULT_BUDGET) -> int:
    """Lowest ``H - H*`` with node ``i`` pinned to ``c`` and its radius-``b`` ball free.

    With ``forbidden_edge`` the edge is deleted: it neither contributes to
    the energy nor connects the ball.
    """
    q = int(np.max(cstar)) if q is None else q
    if not 1 <= c <= q:
        raise InvalidParameterError(f"color {c} outside 1..{q}")
    return int(node_delta_vector(g, cstar, i, b, forbidden_edge, q, budget)[c - 1])


def node_delta_vector(g: Graph, cstar, i: int, b: int, forbidden_edge=None, q: int | None = None,
                      budget: int = DEFAULT_BUDGET) -> np.ndarray:
    """:func:`node_delta` for every color at once."""
    q = int(np.max(cstar)) if q is None else q
    cstar = _check_coloring(g, cstar, q)
    if b < 0:
        raise InvalidParameterError("ball radius must be non-negative")
    skip = None if forbidden_edge is None else tuple(int(x) for x in forbidden_edge)
    nodes = _ball_nodes(g, i, b, skip)
    return np.array([_optimize(g, cstar, q, nodes, {i: x}, skip, budget)[0] for x in range(1, q + 1)],
                    dtype=np.int64)


def cavity_field(g: Graph, cstar, i: int, b: int, budget: int = DEFAULT_BUDGET) -> float:
    """Two-color effective field ``h`` with ``Delta_b(c; i) = h * (c - c*(i))``."""
    cstar = np.asarray(cstar)
    if cstar.size and cstar.max() > 2:
        raise UnsupportedError("the cavity field is defined for q = 2 only")
    other = 3 - int(cstar[i])
    return node_delta(g, cstar, i, other, b, q=2, budget=budget) / (other - int(cstar[i]))


@dataclass
class FactorizationResult:
    holds: bool
    lhs: int
    rhs: int
    disjoint: bool


def factorization_check(g: Graph, cstar, nodes, colors, b: int, q: int | None = None,
                        budget: int = DEFAULT_BUDGET) -> FactorizationResult:
    """Compare the joint three-node shift with the sum of single-node shifts.

    ``disjoint`` reports whether the balls are pairwise disjoint and not
    joined by an edge, the case where the decomposition is exact.
    """
    q = int(np.max(cstar)) if q is None else q
    cstar = _check_coloring(g, cstar, q)
    pins = {}
    for v, x in zip(nodes, colors):
        v, x = int(v), int(x)
        if pins.get(v, x) != x:
            raise InvalidParameterError(f"node {v} pinned to two different colors")
        pins[v] = x
    balls = [set(_ball_nodes(g, int(v), b)) for v in nodes]
    union = set().union(*balls)
    lhs, _ = _optimize(g, cstar, q, union, pins, budget=budget)
    rhs = sum(int(node_delta_vector(g, cstar, int(v), b, q=q, budget=budget)[int(x) - 1])
              for v, x in zip(nodes, colors))
    disjoint = True
    for s, t in itertools.combinations(range(len(balls)), 2):
        if nodes[s] == nodes[t]:
            continue
        if balls[s] & balls[t] or any(int(u) in balls[t] for v in balls[s] for u in g.neighbors(v)):
            disjoint = False
    return FactorizationResult(int(lhs) == rhs, int(lhs), rhs, disjoint)


# -- min-sum tables ----------------------------------------------------------------

def pinned_table(g: Graph, cstar, q: int) -> np.ndarray:
    """Messages of a node frozen at its reference color (zero there, ``q`` elsewhere)."""
    cstar = _check_coloring(g, cstar, q)
    t = np.full((2 * g.m, q), q, dtype=np.int64)
    t[np.arange(2 * g.m), cstar[g.src] - 1] = 0
    return t


def cavity_table(g: Graph, cstar, q: int, b: int, cap: int | None = None,
                 budget: int = DEFAULT_BUDGET) -> np.ndarray:
    """Exhaustive ``Delta_b(c; i, j)`` on every directed edge, normalized to min 0 and capped."""
    cap = q if cap is None else cap
    t = np.empty((2 * g.m, q), dtype=np.int64)
    for e in range(2 * g.m):
        i, j = g.directed_pair(e)
        t[e] = node_delta_vector(g, cstar, i, b, (i, j), q, budget)
    return _normalize(t, cap)


def _normalize(t: np.ndarray, cap) -> np.ndarray:
    if t.size == 0:
        return t
    t = t - t.min(axis=1, keepdims=True)
    if cap is not None:
        np.minimum(t, cap, out=t)
    return t


def _contributions(table: np.ndarray) -> np.ndarray:
    """``min_c' [table(c') + (c' == c)]`` for every row and color."""
    q = table.shape[1]
    order = np.argsort(table, axis=1, kind="stable")
    rows = np.arange(len(table))
    m1 = table[rows, order[:, 0]]
    m2 = table[rows, order[:, 1]] if q > 1 else m1
    other = np.repeat(m1[:, None], q, axis=1)
    other[rows, order[:, 0]] = m2
    return np.minimum(table + 1, other)


def _node_sums(g: Graph, contrib: np.ndarray) -> np.ndarray:
    s = np.zeros((g.n, contrib.shape[1]), dtype=np.int64)
    np.add.at(s, g.nbrs, contrib)  # row f = (k -> i) feeds node i = nbrs[f]
    return s


def min_sum_update_F(g: Graph, table, cap: int | None | str = "q") -> np.ndarray:
    """One synchronous min-sum sweep over all directed edges.

    ``new(c; i -> j) = sum_{k in A(i), k != j} min_c' [old(c'; k -> i) + (c' == c)]``,
    then each row is shifted to minimum 0 and capped at ``cap`` (``q`` by
    default, ``None`` for no cap).
    """
    table = np.asarray(table, dtype=np.int64)
    if table.ndim != 2 or table.shape[0] != 2 * g.m:
        raise InvalidArgumentError(f"table must have shape (2M, q) = ({2 * g.m}, q)")
    q = table.shape[1]
    cap = q if cap == "q" else cap
    if table.size == 0:
        return table.copy()
    contrib = _contributions(table)
    s = _node_sums(g, contrib)
    return _normalize(s[g.src] - contrib[g.rev], cap)


def node_totals(g: Graph, table) -> np.ndarray:
    """Full-node shifts ``Delta(c; i)`` implied by incoming messages, normalized to min 0."""
    table = np.asarray(table, dtype=np.int64)
    q = table.shape[1]
    if table.size == 0:
        return np.zeros((g.n, q), dtype=np.int64)
    return _normalize(_node_sums(g, _contributions(table)), None)


@dataclass
class ResidualReport:
    violated_edges: int
    total_l1: int
    per_node: float


def quasi_residual(g: Graph, table, cap: int | None | str = "q") -> ResidualReport:
    """L1 distance between a table and one application of the update."""
    table = np.asarray(table, dtype=np.int64)
    diff = np.abs(table - min_sum_update_F(g, table, cap))
    total = int(diff.sum())
    violated = int(np.count_nonzero(diff.any(axis=1))) if diff.size else 0
    return ResidualReport(violated, total, total / g.n if g.n else 0.0)


@dataclass
class MinSumRun:
    table: np.ndarray
    stationary: bool
    cycle_detected: bool
    sweeps: int
    history: list  # ResidualReport before each sweep, then the final one


def run_min_sum(g: Graph, table, sweeps: int, cap: int | None | str = "q") -> MinSumRun:
    """Iterate the synchronous update until a sweep changes nothing or the cap is hit."""
    t = np.asarray(table, dtype=np.int64).copy()
    seen = {t.tobytes()}
    cycle = False
    history = []
    for s in range(sweeps):
        new = min_sum_update_F(g, t, cap)
        diff = np.abs(t - new)
        total = int(diff.sum())
        history.append(ResidualReport(int(np.count_nonzero(diff.any(axis=1))) if diff.size else 0,
                                      total, total / g.n if g.n else 0.0))
        if total == 0:
            return MinSumRun(t, True, cycle, s, history)
        t = new
        key = t.tobytes()
        cycle = cycle or key in seen
        seen.add(key)
    history.append(quasi_residual(g, t, cap))
    return MinSumRun(t, history[-1].total_l1 == 0, cycle, sweeps, history)


def staggered_ring_table(g: Graph) -> np.ndarray:
    """Two-color ring table: ``i -> i+1`` favors 1 for even ``i`` and 2 for odd ``i``; backward rows zero."""
    t = np.zeros((2 * g.m, 2), dtype=np.int64)
    for i in range(g.n):
        e = g.directed_index(i, (i + 1) % g.n)
        t[e] = (0, 1) if i % 2 == 0 else (1, 0)
    return t


def min_sum_fixed_points(g: Graph, q: int, values=(0, 1)):
    """Exhaustively list tables with entries in ``values`` that the update maps to themselves.

    Only practical for a handful of directed edges.  Returns the list of fixed
    tables and the total number of tables examined.
    """
    rows = [np.array(r, dtype=np.int64) for r in itertools.product(values, repeat=q)]
    fixed = []
    total = 0
    for combo in itertools.product(range(len(rows)), repeat=2 * g.m):
        total += 1
        t = np.stack([rows[k] for k in combo]) if combo else np.zeros((0, q), dtype=np.int64)
        if np.array_equal(min_sum_update_F(g, t), t):
            fixed.append(t)
    return fixed, total


def is_hard(table) -> np.ndarray:
    """Rows with a unique minimizing color."""
    table = np.asarray(table)
    s = np.sort(table, axis=1)
    return s[:, 0] < s[:, 1]
