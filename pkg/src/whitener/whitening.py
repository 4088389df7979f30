"""Node whitening, directional whitening and their fixed-point checkers.

White is 0 everywhere.  A directional assignment ``d`` holds one value per
directed edge: ``d[e]`` for ``e = (i -> k)`` is ``w(i|k)``, the value node
``i`` takes when neighbor ``k`` is absent.  It is determined by the values
``w(j|i)`` sent to ``i`` by its other neighbors ``j``:

* fewer than ``q - 1`` distinct non-white incoming colors -> white;
* exactly ``q - 1`` -> the single missing color;
* all ``q`` colors -> contradiction (no value is consistent).
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np
from numba import njit

from .coloring import is_legal
from .errors import InvalidArgumentError, ResourceLimitError
from .graph import Graph


# -- kernels -----------------------------------------------------------------

@njit(cache=True)
def _popcount(x):
    c = 0
    while x:
        x &= x - 1
        c += 1
    return c


@njit(cache=True)
def _node_rule_white(offsets, nbrs, w, v, q):
    mask = 0
    for e in range(offsets[v], offsets[v + 1]):
        x = w[nbrs[e]]
        if x:
            mask |= 1 << x
    return _popcount(mask) < q - 1


@njit(cache=True)
def _whiten_nodes_kernel(offsets, nbrs, w, q, order):
    n = offsets.shape[0] - 1
    queue = np.empty(n, dtype=np.int64)
    inq = np.zeros(n, dtype=np.bool_)
    head = 0
    size = 0
    for t in range(order.shape[0]):
        queue[(head + size) % n] = order[t]
        inq[order[t]] = True
        size += 1
    events = 0
    while size:
        v = queue[head]
        head = (head + 1) % n
        size -= 1
        inq[v] = False
        if w[v] == 0 or not _node_rule_white(offsets, nbrs, w, v, q):
            continue
        w[v] = 0
        events += 1
        for e in range(offsets[v], offsets[v + 1]):
            u = nbrs[e]
            if w[u] and not inq[u]:
                queue[(head + size) % n] = u
                inq[u] = True
                size += 1
    return events


@njit(cache=True)
def _dir_rule(offsets, rev, src, d, e, q):
    """New value for entry e; -1 on contradiction."""
    i = src[e]
    mask = 0
    for f in range(offsets[i], offsets[i + 1]):
        if f == e:
            continue
        x = d[rev[f]]
        if x:
            mask |= 1 << x
    k = _popcount(mask)
    if k < q - 1:
        return 0
    if k == q - 1:
        for x in range(1, q + 1):
            if not (mask >> x) & 1:
                return x
    return -1


@njit(cache=True)
def _whiten_directional_kernel(offsets, nbrs, rev, src, d, q, order, max_events):
    size_cap = d.shape[0]
    if size_cap == 0:
        return 0, 0
    queue = np.empty(size_cap, dtype=np.int64)
    inq = np.zeros(size_cap, dtype=np.bool_)
    head = 0
    size = 0
    for t in range(order.shape[0]):
        queue[(head + size) % size_cap] = order[t]
        inq[order[t]] = True
        size += 1
    events = 0
    contradictions = 0
    while size:
        e = queue[head]
        head = (head + 1) % size_cap
        size -= 1
        inq[e] = False
        new = _dir_rule(offsets, rev, src, d, e, q)
        if new < 0:
            contradictions += 1
            continue
        if new == d[e]:
            continue
        d[e] = new
        events += 1
        if events > max_events:
            return events, -1
        # entries (k -> m), m != i, read w(i|k)
        i = src[e]
        k = nbrs[e]
        for f in range(offsets[k], offsets[k + 1]):
            if nbrs[f] != i and not inq[f]:
                queue[(head + size) % size_cap] = f
                inq[f] = True
                size += 1
    return events, contradictions


@njit(cache=True)
def _dir_sweep_kernel(offsets, rev, src, d, q, perm, frozen):
    changed = 0
    contradictions = 0
    for t in range(perm.shape[0]):
        e = perm[t]
        if frozen[e]:
            continue
        new = _dir_rule(offsets, rev, src, d, e, q)
        if new < 0:
            contradictions += 1
            continue
        if new != d[e]:
            d[e] = new
            changed += 1
    return changed, contradictions


@njit(cache=True)
def _exhaustive_fixed_points_kernel(offsets, rev, src, q, values, limit, out):
    n_ent = src.shape[0]
    nv = values.shape[0]
    digits = np.zeros(n_ent, dtype=np.int64)
    d = np.empty(n_ent, dtype=np.int64)
    for t in range(n_ent):
        d[t] = values[0]
    found = 0
    while True:
        ok = True
        for e in range(n_ent):
            if _dir_rule(offsets, rev, src, d, e, q) != d[e]:
                ok = False
                break
        if ok:
            if found < limit:
                out[found, :] = d
            found += 1
        t = 0
        while t < n_ent:
            digits[t] += 1
            if digits[t] < nv:
                d[t] = values[digits[t]]
                break
            digits[t] = 0
            d[t] = values[0]
            t += 1
        if t == n_ent:
            break
    return found


# -- node whitenings ---------------------------------------------------------

def _as_values(g: Graph, w, size: int, what: str) -> np.ndarray:
    w = np.asarray(w, dtype=np.int64)
    if w.shape != (size,):
        raise InvalidArgumentError(f"{what} has shape {w.shape}, expected ({size},)")
    return w


def _order(size: int, order_seed) -> np.ndarray:
    if order_seed is None:
        return np.arange(size, dtype=np.int64)
    return np.random.default_rng(order_seed).permutation(size).astype(np.int64)


def is_legal_whitening(g: Graph, w) -> bool:
    """No edge joins two equal non-white values."""
    w = _as_values(g, w, g.n, "whitening")
    a, b = w[g.edges[:, 0]], w[g.edges[:, 1]]
    return bool(np.all((a == 0) | (b == 0) | (a != b)))


def _neighbor_color_masks(g: Graph, w: np.ndarray) -> np.ndarray:
    vals = w[g.nbrs]
    bits = np.where(vals > 0, np.left_shift(1, vals), 0).astype(np.int64)
    masks = np.zeros(g.n, dtype=np.int64)
    np.bitwise_or.at(masks, g.src, bits)
    return masks


def _popcounts(masks: np.ndarray, q: int) -> np.ndarray:
    return sum(((masks >> x) & 1) for x in range(1, q + 1)) if q else np.zeros_like(masks)


def whiten(g: Graph, c, q: int, order_seed=None) -> np.ndarray:
    """Extremal whitening of a legal coloring.

    A non-white node becomes white while its neighbors show fewer than
    ``q - 1`` distinct non-white colors.  ``order_seed`` randomizes the
    initial work-queue order; the result does not depend on it.
    """
    c = _as_values(g, c, g.n, "coloring")
    if not is_legal(g, c):
        raise InvalidArgumentError("whitening needs a legal coloring")
    w = c.copy()
    _whiten_nodes_kernel(g.offsets, g.nbrs, w, q, _order(g.n, order_seed))
    return w


def is_extremal_whitening(g: Graph, w, q: int) -> bool:
    w = _as_values(g, w, g.n, "whitening")
    if not is_legal_whitening(g, w):
        return False
    masks = _neighbor_color_masks(g, w)
    seen = _popcounts(masks, q)
    white = w == 0
    if np.any(seen[white] >= q - 1):
        return False
    colored = ~white
    own_seen = (masks[colored] >> w[colored]) & 1
    return bool(np.all(seen[colored] == q - 1) and not np.any(own_seen))


# -- directional assignments -------------------------------------------------

def directional_from_coloring(g: Graph, c) -> np.ndarray:
    """``w(i|k) = c(i)`` on every directed edge."""
    c = _as_values(g, c, g.n, "coloring")
    if not is_legal(g, c):
        raise InvalidArgumentError("directional assignment needs a legal coloring")
    return c[g.src].copy()


def _incoming_presence(g: Graph, d: np.ndarray, q: int) -> np.ndarray:
    """``pres[e, x-1]``: some neighbor other than ``k`` sends color ``x`` to ``i``, for ``e = (i -> k)``."""
    incoming = d[g.rev]  # value w(j|i) on the reverse of each out-edge of i
    cnt = np.zeros((g.n, q + 1), dtype=np.int64)
    np.add.at(cnt, (g.src, incoming), 1)
    per_edge = cnt[g.src].copy()
    per_edge[np.arange(len(d)), incoming] -= 1
    return per_edge[:, 1:] > 0


def is_legal_directional(g: Graph, d, q: int) -> bool:
    """No non-white ``w(i|k)`` equals a non-white ``w(j|i)`` with ``j != k``."""
    d = _as_values(g, d, 2 * g.m, "directional assignment")
    if d.size == 0:
        return True
    pres = _incoming_presence(g, d, q)
    colored = d > 0
    return not bool(np.any(pres[colored, d[colored] - 1]))


def directional_rule(g: Graph, d, q: int) -> np.ndarray:
    """One synchronous application of the local rule; contradiction entries become -1."""
    d = _as_values(g, d, 2 * g.m, "directional assignment")
    if d.size == 0:
        return d.copy()
    pres = _incoming_presence(g, d, q)
    k = pres.sum(axis=1)
    out = np.zeros_like(d)
    forced = k == q - 1
    out[forced] = np.argmin(pres[forced], axis=1) + 1
    out[k == q] = -1
    return out


def is_extremal_directional(g: Graph, d, q: int) -> bool:
    d = _as_values(g, d, 2 * g.m, "directional assignment")
    return is_legal_directional(g, d, q) and bool(np.all(directional_rule(g, d, q) == d))


def directional_violations(g: Graph, d, q: int) -> int:
    """Number of directed entries where the local equation fails."""
    return int(np.count_nonzero(directional_rule(g, d, q) != np.asarray(d)))


def whiten_directional(g: Graph, d, q: int, order_seed=None) -> np.ndarray:
    """Extremal directional whitening reached from a legal assignment.

    Entries are processed from a work queue (initial order randomized by
    ``order_seed``); an entry whose incoming colors are fewer than ``q - 1``
    turns white, a forced entry is set to the missing color, and changed
    entries re-enqueue the entries that read them.
    """
    d = _as_values(g, d, 2 * g.m, "directional assignment")
    if not is_legal_directional(g, d, q):
        raise InvalidArgumentError("directional whitening needs a legal assignment")
    out = d.copy()
    events, contra = _whiten_directional_kernel(
        g.offsets, g.nbrs, g.rev, g.src, out, q, _order(len(out), order_seed), 4 * len(out) + 16)
    if contra < 0:
        raise ResourceLimitError("directional whitening did not terminate")
    return out


def extremal_directional_whitening(g: Graph, c, q: int, order_seed=None) -> np.ndarray:
    """Directional whitening of a legal coloring."""
    return whiten_directional(g, directional_from_coloring(g, c), q, order_seed)


def node_color_consistency(g: Graph, d) -> bool:
    """All non-white outgoing values of each node agree."""
    d = _as_values(g, d, 2 * g.m, "directional assignment")
    colored = d > 0
    if not np.any(colored):
        return True
    lo = np.full(g.n, np.iinfo(np.int64).max)
    hi = np.zeros(g.n, dtype=np.int64)
    np.minimum.at(lo, g.src[colored], d[colored])
    np.maximum.at(hi, g.src[colored], d[colored])
    has = hi > 0
    return bool(np.all(lo[has] == hi[has]))


def node_view(g: Graph, d) -> np.ndarray:
    """Per-node value: the common non-white outgoing value, else white."""
    d = np.asarray(d)
    out = np.zeros(g.n, dtype=np.int64)
    np.maximum.at(out, g.src, d)
    return out


def is_all_white(d) -> bool:
    return not np.any(np.asarray(d))


@dataclass(frozen=True)
class WhiteningFingerprint:
    """Exact canonical form of a directional assignment (values in directed-index order)."""

    digest: bytes

    @property
    def hexdigest(self) -> str:
        return hashlib.sha256(self.digest).hexdigest()


def fingerprint(d) -> WhiteningFingerprint:
    d = np.asarray(d)
    if d.size and (d.min() < 0 or d.max() > 255):
        raise InvalidArgumentError("values out of range for fingerprinting")
    return WhiteningFingerprint(d.astype(np.uint8).tobytes())


# -- non-monotone iteration --------------------------------------------------

@dataclass
class IterationResult:
    assignment: np.ndarray
    converged: bool
    cycle_detected: bool
    sweeps: int
    cycle_length: int | None = None
    contradictions: int = 0


def naive_directional_iteration(g: Graph, c0, q: int, max_sweeps: int = 1000, seed: int = 0,
                                initial=None, frozen=None) -> IterationResult:
    """Iterate the forced-recolor rule from ``c(i|k) = c0(i)`` in random sweep order.

    Unlike :func:`whiten_directional` the input need not be legal and entries
    may change between non-white colors.  Each sweep updates every entry
    once, in place, in a fresh random permutation; entries facing all ``q``
    colors keep their value.  The run stops on the first sweep that changes
    nothing (``converged``) or after ``max_sweeps``.  ``cycle_detected`` is
    set once a post-sweep state repeats.  ``frozen`` marks entries that are
    never updated (boundary conditions).
    """
    if initial is None:
        c0 = _as_values(g, c0, g.n, "coloring")
        d = c0[g.src].copy()
    else:
        d = _as_values(g, initial, 2 * g.m, "directional assignment").copy()
    fz = np.zeros(len(d), dtype=np.bool_) if frozen is None else np.asarray(frozen, dtype=np.bool_)
    rng = np.random.default_rng(seed)
    seen = {d.tobytes(): 0}
    cycle_len = None
    contra = 0
    for sweep in range(1, max_sweeps + 1):
        changed, k = _dir_sweep_kernel(g.offsets, g.rev, g.src, d, q, rng.permutation(len(d)), fz)
        contra += k
        if changed == 0:
            return IterationResult(d, True, cycle_len is not None, sweep, cycle_len, contra)
        key = d.tobytes()
        if key in seen and cycle_len is None:
            cycle_len = sweep - seen[key]
        seen.setdefault(key, sweep)
    return IterationResult(d, False, cycle_len is not None, max_sweeps, cycle_len, contra)


def directional_fixed_points(g: Graph, q: int, values=None, limit: int = 1000):
    """Exhaustively enumerate assignments over ``values`` that satisfy the local equations.

    Returns ``(count, fixed_points)`` with at most ``limit`` fixed points listed.
    """
    vals = np.arange(q + 1, dtype=np.int64) if values is None else np.asarray(values, dtype=np.int64)
    total = float(len(vals)) ** (2 * g.m)
    if total > 5e8:
        raise ResourceLimitError(f"{total:.3g} assignments is beyond the exhaustive budget")
    out = np.zeros((limit, 2 * g.m), dtype=np.int64)
    found = int(_exhaustive_fixed_points_kernel(g.offsets, g.rev, g.src, q, vals, limit, out))
    return found, out[:min(found, limit)]


def staggered_ring_assignment(g: Graph) -> np.ndarray:
    """Ring messages ``c(i, i+1) = 1`` for even ``i`` and 2 for odd ``i``; backward messages white."""
    n = g.n
    d = np.zeros(2 * g.m, dtype=np.int64)
    for i in range(n):
        d[g.directed_index(i, (i + 1) % n)] = 1 if i % 2 == 0 else 2
    return d
