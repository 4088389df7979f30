"""Survey propagation for q-coloring and the complexity of directional whitenings.

A survey on directed edge ``i -> j`` is a probability vector of length
``q + 1``: entry 0 is white, entry ``c`` the color ``c``.  The update draws
one value per incoming survey ``k -> i`` (``k != j``), conditions on the
drawn colors leaving at least one color free, and reports the probability
that exactly one color (and which) is free.  It is evaluated exactly by
inclusion-exclusion over color subsets::

    none(T)      = prod_k (1 - sum_{c in T} eta_c(k -> i))
    exactly(T)   = sum_{T' >= T} (-1)^{|T'| - |T|} none(T')
    Z_j(i)       = 1 - exactly(empty)
    eta_c(i -> j) = exactly({c}) / Z_j(i)
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .coloring import enumerate_legal_colorings
from .errors import ContradictionError, InvalidArgumentError, InvalidParameterError
from .graph import Graph
from .whitening import extremal_directional_whitening, fingerprint

ZERO_TOL = 1e-12
NONTRIVIAL_TOL = 1e-6


# -- kernels -----------------------------------------------------------------

@njit(cache=True)
def _subset_sums(p, q, out):
    # out[T] = sum_{c in T} p[c], bit c-1 <-> color c
    out[0] = 0.0
    for t in range(1, 1 << q):
        low = t & (-t)
        c = 0
        while (low >> c) != 1:
            c += 1
        out[t] = out[t ^ low] + p[c + 1]


@njit(cache=True)
def _popc(x):
    c = 0
    while x:
        x &= x - 1
        c += 1
    return c


@njit(cache=True)
def _from_none(none, q, out):
    """Fill out[1..q] with exactly({c}) and return 1 - exactly(empty)."""
    full = (1 << q) - 1
    z = 0.0
    for t in range(1, full + 1):
        if _popc(t) % 2 == 1:
            z += none[t]
        else:
            z -= none[t]
    for c in range(1, q + 1):
        bit = 1 << (c - 1)
        s = 0.0
        for t in range(1, full + 1):
            if t & bit:
                if (_popc(t) - 1) % 2 == 0:
                    s += none[t]
                else:
                    s -= none[t]
        out[c] = s
    return z


@njit(cache=True)
def _update_from(eta, offsets, rev, i, skip, q, none, sums, out):
    """Survey update at node i ignoring out-edge ``skip`` (-1 keeps all). Returns Z."""
    full = (1 << q) - 1
    for t in range(full + 1):
        none[t] = 1.0
    for f in range(offsets[i], offsets[i + 1]):
        if f == skip:
            continue
        _subset_sums(eta[rev[f]], q, sums)
        for t in range(1, full + 1):
            none[t] *= 1.0 - sums[t]
    z = _from_none(none, q, out)
    if z <= 1e-12:
        return z
    tot = 0.0
    for c in range(1, q + 1):
        v = out[c] / z
        if v < 0.0:
            v = 0.0
        out[c] = v
        tot += v
    if tot > 1.0:
        for c in range(1, q + 1):
            out[c] /= tot
        tot = 1.0
    out[0] = 1.0 - tot
    return z


@njit(cache=True)
def _sp_sweeps(eta, offsets, src, rev, q, damping, tol, max_sweeps, seed):
    np.random.seed(seed)
    n_dir = eta.shape[0]
    none = np.empty(1 << q, dtype=np.float64)
    sums = np.empty(1 << q, dtype=np.float64)
    new = np.empty(q + 1, dtype=np.float64)
    max_change = 0.0
    for sweep in range(1, max_sweeps + 1):
        perm = np.random.permutation(n_dir)
        max_change = 0.0
        for t in range(n_dir):
            e = perm[t]
            z = _update_from(eta, offsets, rev, src[e], e, q, none, sums, new)
            if z <= 1e-12:
                return sweep, max_change, e
            for c in range(q + 1):
                v = (1.0 - damping) * new[c] + damping * eta[e, c]
                dv = abs(v - eta[e, c])
                if dv > max_change:
                    max_change = dv
                eta[e, c] = v
            # keep the white entry exactly complementary
            s = 0.0
            for c in range(1, q + 1):
                s += eta[e, c]
            eta[e, 0] = max(0.0, 1.0 - s)
        if max_change < tol:
            return sweep, max_change, -1
    return max_sweeps, max_change, -2


@njit(cache=True)
def _partition_kernel(eta, offsets, nbrs, rev, q, z_node, z_cav, z_edge):
    n = offsets.shape[0] - 1
    none = np.empty(1 << q, dtype=np.float64)
    sums = np.empty(1 << q, dtype=np.float64)
    tmp = np.empty(q + 1, dtype=np.float64)
    for i in range(n):
        z_node[i] = _update_from(eta, offsets, rev, i, -1, q, none, sums, tmp)
        for e in range(offsets[i], offsets[i + 1]):
            z_cav[e] = _update_from(eta, offsets, rev, i, e, q, none, sums, tmp)
            s = 0.0
            for c in range(1, q + 1):
                s += eta[e, c] * eta[rev[e], c]
            z_edge[e] = 1.0 - s


# -- single-edge update and its sampling oracle -----------------------------------

def _as_incoming(incoming, q: int) -> np.ndarray:
    arr = np.asarray(incoming, dtype=np.float64).reshape(-1, q + 1)
    if np.any(arr < -ZERO_TOL) or np.any(np.abs(arr.sum(axis=1) - 1.0) > 1e-9):
        raise InvalidArgumentError("incoming surveys must be probability vectors of length q+1")
    return arr


def sp_update_edge(incoming, q: int, return_z: bool = False):
    """Exact survey update from the incoming surveys ``k -> i`` (``k != j``).

    Raises :class:`ContradictionError` when every color is surely present.
    """
    if q < 2 or q > 16:
        raise InvalidParameterError("q must lie in 2..16")
    arr = _as_incoming(incoming, q)
    d = len(arr)
    offsets = np.array([0, d], dtype=np.int64)
    rev = np.arange(d, dtype=np.int64)
    out = np.empty(q + 1)
    z = _update_from(arr, offsets, rev, 0, -1, q, np.empty(1 << q), np.empty(1 << q), out)
    if z <= ZERO_TOL:
        raise ContradictionError("all colors are surely present among the incoming surveys")
    return (out, z) if return_z else out


@dataclass
class MonteCarloSurvey:
    eta: np.ndarray
    eta_se: np.ndarray
    z: float
    z_se: float
    accepted: int
    samples: int


def sp_monte_carlo_oracle(incoming, q: int, samples: int, seed: int) -> MonteCarloSurvey:
    """Estimate the survey update by literally drawing one value per incoming survey.

    Draws with all ``q`` colors present are rejected; among the rest, the
    fraction with exactly one free color ``c`` estimates ``eta_c``.
    Standard errors are binomial (``eta`` conditional on acceptance).
    """
    if samples < 1:
        raise InvalidParameterError("need at least one sample")
    arr = _as_incoming(incoming, q)
    rng = np.random.default_rng(seed)
    present = np.zeros(samples, dtype=np.int64)
    for row in arr:
        cum = np.cumsum(row)
        draw = np.searchsorted(cum, rng.random(samples) * cum[-1], side="right")
        draw = np.minimum(draw, q)
        present |= np.where(draw > 0, np.left_shift(1, draw), 0)
    full = sum(1 << c for c in range(1, q + 1))
    missing = full & ~present
    accepted = missing != 0
    n_acc = int(accepted.sum())
    eta = np.zeros(q + 1)
    se = np.zeros(q + 1)
    if n_acc:
        for c in range(1, q + 1):
            eta[c] = np.count_nonzero(missing == (1 << c)) / n_acc
        eta[0] = 1.0 - eta[1:].sum()
        se = np.sqrt(eta * (1 - eta) / n_acc)
    z = n_acc / samples
    return MonteCarloSurvey(eta, se, z, math.sqrt(z * (1 - z) / samples), n_acc, samples)


# -- full runs ---------------------------------------------------------------------

@dataclass
class SPState:
    messages: np.ndarray
    sweep_count: int
    max_change: float


@dataclass
class SPResult:
    state: SPState
    converged: bool

    @property
    def messages(self) -> np.ndarray:
        return self.state.messages


def all_white_messages(g: Graph, q: int) -> np.ndarray:
    eta = np.zeros((2 * g.m, q + 1))
    eta[:, 0] = 1.0
    return eta


def ensemble_messages(g: Graph, q: int, assignments, weights=None) -> np.ndarray:
    """Per-edge frequencies of each value over a collection of directional assignments."""
    a = np.asarray(assignments, dtype=np.int64).reshape(-1, 2 * g.m)
    if len(a) == 0:
        raise InvalidArgumentError("empty whitening ensemble")
    w = np.ones(len(a)) if weights is None else np.asarray(weights, dtype=np.float64)
    eta = np.zeros((2 * g.m, q + 1))
    for row, wt in zip(a, w):
        eta[np.arange(2 * g.m), row] += wt
    return eta / w.sum()


def initial_messages(g: Graph, q: int, init: str, rng: np.random.Generator, ensemble=None) -> np.ndarray:
    if init == "uniform-random":
        return rng.dirichlet(np.ones(q + 1), size=2 * g.m) if g.m else np.zeros((0, q + 1))
    if init == "all-white":
        return all_white_messages(g, q)
    if init == "from-whitening-ensemble":
        if ensemble is None:
            raise InvalidParameterError("init 'from-whitening-ensemble' needs an ensemble")
        return ensemble_messages(g, q, ensemble)
    raise InvalidParameterError(f"unknown init {init!r}")


def sp_run(g: Graph, q: int, init: str = "uniform-random", damping: float = 0.2, tol: float = 1e-9,
           max_sweeps: int = 10_000, seed: int = 0, ensemble=None, messages=None) -> SPResult:
    """Random-sequential damped survey propagation.

    Each sweep visits all directed edges in a fresh random order and
    replaces ``msg <- (1 - damping) * G(...) + damping * msg``.  The run
    converges when the largest single-entry change in a sweep is below
    ``tol``.  A vanishing normalization raises :class:`ContradictionError`
    whose ``edge`` is the offending directed edge and whose ``state`` holds
    the messages at that moment.
    """
    if not 0.0 <= damping < 1.0:
        raise InvalidParameterError("damping must lie in [0, 1)")
    if tol <= 0 or max_sweeps < 1:
        raise InvalidParameterError("need tol > 0 and max_sweeps >= 1")
    if not 2 <= q <= 16:
        raise InvalidParameterError("q must lie in 2..16")
    rng = np.random.default_rng(seed)
    if messages is not None:
        eta = np.array(messages, dtype=np.float64)
    else:
        eta = initial_messages(g, q, init, rng, ensemble)
    eta = np.ascontiguousarray(eta)
    if g.m == 0:
        return SPResult(SPState(eta, 0, 0.0), True)
    sweeps, change, status = _sp_sweeps(eta, g.offsets, g.src, g.rev, q, float(damping), float(tol),
                                        int(max_sweeps), int(rng.integers(2**31 - 1)))
    state = SPState(eta, int(sweeps), float(change))
    if status >= 0:
        err = ContradictionError("survey update found every color forced", g.directed_pair(int(status)))
        err.state = state
        raise err
    return SPResult(state, status == -1)


def nontrivial_fraction(messages) -> float:
    """Fraction of directed edges whose survey puts weight on some color."""
    eta = np.asarray(messages)
    if len(eta) == 0:
        return 0.0
    return float(np.mean(eta[:, 0] < 1.0 - NONTRIVIAL_TOL))


# -- partition functions and complexity ----------------------------------------------

def _partitions(g: Graph, messages, q: int):
    eta = np.ascontiguousarray(messages, dtype=np.float64)
    z_node = np.empty(g.n)
    z_cav = np.empty(2 * g.m)
    z_edge = np.empty(2 * g.m)
    _partition_kernel(eta, g.offsets, g.nbrs, g.rev, q, z_node, z_cav, z_edge)
    return z_node, z_cav, z_edge


def edge_partition(eta_ij, eta_ji) -> float:
    """Probability that independent draws on the two sides are compatible (white matches anything)."""
    a, b = np.asarray(eta_ij), np.asarray(eta_ji)
    return float(1.0 - np.dot(a[1:], b[1:]))


@dataclass
class NodePartition:
    z: float           # mean of Z_j(i) Z(i, j) over j (1 for isolated nodes)
    values: np.ndarray  # Z_j(i) Z(i, j) for each neighbor j, in adjacency order
    spread: float       # max - min of values
    z_direct: float     # probability that adding i with all its edges is consistent


def node_partition(g: Graph, messages, i: int, q: int | None = None) -> NodePartition:
    eta = np.asarray(messages, dtype=np.float64)
    q = eta.shape[1] - 1 if q is None else q
    out = np.empty(q + 1)
    none, sums = np.empty(1 << q), np.empty(1 << q)
    z_direct = _update_from(eta, g.offsets, g.rev, i, -1, q, none, sums, out)
    vals = []
    for e in g.out_edges(i):
        zc = _update_from(eta, g.offsets, g.rev, i, e, q, none, sums, out)
        vals.append(zc * edge_partition(eta[e], eta[g.rev[e]]))
    vals = np.array(vals)
    if len(vals) == 0:
        return NodePartition(1.0, vals, 0.0, 1.0)
    return NodePartition(float(vals.mean()), vals, float(vals.max() - vals.min()), float(z_direct))


@dataclass
class ComplexityReport:
    sigma: float | None
    z_node: np.ndarray
    z_edge: np.ndarray
    contradiction: bool
    max_spread: float


def complexity(g: Graph, messages, q: int | None = None) -> ComplexityReport:
    """``[sum_i ln Z(i) - sum_edges ln Z(i, j)] / n`` at a survey fixed point."""
    eta = np.asarray(messages, dtype=np.float64)
    q = eta.shape[1] - 1 if q is None else q
    z_node, z_cav, z_dir = _partitions(g, eta, q)
    per_choice = z_cav * z_dir
    spread = 0.0
    for i in range(g.n):
        lo, hi = g.offsets[i], g.offsets[i + 1]
        if hi > lo:
            spread = max(spread, float(per_choice[lo:hi].max() - per_choice[lo:hi].min()))
    # one entry per undirected edge: the direction stored first
    first = np.flatnonzero(np.arange(2 * g.m) < g.rev)
    z_edge = z_dir[first]
    bad = np.any(z_node <= ZERO_TOL) or np.any(z_edge <= ZERO_TOL)
    if bad:
        return ComplexityReport(None, z_node, z_edge, True, spread)
    sigma = (np.log(z_node).sum() - np.log(z_edge).sum()) / g.n if g.n else 0.0
    return ComplexityReport(float(sigma), z_node, z_edge, False, spread)


def node_survey_field(g: Graph, messages, i: int, q: int | None = None) -> np.ndarray:
    """Survey of node ``i`` with all its edges present."""
    eta = np.asarray(messages, dtype=np.float64)
    q = eta.shape[1] - 1 if q is None else q
    out = np.empty(q + 1)
    z = _update_from(eta, g.offsets, g.rev, i, -1, q, np.empty(1 << q), np.empty(1 << q), out)
    if z <= ZERO_TOL:
        raise ContradictionError(f"node {i} sees every color forced", (i, None))
    return out


# -- exhaustive counting ------------------------------------------------------------

@dataclass
class WhiteningCount:
    """Distinct extremal directional whitenings reached from all legal colorings."""

    count: int
    n_colorings: int
    whitenings: np.ndarray      # (count, 2M), one row per distinct whitening
    multiplicity: np.ndarray    # legal colorings mapped to each row

    def edge_frequencies(self, q: int, weighting: str = "whitenings") -> np.ndarray:
        """Per-edge value frequencies, each whitening counted once or weighted by its colorings."""
        if weighting == "whitenings":
            w = np.ones(self.count)
        elif weighting == "colorings":
            w = self.multiplicity.astype(np.float64)
        else:
            raise InvalidParameterError("weighting must be 'whitenings' or 'colorings'")
        m2 = self.whitenings.shape[1]
        eta = np.zeros((m2, q + 1))
        for row, wt in zip(self.whitenings, w):
            eta[np.arange(m2), row] += wt
        return eta / w.sum()


def count_whitenings_exhaustive(g: Graph, q: int, cap: int = 200_000, budget: int = 10**8) -> WhiteningCount:
    """Enumerate legal colorings and count their distinct directional whitenings."""
    est = enumerate_legal_colorings(g, q, cap=cap, budget=budget)
    if est.count == 0:
        return WhiteningCount(0, 0, np.zeros((0, 2 * g.m), dtype=np.int64), np.zeros(0, dtype=np.int64))
    if est.colorings is None:
        raise InvalidParameterError(f"{est.count} colorings exceed the listing cap {cap}")
    seen: dict = {}
    rows = []
    for c in est.colorings:
        d = extremal_directional_whitening(g, c, q)
        key = fingerprint(d)
        if key not in seen:
            seen[key] = len(rows)
            rows.append((d, 0))
        k = seen[key]
        rows[k] = (rows[k][0], rows[k][1] + 1)
    return WhiteningCount(len(rows), est.count, np.array([r[0] for r in rows]),
                          np.array([r[1] for r in rows], dtype=np.int64))
