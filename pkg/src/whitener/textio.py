"""Plain-text instance format.

::

    p <n> <m> <q>
    e <i> <j>          one per edge, zero-based
    c <i> <color>      optional node coloring, colors in 1..q
    w <i> <value>      optional node whitening, 0 = white
    d <i> <j> <value>  optional directional value w(i|j)

Lines starting with ``#`` and blank lines are ignored.  ``q`` is 0 when the
file carries a bare graph.
"""
from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError
from .graph import Graph


@dataclass
class Instance:
    graph: Graph
    q: int = 0
    coloring: np.ndarray | None = None
    whitening: np.ndarray | None = None
    directional: np.ndarray | None = None


def dumps(g: Graph, q: int = 0, coloring=None, whitening=None, directional=None) -> str:
    out = io.StringIO()
    out.write(f"p {g.n} {g.m} {q}\n")
    for i, j in g.edges:
        out.write(f"e {i} {j}\n")
    if coloring is not None:
        for i, v in enumerate(coloring):
            out.write(f"c {i} {int(v)}\n")
    if whitening is not None:
        for i, v in enumerate(whitening):
            out.write(f"w {i} {int(v)}\n")
    if directional is not None:
        for e, v in enumerate(directional):
            out.write(f"d {g.src[e]} {g.nbrs[e]} {int(v)}\n")
    return out.getvalue()


def loads(text: str) -> Instance:
    header = None
    edges, cols, whites, dirs = [], {}, {}, {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tag, *fields = line.split()
        try:
            vals = [int(x) for x in fields]
        except ValueError:
            raise InvalidArgumentError(f"line {lineno}: non-integer field") from None
        if tag == "p" and len(vals) == 3:
            header = vals
        elif tag == "e" and len(vals) == 2:
            edges.append(vals)
        elif tag == "c" and len(vals) == 2:
            cols[vals[0]] = vals[1]
        elif tag == "w" and len(vals) == 2:
            whites[vals[0]] = vals[1]
        elif tag == "d" and len(vals) == 3:
            dirs[(vals[0], vals[1])] = vals[2]
        else:
            raise InvalidArgumentError(f"line {lineno}: cannot parse {raw!r}")
    if header is None:
        raise InvalidArgumentError("missing 'p n m q' header")
    n, m, q = header
    if len(edges) != m:
        raise InvalidArgumentError(f"header says {m} edges, found {len(edges)}")
    g = Graph.from_edges(n, edges)
    inst = Instance(g, q)
    if cols:
        inst.coloring = _dense(cols, n, "c")
    if whites:
        inst.whitening = _dense(whites, n, "w")
    if dirs:
        d = np.zeros(2 * g.m, dtype=np.int64)
        if len(dirs) != 2 * g.m:
            raise InvalidArgumentError("directional assignment must cover every directed edge")
        for (i, j), v in dirs.items():
            try:
                d[g.directed_index(i, j)] = v
            except (KeyError, IndexError):
                raise InvalidArgumentError(f"'d {i} {j}' is not an edge of the graph") from None
        inst.directional = d
    return inst


def _dense(values: dict, n: int, tag: str) -> np.ndarray:
    if sorted(values) != list(range(n)):
        raise InvalidArgumentError(f"'{tag}' lines must cover nodes 0..{n - 1} exactly once")
    return np.array([values[i] for i in range(n)], dtype=np.int64)
