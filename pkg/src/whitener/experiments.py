"""Reproducible experiment campaigns and their structured output.

Every campaign takes an :class:`ExperimentSpec`, derives one random stream
per (point, instance, purpose) from the master seed, runs independent
instances through a worker pool, and folds the results in instance order.
The returned :class:`Report` carries the parameter echo, seed, package version and
per-point sample counts, and serializes bit-identically for identical specs.

Output columns (schema version 1)
---------------------------------
sweep
    alpha, samples, coloring_success_fraction, fraction_all_white,
    colorings_whitened, sp_nontrivial_fraction, sp_converged_fraction,
    sigma_mean, sigma_stderr, sigma_samples, contradiction_fraction
theorem-b
    pairs_tested, coincidences, skipped, instances
theorem-c
    n, alpha, L, valid, differing, skipped, q_estimate, wilson_low, wilson_high
ring-demo
    n, fixed_points_all_values, nontrivial_fixed_points, fixed_points_colors_only, iteration_converged,
    cycle_detected, cycle_length, staggered_violations, staggered_min_sum_violations,
    staggered_min_sum_l1
count
    n, alpha, instance, colorings, distinct_whitenings, log_count_per_node,
    clusters, method, sp_sigma, sp_contradiction, sp_converged, status
quasi
    sweep, violated_edges, total_l1, per_node
sp-single
    converged, sweeps, sigma, contradiction, nontrivial_fraction_of_edges
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .coloring import (coloring_clusters, enumerate_legal_colorings, find_legal_coloring, planted_instance,
                       random_coloring, random_local_recoloring)
from .errors import ContradictionError, InvalidParameterError, ResourceLimitError
from .graph import ball, generate_random_graph, is_tree_region, ring_graph
from .local_minima import cavity_table, k_stable_descent, quasi_residual, run_min_sum, staggered_ring_table
from .seeding import COLORING, GRAPH, ORDER, PICK, SEARCH, SP, derive_rng, derive_seed
from .survey import complexity, count_whitenings_exhaustive, nontrivial_fraction, sp_run
from .whitening import (directional_fixed_points, directional_violations, extremal_directional_whitening,
                        fingerprint, is_all_white, naive_directional_iteration, staggered_ring_assignment)

SCHEMA_VERSION = 1
KINDS = ("sweep", "theorem-b", "theorem-c", "count", "ring-demo", "quasi", "sp-single")
WORKERS_ENV = "WHITENER_WORKERS"


@dataclass
class ExperimentSpec:
    """Parameters of one campaign; fields a kind does not use are ignored (and still echoed)."""

    kind: str
    q: int = 3
    n: int = 1000
    n_values: tuple = ()
    alpha: float = 2.0
    alpha_min: float | None = None
    alpha_max: float | None = None
    alpha_step: float = 0.1
    samples: int = 20
    seed: int = 0
    # coloring search
    max_steps: int = 10**7
    noise: float = 0.3
    coloring_source: str = "search"   # or "planted"
    # survey propagation
    init: str = "uniform-random"
    damping: float = 0.2
    tol: float = 1e-9
    max_sweeps: int = 10_000
    # local perturbations
    L: int = 2
    # quasi-solutions
    k: int = 1
    b: int = 1
    sweeps: int = 100
    # counting
    exhaustive_max_n: int = 16
    colorings_cap: int = 200_000
    sampled_colorings: int = 50
    output: str | None = None

    def __post_init__(self):
        self.n_values = tuple(int(v) for v in self.n_values)

    def validate(self) -> "ExperimentSpec":
        if self.kind not in KINDS:
            raise InvalidParameterError(f"unknown experiment kind {self.kind!r}")
        if self.samples < 1:
            raise InvalidParameterError("samples must be at least 1")
        if not 2 <= self.q <= 16:
            raise InvalidParameterError("q must lie in 2..16")
        if self.n < 1 or any(v < 1 for v in self.n_values):
            raise InvalidParameterError("node counts must be positive")
        if self.alpha < 0:
            raise InvalidParameterError("alpha must be non-negative")
        if self.L < 0 or self.k < 0 or self.b < 0 or self.sweeps < 0:
            raise InvalidParameterError("radii and sweep counts must be non-negative")
        if self.coloring_source not in ("search", "planted"):
            raise InvalidParameterError("coloring_source must be 'search' or 'planted'")
        if not 0 <= self.damping < 1 or self.tol <= 0 or self.max_sweeps < 1:
            raise InvalidParameterError("invalid survey propagation settings")
        if self.kind == "sweep":
            self.alphas()
        if self.kind == "ring-demo":
            for v in self.ring_sizes():
                if v < 3 or v % 2 == 0:
                    raise InvalidParameterError(f"ring size {v} must be odd and at least 3")
        return self

    def alphas(self) -> np.ndarray:
        lo = self.alpha if self.alpha_min is None else self.alpha_min
        hi = self.alpha if self.alpha_max is None else self.alpha_max
        if self.alpha_step <= 0 or hi < lo or lo < 0:
            raise InvalidParameterError("empty or invalid alpha range")
        k = int(math.floor((hi - lo) / self.alpha_step + 1e-9))
        return np.round(lo + self.alpha_step * np.arange(k + 1), 10)

    def sizes(self) -> tuple:
        return self.n_values if self.n_values else (self.n,)

    def ring_sizes(self) -> tuple:
        return self.n_values if self.n_values else (3, 5, 7)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["n_values"] = list(self.n_values)
        return d


@dataclass
class SweepRecord:
    alpha: float
    samples: int
    coloring_success_fraction: float
    fraction_all_white: float          # over found colorings; NaN when none were found
    colorings_whitened: int
    sp_nontrivial_fraction: float      # runs ending on a non-white fixed point
    sp_converged_fraction: float
    sigma_mean: float                  # over converged runs without contradiction
    sigma_stderr: float
    sigma_samples: int
    contradiction_fraction: float


@dataclass
class Report:
    kind: str
    spec: dict
    rows: list
    summary: dict = field(default_factory=dict)

    def header(self) -> dict:
        return {"schema_version": SCHEMA_VERSION, "version": __version__, "kind": self.kind,
                "seed": self.spec["seed"], "spec": self.spec}

    def to_json(self) -> str:
        doc = dict(self.header(), summary=self.summary, rows=self.rows)
        return json.dumps(_jsonable(doc), indent=2, sort_keys=True, allow_nan=False) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        head = self.header()
        buf.write(f"# schema_version: {head['schema_version']}\n# version: {head['version']}\n")
        buf.write(f"# kind: {self.kind}\n# seed: {head['seed']}\n")
        buf.write(f"# spec: {json.dumps(_jsonable(self.spec), sort_keys=True)}\n")
        if self.summary:
            buf.write(f"# summary: {json.dumps(_jsonable(self.summary), sort_keys=True)}\n")
        if self.rows:
            w = csv.DictWriter(buf, fieldnames=list(self.rows[0].keys()), lineterminator="\n")
            w.writeheader()
            for r in self.rows:
                w.writerow({k: _csv_cell(v) for k, v in r.items()})
        return buf.getvalue()

    def dumps(self, fmt: str) -> str:
        if fmt == "json":
            return self.to_json()
        if fmt == "csv":
            return self.to_csv()
        raise InvalidParameterError(f"unknown format {fmt!r}")

    def write(self, path: str | None, fmt: str) -> str:
        text = self.dumps(fmt)
        if path:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text)
        return text


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def _csv_cell(v):
    if isinstance(v, float) and not math.isfinite(v):
        return ""
    if isinstance(v, float):
        return repr(v)
    return v


# -- plumbing ----------------------------------------------------------------------

def worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise InvalidParameterError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None


def _pool_map(func, jobs: list) -> list:
    """Map in a process pool; results come back in job order whatever the completion order."""
    workers = min(worker_count(), len(jobs))
    if workers <= 1:
        return [func(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(func, jobs, chunksize=1))


def wilson_interval(k: int, n: int, z: float = 1.959963984540054) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion (default 95%)."""
    if n == 0:
        return 0.0, 1.0
    p = k / n
    den = 1 + z * z / n
    mid = (p + z * z / (2 * n)) / den
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / den
    lo = 0.0 if k == 0 else max(0.0, mid - half)
    hi = 1.0 if k == n else min(1.0, mid + half)
    return lo, hi


def _instance(spec: ExperimentSpec, n: int, alpha: float, *key):
    """Graph plus a legal coloring (or ``None``) for one instance."""
    m = int(round(alpha * n))
    if spec.coloring_source == "planted":
        g, c = planted_instance(n, m, spec.q, derive_seed(spec.seed, *key, GRAPH))
        return g, c
    g = generate_random_graph(n, m, derive_seed(spec.seed, *key, GRAPH))
    c = find_legal_coloring(g, spec.q, derive_seed(spec.seed, *key, COLORING), spec.max_steps, spec.noise)
    return g, c


def _run_sp(spec: ExperimentSpec, g, *key) -> dict:
    try:
        r = sp_run(g, spec.q, init=spec.init, damping=spec.damping, tol=spec.tol,
                   max_sweeps=spec.max_sweeps, seed=derive_seed(spec.seed, *key, SP))
    except ContradictionError as err:
        return {"converged": False, "contradiction": True, "sigma": float("nan"),
                "nontrivial": nontrivial_fraction(err.state.messages), "sweeps": err.state.sweep_count,
                "spread": float("nan")}
    rep = complexity(g, r.messages, spec.q)
    sigma = rep.sigma if rep.sigma is not None else float("nan")
    return {"converged": r.converged, "contradiction": rep.contradiction, "sigma": sigma,
            "nontrivial": nontrivial_fraction(r.messages), "sweeps": r.state.sweep_count,
            "spread": rep.max_spread}


# -- phase sweep ---------------------------------------------------------------------

def _sweep_job(args):
    spec, point, inst, alpha = args
    g, c = _instance(spec, spec.n, alpha, point, inst)
    out = {"colored": c is not None, "all_white": None}
    if c is not None:
        d = extremal_directional_whitening(g, c, spec.q, derive_seed(spec.seed, point, inst, ORDER))
        out["all_white"] = bool(is_all_white(d))
    out["sp"] = _run_sp(spec, g, point, inst)
    return out


def _fold_sweep(alpha: float, results: list) -> SweepRecord:
    s = len(results)
    colored = [r for r in results if r["colored"]]
    sp = [r["sp"] for r in results]
    sig = np.array([x["sigma"] for x in sp if x["converged"] and not x["contradiction"]])
    return SweepRecord(
        alpha=float(alpha),
        samples=s,
        coloring_success_fraction=len(colored) / s,
        fraction_all_white=(float(np.mean([r["all_white"] for r in colored])) if colored else float("nan")),
        colorings_whitened=len(colored),
        sp_nontrivial_fraction=float(np.mean([x["converged"] and x["nontrivial"] > 0 for x in sp])),
        sp_converged_fraction=float(np.mean([x["converged"] for x in sp])),
        sigma_mean=float(sig.mean()) if len(sig) else float("nan"),
        sigma_stderr=float(sig.std(ddof=1) / math.sqrt(len(sig))) if len(sig) > 1 else (0.0 if len(sig) else float("nan")),
        sigma_samples=int(len(sig)),
        contradiction_fraction=float(np.mean([x["contradiction"] for x in sp])),
    )


def cmd_sweep(spec: ExperimentSpec) -> Report:
    """Whitening, coloring and survey observables across a range of edge densities."""
    spec.validate()
    alphas = spec.alphas()
    jobs = [(spec, p, i, float(a)) for p, a in enumerate(alphas) for i in range(spec.samples)]
    results = _pool_map(_sweep_job, jobs)
    rows = []
    for p, a in enumerate(alphas):
        rows.append(asdict(_fold_sweep(a, results[p * spec.samples:(p + 1) * spec.samples])))
    return Report("sweep", spec.to_dict(), rows, {"points": len(rows), "samples_per_point": spec.samples})


# -- local perturbation campaigns --------------------------------------------------

def tree_region_pair(g, c, q: int, L: int, rng: np.random.Generator, tries: int = 50):
    """Second legal coloring differing from ``c`` only strictly inside a tree-shaped radius-``L`` ball.

    Returns ``(center, other)`` or ``None`` when ``tries`` random centers give no valid pair.
    """
    for _ in range(tries):
        v = int(rng.integers(g.n))
        bl = ball(g, v, L)
        if not is_tree_region(g, bl.nodes) or not bl.interior:
            continue
        other = random_local_recoloring(g, c, q, sorted(bl.interior), rng)
        if other is not None:
            return v, other
    return None


def _theorem_b_job(args):
    spec, inst = args
    g, c = _instance(spec, spec.n, spec.alpha, 0, inst)
    if c is None:
        return {"status": "uncolored"}
    rng = derive_rng(spec.seed, 0, inst, PICK)
    found = tree_region_pair(g, c, spec.q, spec.L, rng)
    if found is None:
        return {"status": "no-region"}
    _, other = found
    a = fingerprint(extremal_directional_whitening(g, c, spec.q))
    b = fingerprint(extremal_directional_whitening(g, other, spec.q))
    return {"status": "ok", "coincide": a == b}


def cmd_theorem_b(spec: ExperimentSpec, max_instances: int | None = None) -> Report:
    """Compare the whitenings of colorings that differ only inside a tree region."""
    spec.validate()
    limit = max_instances or 5 * spec.samples
    tested = coincide = 0
    skipped = {}
    inst = 0
    while tested < spec.samples and inst < limit:
        batch = [(spec, inst + t) for t in range(min(worker_count(), limit - inst))]
        for r in _pool_map(_theorem_b_job, batch):
            inst += 1
            if tested >= spec.samples:
                continue
            if r["status"] != "ok":
                skipped[r["status"]] = skipped.get(r["status"], 0) + 1
                continue
            tested += 1
            coincide += int(r["coincide"])
    row = {"pairs_tested": tested, "coincidences": coincide, "skipped": sum(skipped.values()),
           "instances": inst}
    return Report("theorem-b", spec.to_dict(), [row], {"skipped_by_reason": skipped})


def _theorem_c_job(args):
    spec, point, n, inst = args
    g, c = _instance(spec, n, spec.alpha, point, inst)
    if c is None:
        return {"status": "uncolored"}
    rng = derive_rng(spec.seed, point, inst, PICK)
    center = int(rng.integers(n))
    region = sorted(ball(g, center, spec.L).nodes)
    other = random_local_recoloring(g, c, spec.q, region, derive_rng(spec.seed, point, inst, SEARCH))
    if other is None:
        return {"status": "frozen-region"}
    a = fingerprint(extremal_directional_whitening(g, c, spec.q))
    b = fingerprint(extremal_directional_whitening(g, other, spec.q))
    return {"status": "ok", "differ": a != b}


def cmd_theorem_c(spec: ExperimentSpec) -> Report:
    """Estimate how often a change within distance ``L`` of one node alters the whitening."""
    spec.validate()
    sizes = spec.sizes()
    jobs = [(spec, p, n, i) for p, n in enumerate(sizes) for i in range(spec.samples)]
    results = _pool_map(_theorem_c_job, jobs)
    rows = []
    for p, n in enumerate(sizes):
        chunk = results[p * spec.samples:(p + 1) * spec.samples]
        ok = [r for r in chunk if r["status"] == "ok"]
        k = sum(r["differ"] for r in ok)
        lo, hi = wilson_interval(k, len(ok))
        rows.append({"n": int(n), "alpha": float(spec.alpha), "L": spec.L, "valid": len(ok), "differing": int(k),
                     "skipped": len(chunk) - len(ok), "q_estimate": (k / len(ok)) if ok else float("nan"),
                     "wilson_low": lo, "wilson_high": hi})
    return Report("theorem-c", spec.to_dict(), rows, {"samples_per_point": spec.samples})


# -- odd rings ---------------------------------------------------------------------

def cmd_ring_demo(spec: ExperimentSpec) -> Report:
    """Odd two-colored rings: no local fixed point, cycling iteration, staggered near-solution."""
    spec.validate()
    rows = []
    for n in spec.ring_sizes():
        g = ring_graph(n)
        try:
            all_vals, _ = directional_fixed_points(g, 2, limit=8)
            colors_only, _ = directional_fixed_points(g, 2, values=[1, 2], limit=8)
            # the all-white assignment is the one trivial fixed point over [0..2]
            nontrivial = all_vals - 1
        except ResourceLimitError:
            all_vals = colors_only = nontrivial = None
        c0 = np.where(np.arange(n) % 2 == 0, 1, 2)
        it = naive_directional_iteration(g, c0, 2, max_sweeps=spec.sweeps or 100,
                                         seed=derive_seed(spec.seed, n, ORDER))
        st = staggered_ring_assignment(g)
        ms = quasi_residual(g, staggered_ring_table(g))
        rows.append({"n": n, "fixed_points_all_values": all_vals, "nontrivial_fixed_points": nontrivial,
                     "fixed_points_colors_only": colors_only, "iteration_converged": it.converged,
                     "cycle_detected": it.cycle_detected, "cycle_length": it.cycle_length,
                     "staggered_violations": directional_violations(g, st, 2),
                     "staggered_min_sum_violations": ms.violated_edges, "staggered_min_sum_l1": ms.total_l1})
    return Report("ring-demo", spec.to_dict(), rows)


# -- counting ----------------------------------------------------------------------

def _count_job(args):
    spec, point, n, inst = args
    m = int(round(spec.alpha * n))
    g = generate_random_graph(n, m, derive_seed(spec.seed, point, inst, GRAPH))
    row = {"n": int(n), "alpha": float(spec.alpha), "instance": inst, "colorings": None,
           "distinct_whitenings": None, "log_count_per_node": None, "clusters": None,
           "method": "", "status": "ok"}
    if n <= spec.exhaustive_max_n:
        row["method"] = "exhaustive"
        try:
            wc = count_whitenings_exhaustive(g, spec.q, cap=spec.colorings_cap)
            row["colorings"] = wc.n_colorings
            row["distinct_whitenings"] = wc.count
            if wc.count:
                col_rows = _all_colorings(g, spec.q, spec.colorings_cap)
                row["clusters"] = coloring_clusters(g, col_rows, spec.q)
        except (ResourceLimitError, InvalidParameterError):
            row["status"] = "budget-exhausted"
    else:
        row["method"] = "sampled"
        seen = set()
        found = 0
        for t in range(spec.sampled_colorings):
            c = find_legal_coloring(g, spec.q, derive_seed(spec.seed, point, inst, COLORING, t),
                                    spec.max_steps, spec.noise)
            if c is None:
                # repeated failures on one graph add cost, not information
                row["status"] = "search-failed" if found == 0 else "ok"
                break
            found += 1
            seen.add(fingerprint(extremal_directional_whitening(g, c, spec.q)))
        row["colorings"] = found
        row["distinct_whitenings"] = len(seen)
    if row["distinct_whitenings"]:
        row["log_count_per_node"] = math.log(row["distinct_whitenings"]) / n
    sp = _run_sp(spec, g, point, inst)
    row.update({"sp_sigma": sp["sigma"], "sp_contradiction": sp["contradiction"], "sp_converged": sp["converged"]})
    return row


def _all_colorings(g, q, cap):
    return enumerate_legal_colorings(g, q, cap=cap).colorings


def cmd_count(spec: ExperimentSpec) -> Report:
    """Distinct extremal whitenings per instance next to the survey estimate of the complexity."""
    spec.validate()
    sizes = spec.sizes()
    jobs = [(spec, p, n, i) for p, n in enumerate(sizes) for i in range(spec.samples)]
    rows = _pool_map(_count_job, jobs)
    summary = {}
    for n in sizes:
        vals = [r["distinct_whitenings"] for r in rows if r["n"] == n and r["distinct_whitenings"] is not None]
        summary[str(n)] = {"mean_distinct_whitenings": float(np.mean(vals)) if vals else None,
                           "instances": len(vals)}
    return Report("count", spec.to_dict(), rows, summary)


# -- quasi-solutions and single survey runs --------------------------------------------

@dataclass
class QuasiOutcome:
    per_node: float
    violated_edges: int
    total_l1: int
    energy: int
    stationary: bool
    cycle_detected: bool
    history: list


def quasi_instance(spec: ExperimentSpec, n: int, *key) -> QuasiOutcome:
    """k-stable start, radius-``b`` cavity table, then synchronous min-sum up to the sweep cap."""
    m = int(round(spec.alpha * n))
    g = generate_random_graph(n, m, derive_seed(spec.seed, *key, GRAPH))
    c0 = random_coloring(n, spec.q, derive_rng(spec.seed, *key, COLORING))
    ks = k_stable_descent(g, spec.q, c0, spec.k, seed=derive_seed(spec.seed, *key, ORDER))
    table = cavity_table(g, ks.coloring, spec.q, spec.b)
    run = run_min_sum(g, table, spec.sweeps)
    last = run.history[-1]
    return QuasiOutcome(last.per_node, last.violated_edges, last.total_l1, ks.energy,
                        run.stationary, run.cycle_detected, run.history)


def _quasi_job(args):
    spec, point, n, inst = args
    return quasi_instance(spec, n, point, inst)


def cmd_quasi(spec: ExperimentSpec) -> Report:
    """Residual of the local equations along one min-sum run (one row per sweep)."""
    spec.validate()
    out = quasi_instance(spec, spec.n, 0, 0)
    rows = [{"sweep": s, "violated_edges": h.violated_edges, "total_l1": h.total_l1, "per_node": h.per_node}
            for s, h in enumerate(out.history)]
    return Report("quasi", spec.to_dict(), rows,
                  {"stationary": out.stationary, "cycle_detected": out.cycle_detected, "energy": out.energy})


def quasi_campaign(spec: ExperimentSpec) -> list[dict]:
    """Final per-node residual over ``samples`` instances at every size in ``n_values``."""
    spec.validate()
    sizes = spec.sizes()
    jobs = [(spec, p, n, i) for p, n in enumerate(sizes) for i in range(spec.samples)]
    res = _pool_map(_quasi_job, jobs)
    rows = []
    for p, n in enumerate(sizes):
        vals = np.array([r.per_node for r in res[p * spec.samples:(p + 1) * spec.samples]])
        rows.append({"n": int(n), "samples": len(vals), "per_node_mean": float(vals.mean()),
                     "per_node_stderr": float(vals.std(ddof=1) / math.sqrt(len(vals))) if len(vals) > 1 else 0.0})
    return rows


def cmd_sp(spec: ExperimentSpec) -> Report:
    spec.validate()
    g = generate_random_graph(spec.n, int(round(spec.alpha * spec.n)), derive_seed(spec.seed, 0, 0, GRAPH))
    r = _run_sp(spec, g, 0, 0)
    row = {"converged": r["converged"], "sweeps": r["sweeps"], "sigma": r["sigma"],
           "contradiction": r["contradiction"], "nontrivial_fraction_of_edges": r["nontrivial"]}
    return Report("sp-single", spec.to_dict(), [row])


RUNNERS = {"sweep": cmd_sweep, "theorem-b": cmd_theorem_b, "theorem-c": cmd_theorem_c,
           "count": cmd_count, "ring-demo": cmd_ring_demo, "quasi": cmd_quasi, "sp-single": cmd_sp}


def run(spec: ExperimentSpec) -> Report:
    return RUNNERS[spec.validate().kind](spec)
