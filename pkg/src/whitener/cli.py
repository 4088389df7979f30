"""Command-line entry point: ``whitener <subcommand> [flags]``.

Exit codes: 0 on success, 2 for invalid parameters or input, 3 when a search
or enumeration budget runs out.  ``WHITENER_WORKERS`` sets the worker pool size.
"""
from __future__ import annotations

import argparse
import sys

from . import __version__
from .coloring import walkcol
from .errors import InvalidArgumentError, InvalidParameterError, ResourceLimitError, UnsupportedError
from .experiments import ExperimentSpec, run
from .graph import generate_random_graph
from .textio import dumps, loads
from .whitening import directional_from_coloring, fingerprint, whiten, whiten_directional

EXIT_OK, EXIT_INVALID, EXIT_BUDGET = 0, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _emit(text: str, path: str | None) -> None:
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _read_instance(path: str):
    if path == "-":
        return loads(sys.stdin.read())
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())


def _edges(args) -> int:
    if args.m is not None:
        return args.m
    return int(round(args.alpha * args.n))


# -- instance-level subcommands ----------------------------------------------------

def cmd_gen(args) -> int:
    g = generate_random_graph(args.n, _edges(args), args.seed)
    _emit(dumps(g, args.q), args.output)
    return EXIT_OK


def cmd_color(args) -> int:
    if args.input:
        g = _read_instance(args.input).graph
    else:
        g = generate_random_graph(args.n, _edges(args), args.seed)
    res = walkcol(g, args.q, args.seed, args.max_steps, args.noise)
    if not res.legal:
        print(f"no legal coloring after {res.steps} steps (energy {res.energy})", file=sys.stderr)
        return EXIT_BUDGET
    _emit(dumps(g, args.q, coloring=res.coloring), args.output)
    return EXIT_OK


def cmd_whiten(args) -> int:
    inst = _read_instance(args.input)
    q = args.q or inst.q
    if inst.coloring is None:
        raise InvalidArgumentError("input carries no 'c' lines")
    if q < 2:
        raise InvalidParameterError("q must be given (header or --q) and be at least 2")
    g = inst.graph
    if args.directional:
        d = whiten_directional(g, directional_from_coloring(g, inst.coloring), q, args.order_seed)
        text = dumps(g, q, coloring=inst.coloring, directional=d)
        digest = fingerprint(d).hexdigest
    else:
        w = whiten(g, inst.coloring, q, args.order_seed)
        text = dumps(g, q, coloring=inst.coloring, whitening=w)
        digest = fingerprint(w).hexdigest
    if args.emit_fingerprint:
        text = f"# fingerprint {digest}\n" + text
    _emit(text, args.output)
    return EXIT_OK


# -- experiment subcommands -------------------------------------------------------

_EXPERIMENT_KIND = {"sweep": "sweep", "theorem-b": "theorem-b", "theorem-c": "theorem-c", "count": "count",
                    "ring-demo": "ring-demo", "quasi": "quasi", "sp": "sp-single"}
_DEFAULT_FORMAT = {"quasi": "csv", "sweep": "csv"}


def _spec_from_args(args) -> ExperimentSpec:
    kind = _EXPERIMENT_KIND[args.command]
    spec = ExperimentSpec(kind=kind)
    for name in ExperimentSpec.__dataclass_fields__:
        if name != "kind" and getattr(args, name, None) is not None:
            setattr(spec, name, getattr(args, name))
    spec.n_values = tuple(spec.n_values)
    return spec


def cmd_experiment(args) -> int:
    spec = _spec_from_args(args)
    report = run(spec)
    fmt = args.format or _DEFAULT_FORMAT.get(args.command, "json")
    _emit(report.dumps(fmt), args.output)
    return EXIT_OK


# -- parser ---------------------------------------------------------------------

def _common(p, q_default=None):
    p.add_argument("--q", type=int, default=q_default, help="number of colors")
    p.add_argument("--seed", type=int, default=None, help="master seed")
    p.add_argument("--output", "-o", default=None, help="output path (default stdout)")


def _size(p, n_default=None):
    p.add_argument("--n", type=int, default=n_default, help="number of nodes")
    p.add_argument("--alpha", type=float, default=None, help="edge density M/N")


def _solver(p):
    p.add_argument("--max-steps", dest="max_steps", type=int, default=None)
    p.add_argument("--noise", type=float, default=None)
    p.add_argument("--coloring-source", dest="coloring_source", choices=("search", "planted"), default=None)


def _sp(p):
    p.add_argument("--init", choices=("uniform-random", "all-white"), default=None)
    p.add_argument("--damping", type=float, default=None)
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--max-sweeps", dest="max_sweeps", type=int, default=None)


def _fmt(p):
    p.add_argument("--format", choices=("csv", "json"), default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="whitener", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen", help="random G(N, M) graph in text format")
    p.add_argument("--n", type=int, required=True)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--m", type=int)
    g.add_argument("--alpha", type=float)
    p.add_argument("--q", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", "-o", default=None)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("color", help="find a legal coloring by local search")
    p.add_argument("--input", "-i", default=None, help="graph file ('-' for stdin); otherwise generate")
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--alpha", type=float, default=2.0)
    p.add_argument("--q", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-steps", dest="max_steps", type=int, default=10**6)
    p.add_argument("--noise", type=float, default=0.3)
    p.add_argument("--output", "-o", default=None)
    p.set_defaults(func=cmd_color)

    p = sub.add_parser("whiten", help="whiten the coloring of an instance file")
    p.add_argument("--input", "-i", required=True)
    p.add_argument("--q", type=int, default=0)
    p.add_argument("--directional", action="store_true")
    p.add_argument("--order-seed", dest="order_seed", type=int, default=None)
    p.add_argument("--emit-fingerprint", dest="emit_fingerprint", action="store_true")
    p.add_argument("--output", "-o", default=None)
    p.set_defaults(func=cmd_whiten)

    p = sub.add_parser("quasi", help="min-sum residual per sweep on an uncolorable instance")
    _common(p, q_default=2)
    _size(p, n_default=200)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--b", type=int, default=None)
    p.add_argument("--sweeps", type=int, default=None)
    _fmt(p)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("sp", help="one survey propagation run and its complexity")
    _common(p)
    _size(p)
    _sp(p)
    _fmt(p)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("count", help="distinct extremal whitenings next to the survey complexity")
    _common(p)
    _size(p, n_default=12)
    p.add_argument("--n-values", dest="n_values", type=int, nargs="+", default=None)
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--cap", dest="colorings_cap", type=int, default=None)
    p.add_argument("--exhaustive-max-n", dest="exhaustive_max_n", type=int, default=None)
    p.add_argument("--sampled-colorings", dest="sampled_colorings", type=int, default=None)
    _solver(p)
    _sp(p)
    _fmt(p)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("sweep", help="phase sweep over a range of edge densities")
    _common(p)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--alpha-min", dest="alpha_min", type=float, required=True)
    p.add_argument("--alpha-max", dest="alpha_max", type=float, required=True)
    p.add_argument("--alpha-step", dest="alpha_step", type=float, default=None)
    p.add_argument("--samples", type=int, default=None)
    _solver(p)
    _sp(p)
    _fmt(p)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("theorem-b", help="whitenings of colorings that differ inside a tree region")
    _common(p)
    _size(p)
    p.add_argument("--L", type=int, default=None, help="radius of the tree ball")
    p.add_argument("--samples", type=int, default=None, help="pairs to test")
    _solver(p)
    _fmt(p)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("theorem-c", help="probability that a local change alters the whitening")
    _common(p)
    p.add_argument("--n-values", dest="n_values", type=int, nargs="+", required=True)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--L", type=int, default=None)
    p.add_argument("--samples", type=int, default=None)
    _solver(p)
    _fmt(p)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("ring-demo", help="odd rings with two colors")
    p.add_argument("--n-values", dest="n_values", type=int, nargs="+", default=None)
    p.add_argument("--sweeps", type=int, default=None, help="iteration cap")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--output", "-o", default=None)
    _fmt(p)
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ResourceLimitError as err:
        print(f"whitener: budget exhausted: {err}", file=sys.stderr)
        return EXIT_BUDGET
    except (InvalidParameterError, InvalidArgumentError, UnsupportedError) as err:
        print(f"whitener: invalid input: {err}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as err:
        print(f"whitener: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
