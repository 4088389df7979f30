"""Survey propagation complexity of random 3-coloring instances across edge densities.

Run ``python demos/sp_complexity.py --n 2000``.  Each line gives the fraction
of non-trivial surveys and the complexity per node at one density; the
complexity turns negative somewhat above density 2.3.
"""
from __future__ import annotations

import argparse

import numpy as np

from whitener.errors import ContradictionError
from whitener.graph import generate_random_graph
from whitener.survey import complexity, nontrivial_fraction, sp_run


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--alphas", type=float, nargs="+", default=[1.8, 2.0, 2.2, 2.3, 2.35, 2.4, 2.5])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-sweeps", type=int, default=2000)
    args = p.parse_args()

    for k, alpha in enumerate(args.alphas):
        g = generate_random_graph(args.n, int(round(alpha * args.n)), args.seed + k)
        try:
            res = sp_run(g, 3, seed=args.seed + k, max_sweeps=args.max_sweeps)
        except ContradictionError:
            print(f"alpha {alpha:.2f}: contradiction")
            continue
        sigma = complexity(g, res.messages).sigma
        print(f"alpha {alpha:.2f}: converged {res.converged} after {res.state.sweep_count} sweeps, "
              f"non-trivial {nontrivial_fraction(res.messages):.3f}, sigma "
              f"{'n/a' if sigma is None else f'{sigma:+.4f}'}")


if __name__ == "__main__":
    np.set_printoptions(precision=4)
    main()
