"""Compiled versus numpy kernels: convolution, associativity scan, cocycle scan.

Usage::

    python3 benchmarks/bench_kernels.py --sizes 4 8 16 --repeat 5
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from groupoid_models import _pykernels, coboundary, make_matrix_groupoid, random_element

try:
    from groupoid_models import _ckernels
except ImportError:  # extension not built
    _ckernels = None


def _time(fn, repeat, number):
    return min(timeit.repeat(fn, repeat=repeat, number=number)) / number


def bench(n, repeat, number, rng):
    G = make_matrix_groupoid(n)
    plan, w = G.plan, G.plan_weights_float
    f, g = random_element(G, rng).coeffs, random_element(G, rng).coeffs
    sig = coboundary(G, np.exp(2j * np.pi * rng.random(G.n_arrows))).values
    sig_plan = np.ascontiguousarray(sig[plan.a, plan.b])
    cases = {
        "convolve": lambda k: k.convolve(plan.x, plan.a, plan.b, w, f, g, plan.n),
        "convolve_twisted": lambda k: k.convolve_twisted(plan.x, plan.a, plan.b, w, sig_plan,
                                                         f, g, plan.n),
        "associativity": lambda k: k.associativity_violation(G.comp),
        "cocycle": lambda k: k.cocycle_defect(G.comp, sig),
    }
    rows = []
    for name, call in cases.items():
        py = _time(lambda: call(_pykernels), repeat, number)
        cy = _time(lambda: call(_ckernels), repeat, number) if _ckernels is not None else float("nan")
        rows.append((n, name, py, cy))
    return rows


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", type=int, nargs="+", default=[4, 8, 16],
                        help="pair groupoid sizes n (n^2 arrows)")
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--number", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)
    rng = np.random.default_rng(args.seed)
    print(f"compiled extension: {'available' if _ckernels is not None else 'missing'}")
    print(f"{'n':>4} {'kernel':<18} {'numpy [ms]':>12} {'cython [ms]':>12} {'speedup':>9}")
    for n in args.sizes:
        for n_, name, py, cy in bench(n, args.repeat, args.number, rng):
            print(f"{n_:>4} {name:<18} {1e3 * py:>12.3f} {1e3 * cy:>12.3f} {py / cy:>8.1f}x")


if __name__ == "__main__":
    main()
