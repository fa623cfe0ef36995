"""Compare the compiled and numpy kernel backends.

Usage::

    python benchmarks/bench_kernels.py [--repeat 5]

Each kernel is timed on identical inputs under every importable backend and
the outputs are checked to agree before the timings are reported.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from polydiff._kernels import available_backends
from polydiff.fields import random_stratified_field, sup_op_norm
from polydiff.shapes import cube, square

TOL = 1e-12


def _cases(rng):
    P = cube()
    f = random_stratified_field(P, seed=1, degree=3, target=0.5)
    exps, coefs = f.polynomial_arrays()
    q = sup_op_norm(f).q
    pts = rng.uniform(0, 1, size=(200, 3))
    far = rng.uniform(-2, 3, size=(50, 3))
    S = square()
    return {
        "poly_eval x200": lambda k: [k.poly_eval(exps, coefs, x) for x in pts],
        "poly_jacobian x200": lambda k: [k.poly_jacobian(exps, coefs, x) for x in pts],
        "dykstra cube x50": lambda k: [k.dykstra(P.A, P.b, x, TOL, 10_000)[0] for x in far],
        "dykstra square x50": lambda k: [k.dykstra(S.A, S.b, x[:2], TOL, 10_000)[0] for x in far],
        "invert_poly x50": lambda k: [
            k.invert_poly(exps, coefs, P.A, P.b, y, q, 1e-10, 200, TOL, 10_000)[0] for y in pts[:50]
        ],
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    backends = available_backends()
    cases = _cases(np.random.default_rng(0))
    names = sorted(backends)
    print(f"{'kernel':<22}" + "".join(f"{n + ' (ms)':>16}" for n in names) + f"{'speedup':>10}")
    for label, run in cases.items():
        outs = {n: np.asarray(run(backends[n])) for n in names}
        ref = outs["python"]
        for n in names:
            if not np.allclose(outs[n], ref, atol=1e-9):
                raise SystemExit(f"{label}: backend {n} disagrees with python")
        times = {
            n: min(timeit.repeat(lambda n=n: run(backends[n]), number=1, repeat=args.repeat)) * 1e3
            for n in names
        }
        speed = f"{times['python'] / times['cython']:>9.1f}x" if "cython" in times else f"{'-':>10}"
        print(f"{label:<22}" + "".join(f"{times[n]:>16.3f}" for n in names) + speed)


if __name__ == "__main__":
    main()
