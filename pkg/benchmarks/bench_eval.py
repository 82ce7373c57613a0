"""Time the compiled evaluation kernel against the numpy fallback.

Usage: python3 benchmarks/bench_eval.py [--repeat N]

Workloads are real batteries: the coefficient expressions of a twisted
Schouten bracket on the contact fixture and of a jacobiator of random
bivectors on TM x R, compiled once and evaluated at growing numbers of
sample points.
"""
import argparse
import random
import sys
import timeit
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))

from jnalg import _kernel_py
from jnalg.catalog import fixture
from jnalg.jacobi import sj_bracket
from jnalg.program import compile_exprs, execute
from jnalg.sampling import Sampling

from helpers import rand_graded

try:
    from jnalg import _kernel
except ImportError:
    _kernel = None


def workloads():
    doc = fixture("contact_r3")
    rng = random.Random(0)
    A = doc.algebroid
    P, Q = rand_graded(rng, A, 2), rand_graded(rng, A, 2)
    br = sj_bracket(doc.jacobi, P, Q)
    yield "twisted bracket, contact_r3", br.exprs(), A.vars
    J = fixture("tmr_of_jacobi").jacobi
    X, Y, Z = (rand_graded(rng, J.A, 1) for _ in range(3))
    # the terms separately: their sum cancels symbolically
    terms = [sj_bracket(J, U, sj_bracket(J, V, W)) for U, V, W in ((X, Y, Z), (Y, Z, X), (Z, X, Y))]
    yield "jacobiator terms, tmr_of_jacobi", [e for t in terms for e in t.exprs()], J.A.vars


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    kernels = [("numpy", _kernel_py.run_program)]
    if _kernel is not None:
        kernels.insert(0, ("cython", _kernel.run_program))
    else:
        print("compiled kernel not built; timing the numpy fallback only")
    print(f"{'workload':34} {'regs':>6} {'points':>7} " + " ".join(f"{k:>12}" for k, _ in kernels) + "  speedup")
    for label, exprs, vars in workloads():
        prog = compile_exprs(exprs, vars)
        for npts in (25, 1000, 20000):
            pts = Sampling(points=npts).sample(vars)
            times = []
            ref = None
            for _, run in kernels:
                vals = execute(prog, pts, kernel=run)
                if ref is None:
                    ref = vals
                elif not np.allclose(vals, ref, rtol=1e-12, atol=1e-12):
                    raise SystemExit(f"kernels disagree on {label}")
                t = min(timeit.repeat(lambda: execute(prog, pts, kernel=run), number=1, repeat=args.repeat))
                times.append(t)
            speed = f"{times[-1] / times[0]:7.1f}x" if len(times) == 2 else ""
            cols = " ".join(f"{t * 1e3:10.3f}ms" for t in times)
            print(f"{label:34} {prog.size:6d} {npts:7d} {cols}  {speed}")


if __name__ == "__main__":
    main()
