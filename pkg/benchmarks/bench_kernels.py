#!/usr/bin/env python3
"""Benchmark the numba kernels against the numpy/LAPACK fallback.

Times the two hot kernels (tridiagonal lowest eigenpair, onsite quadrature)
and an end-to-end mini sweep on both backends.  Run after installing the
package:

    python benchmarks/bench_kernels.py
    python benchmarks/bench_kernels.py --chain 987 --repeat 500
"""

import argparse
import time

import numpy as np

import cavityaa as ca
from cavityaa import kernels


def _time(fn, repeat):
    fn()  # warm-up (includes jit compilation on the numba path)
    start = time.perf_counter()
    for _ in range(repeat):
        fn()
    return (time.perf_counter() - start) / repeat


def bench_eigenpair(L, repeat):
    rng = np.random.RandomState(0)
    d = rng.uniform(-0.05, 0.05, L)
    e = np.full(L - 1, -0.0065)
    rows = []
    for backend in ("numba", "numpy"):
        dt = _time(lambda: kernels.lowest_eigenpair(d, e, backend=backend), repeat)
        rows.append((f"lowest_eigenpair[{backend}]", dt))
    return rows


def bench_quadrature(wb, L, repeat):
    rows = []
    for backend in ("numba", "numpy"):
        dt = _time(lambda: kernels.onsite_quadrature(
            wb.density_weights, wb.grid, L, wb.site_spacing_a, wb.beta,
            -2.0, -1.0, False, backend=backend), repeat)
        rows.append((f"onsite_quadrature[{backend}]", dt))
    return rows


def bench_sweep(wb, spec, L, repeat):
    sweep = ca.SweepSpec(
        axis1=ca.Axis.log("v0", 0.01, 0.12, 20),
        axis2=ca.Axis.linear("C", -3.0, -0.5, 10),
        lattice=spec, L=L, mode="cavity", fixed={"delta_c_prime": 0.0},
        observables=("ipr",), name="bench")
    rows = []
    saved = kernels.NUMBA_ENABLED
    try:
        for backend in ("numba", "numpy"):
            if backend == "numba" and not saved:
                continue  # numba unavailable or disabled via env
            kernels.NUMBA_ENABLED = backend == "numba"
            dt = _time(lambda: ca.run_sweep(sweep, wannier=wb, workers=1),
                       repeat)
            rows.append((f"serial sweep 20x10 [{backend}]", dt))
    finally:
        kernels.NUMBA_ENABLED = saved
    return rows


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--chain", type=int, default=233, help="chain length")
    parser.add_argument("--repeat", type=int, default=200)
    args = parser.parse_args()

    spec = ca.LatticeSpec(depth_W0=-15.0)
    wb = ca.build_wannier(ca.solve_lowest_band(spec), spec)

    print(f"default backend: {kernels.active_backend()}  chain length: {args.chain}")
    rows = []
    rows += bench_eigenpair(args.chain, args.repeat)
    rows += bench_quadrature(wb, args.chain, max(args.repeat // 4, 10))
    rows += bench_sweep(wb, spec, args.chain, max(args.repeat // 100, 2))
    width = max(len(name) for name, _ in rows)
    for name, dt in rows:
        print(f"{name:<{width}}  {dt * 1e3:9.3f} ms")
    print("note: set CAVITYAA_NUMBA=0 to run the whole package on the "
          "numpy/LAPACK path; per-kernel overrides shown above use backend=.")


if __name__ == "__main__":
    main()
