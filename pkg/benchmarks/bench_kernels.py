"""Compiled vs pure-numpy timings of the hot kernels.

    python benchmarks/bench_kernels.py [--repeat N]

Compilation happens once before timing.  The pure path calls each kernel's
``.py_func``, which is exactly what runs under GFCOUNT_DISABLE_NUMBA=1.
"""
import argparse
import time

import numpy as np
import scipy.linalg

from gfcount import kernels
from gfcount._jit import NUMBA_ENABLED
from gfcount.generator import DIAGONAL, NSTATE, assemble_generators, flatten
from gfcount.models import build_double_lambda, build_n_type


def _best(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def cases():
    m, d = build_n_type()
    gen = assemble_generators(m, d)
    y0 = flatten(m.initial_density())

    # density matrix to T = 100 us
    rk_args = (gen.A.T.copy(), gen.A1.T.copy(), np.zeros(1), y0[None, :].copy(),
               np.array([100.0]), 1e-9, 1e-12, 1e-3, np.inf, 10_000_000)
    yield "dopri5 N-type, rho to 100 us", kernels.dopri5_chain, rk_args

    # P_n hierarchy with 60 photon numbers
    Y0 = np.zeros((61, NSTATE), dtype=complex)
    Y0[0] = y0
    coup = np.ones(61)
    coup[0] = 0.0
    pn_args = (gen.A0.T.copy(), gen.A1.T.copy(), coup, Y0, np.array([20.0]),
               1e-9, 1e-12, 1e-3, np.inf, 10_000_000)
    yield "dopri5 N-type, P_n hierarchy n<=60", kernels.dopri5_chain, pn_args

    m2, d2 = build_double_lambda()
    g2 = assemble_generators(m2, d2)
    dl_args = (g2.A.T.copy(), g2.A1.T.copy(), np.zeros(1), flatten(m2.initial_density())[None, :],
               np.array([5.0]), 1e-9, 1e-12, 1e-5, np.inf, 10_000_000)
    yield "dopri5 double-Lambda, rho to 5 us", kernels.dopri5_chain, dl_args

    # windowed slope of <N> with the exact window propagator
    dt = (20.0 / m.Gamma3) / 64
    M = np.block([[gen.A, np.zeros_like(gen.A)], [gen.A1, gen.A]])
    P = np.ascontiguousarray(scipy.linalg.expm(M * dt))
    z0 = np.zeros(2 * NSTATE, dtype=complex)
    z0[:NSTATE] = y0
    ws_args = (P, z0, (NSTATE + DIAGONAL).astype(np.int64), 64, dt, 200, 0.0, 0.0, 1000)
    yield "window slopes, 200 windows", kernels.window_slopes, ws_args


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()
    if not NUMBA_ENABLED:
        print("numba disabled (GFCOUNT_DISABLE_NUMBA); both columns run the same code")
    print(f"{'kernel':<38} {'numba [s]':>10} {'numpy [s]':>10} {'speedup':>8}")
    for name, fn, a in cases():
        fn(*a)  # compile
        fast = _best(lambda: fn(*a), args.repeat)
        slow = _best(lambda: fn.py_func(*a), max(1, args.repeat // 3))
        print(f"{name:<38} {fast:10.4f} {slow:10.4f} {slow / fast:8.1f}x")


if __name__ == "__main__":
    main()
