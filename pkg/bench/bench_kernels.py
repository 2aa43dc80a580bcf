#!/usr/bin/env python3
"""Benchmark the hot kernels: compiled extension vs pure numpy backend.

Times the fused energy/gradient evaluation (the inner loop of projected
descent) and the batched shooting integrator (the inner loop of the branch
scan) on representative problem sizes.

Usage: python bench/bench_kernels.py [--repeats N]
"""

import argparse
import time

import numpy as np

from phibump import NFunctionSpec, RadialGrid, default_bump_builder, truncate
from phibump._kernels import _pure, have_compiled
from phibump.radial import _f_arrays

if have_compiled():
    from phibump import _kernels as _fast_dispatch


def timeit(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_energy(spec, n, repeats):
    tent = default_bump_builder((1.0, 3.0, 5.0), (2.0, 4.0))
    tf = truncate(tent, 2)
    grid = RadialGrid.uniform(1.0, 1, n)
    rng = np.random.default_rng(0)
    # smooth profile with moderate slopes (rough data overflows exp_growth)
    u = 3.0 * (1.0 - grid.r**2) * (1.0 + 0.1 * np.sin(6.0 * np.pi * grid.r))
    u = np.clip(u + 0.01 * rng.standard_normal(n).cumsum() / np.sqrt(n), 0.0, 3.0)
    u[-1] = 0.0
    fk = tf.kernel_arrays()
    lam = 32.0
    t_pure = timeit(lambda: _pure.energy_and_gradient(u, lam, grid, spec, fk, True),
                    repeats)
    t_fast = None
    if have_compiled():
        t_fast = timeit(
            lambda: _fast_dispatch.energy_and_gradient(u, lam, grid, spec, fk, True),
            repeats)
    return t_pure, t_fast


def bench_shoot(spec, batch, n_steps, repeats):
    tent = default_bump_builder((1.0, 3.0, 5.0), (2.0, 4.0))
    farr = _f_arrays(tent)
    d = np.linspace(0.0125, 5.0, batch)
    lam = 48.0
    t_pure = timeit(lambda: _pure.shoot_batch(d, lam, 1, 1.0, n_steps, spec, farr),
                    repeats)
    t_fast = None
    if have_compiled():
        t_fast = timeit(
            lambda: _fast_dispatch.shoot_batch(d, lam, 1, 1.0, n_steps, spec, farr),
            repeats)
    return t_pure, t_fast


def report(label, t_pure, t_fast):
    if t_fast is None:
        print(f"{label:44s} pure {1e3 * t_pure:9.3f} ms   (no compiled backend)")
    else:
        print(f"{label:44s} pure {1e3 * t_pure:9.3f} ms   compiled "
              f"{1e3 * t_fast:9.3f} ms   speedup {t_pure / t_fast:6.1f}x")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()
    print(f"compiled backend available: {have_compiled()}")
    specs = [("power(2)", NFunctionSpec.power(2.0)),
             ("exp_growth", NFunctionSpec.exp_growth()),
             ("p_log(1)", NFunctionSpec.p_log(1.0))]
    for name, spec in specs:
        for n in (500, 2000):
            t_pure, t_fast = bench_energy(spec, n, args.repeats)
            report(f"energy+gradient {name:12s} n={n}", t_pure, t_fast)
    for name, spec in specs:
        t_pure, t_fast = bench_shoot(spec, 400, 2000, max(2, args.repeats // 2))
        report(f"shoot batch=400 steps=2000 {name:12s}", t_pure, t_fast)


if __name__ == "__main__":
    main()
