"""Benchmark the hot numerical kernels: numba-jitted vs pure numpy.

Times the Fisher-information accumulation and the Gauss-Newton estimator on a
realistic workload (6 radars, a dozen measurements per fix).  Run with

    python3 benchmarks/bench_kernels.py

The jitted variants are skipped automatically when the package was imported
with HRCN_PURE_NUMPY=1 or numba is unavailable.
"""

import time

import numpy as np

from hrcn import _kernels


def make_workload(rng: np.random.Generator):
    """One composite-measurement problem: stacked range/bearing fixes from
    several radar sites around a constant-velocity target."""
    radar_xy = np.array([[0.0, 0.0], [10000.0, 0.0], [0.0, 10000.0],
                         [10000.0, 10000.0], [5000.0, 0.0], [5000.0, 10000.0]])
    state = np.array([4000.0, 80.0, 5000.0, -60.0])
    t_fuse = 6.0
    times, sites = [], []
    for i in range(len(radar_xy)):
        for t in (2.0 + 0.5 * i, 4.0 + 0.5 * i):
            times.append(t)
            sites.append(radar_xy[i])
    times = np.array(times)
    sites = np.array(sites)
    winv = np.tile([1e-2, 1e4], (len(times), 1))
    y = np.empty((len(times), 2))
    F = np.eye(4)
    for m, (t, site) in enumerate(zip(times, sites)):
        F[0, 1] = F[2, 3] = t - 0.0
        s = F @ state
        dx, dy = s[0] - site[0], s[2] - site[1]
        y[m, 0] = np.hypot(dx, dy) + rng.normal(0, 5.0)
        y[m, 1] = np.arctan2(dy, dx) + rng.normal(0, 1e-3)
    s0 = state + rng.normal(0, [50, 5, 50, 5])
    return state, t_fuse, times, sites, winv, y, s0


def bench(label, fn, args, repeat=2000):
    fn(*args)  # warm-up / JIT compile
    start = time.perf_counter()
    for _ in range(repeat):
        fn(*args)
    elapsed = time.perf_counter() - start
    per_call = elapsed / repeat
    print(f"  {label:<28} {per_call * 1e6:10.1f} us/call")
    return per_call


def main():
    rng = np.random.default_rng(7)
    state, t_fuse, times, sites, winv, y, s0 = make_workload(rng)

    print("Fisher-information accumulation (12 measurements):")
    t_py = bench("pure numpy", _kernels._fim_accumulate_py,
                 (state, t_fuse, times, sites, winv))
    if _kernels.USING_NUMBA:
        t_nb = bench("numba @njit", _kernels.fim_accumulate,
                     (state, t_fuse, times, sites, winv))
        print(f"  speedup: {t_py / t_nb:.1f}x")

    print("Gauss-Newton composite estimate (12 measurements):")
    gn_args = (y, times, sites, winv, t_fuse, s0, 1e-8, 50)
    t_py = bench("pure numpy", _kernels._gauss_newton_py, gn_args)
    if _kernels.USING_NUMBA:
        t_nb = bench("numba @njit", _kernels.gauss_newton, gn_args)
        print(f"  speedup: {t_py / t_nb:.1f}x")

    if not _kernels.USING_NUMBA:
        print("numba path disabled (HRCN_PURE_NUMPY=1 or numba missing); "
              "only the fallback was timed.")


if __name__ == "__main__":
    main()
