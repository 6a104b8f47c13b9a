"""Compare the numba and pure-numpy Hermite-function kernels.

    python3 benchmarks/bench_kernels.py            # sizes used by the cat / interference runs
    python3 benchmarks/bench_kernels.py --quick    # small sizes, for a smoke test

Prints best-of-N wall times and the max abs difference between the two paths.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from nvcat import _kernels as K

CASES = {
    # name: (points, levels)
    "to_grid fig5 (2^16 pts, 260 levels)": (2**16, 260),
    "to_grid fig3 (2048 pts, 550 levels)": (2048, 550),
    "frame change table (8000 pts, 550 levels)": (8000, 550),
}
QUICK = {"small (4096 pts, 64 levels)": (4096, 64)}


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def run(cases, repeat):
    rng = np.random.default_rng(0)
    rows = []
    for name, (npts, nlev) in cases.items():
        x = np.linspace(-1.2 * np.sqrt(2 * nlev), 1.2 * np.sqrt(2 * nlev), npts)
        c = rng.normal(size=nlev) + 1j * rng.normal(size=nlev)
        c /= np.linalg.norm(c)
        if K.HAVE_NUMBA:  # compile outside the timed region
            K.hermite_sum(x[:4], c[:4])
            K.hermite_table(x[:4], 3)
        t_sum_nb = best_of(lambda: K.hermite_sum(x, c), repeat) if K.HAVE_NUMBA else float("nan")
        t_sum_np = best_of(lambda: K.hermite_sum_numpy(x, c), repeat)
        t_tab_nb = best_of(lambda: K.hermite_table(x, nlev - 1), repeat) if K.HAVE_NUMBA else float("nan")
        t_tab_np = best_of(lambda: K.hermite_table_numpy(x, nlev - 1), repeat)
        diff = float(np.max(np.abs(K.hermite_sum(x, c) - K.hermite_sum_numpy(x, c))))
        rows.append((name, t_sum_nb, t_sum_np, t_tab_nb, t_tab_np, diff))
    return rows


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--quick", action="store_true", help="small sizes only")
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    rows = run(QUICK if args.quick else CASES, args.repeat)
    print(f"numba available: {K.HAVE_NUMBA}")
    print(f"{'case':45s} {'sum nb':>9s} {'sum np':>9s} {'x':>6s} {'table nb':>9s} {'table np':>9s} {'x':>6s} {'max|diff|':>10s}")
    for name, snb, snp, tnb, tnp, diff in rows:
        print(f"{name:45s} {snb * 1e3:8.2f}m {snp * 1e3:8.2f}m {snp / snb:6.1f} {tnb * 1e3:8.2f}m {tnp * 1e3:8.2f}m {tnp / tnb:6.1f} {diff:10.1e}")
    return rows


if __name__ == "__main__":
    main()
