"""Time the numba kernels against their numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--repeat 7] [--end-to-end]

``--end-to-end`` also times a small COPQUAD sweep in two subprocesses, one
with ``COPOPT_DISABLE_NUMBA=1``.
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from copopt import _kernels as kern


def best_of(func, repeat, number):
    return min(timeit.repeat(func, repeat=repeat, number=number)) / number


def kernel_cases(rng):
    for k in (16, 256, 4096):
        xs, ys = rng.standard_normal(k), rng.standard_normal(k)
        yield f"count_wins K={k}", kern.count_wins_numba, kern.count_wins_numpy, (xs, ys)
    rows_x, rows_y = rng.standard_normal((10_000, 50)), rng.standard_normal((10_000, 50))
    yield "count_wins_rows 10000x50", kern.count_wins_rows_numba, kern.count_wins_rows_numpy, (rows_x, rows_y)
    for d in (2, 8):
        m = rng.standard_normal((d, d))
        a = m @ m.T + d * np.eye(d)
        b = rng.standard_normal(d)
        yield f"solve_pivoted d={d}", kern.solve_pivoted_numba, kern.solve_pivoted_numpy, (a, b, 1e-9)


def end_to_end():
    cmd = [sys.executable, "-m", "copopt.cli", "sweep", "--budgets", "2^10..2^16", "--runs", "50", "--quiet"]
    code = "import subprocess,sys,time;t=time.perf_counter();subprocess.run(sys.argv[1:],check=True," \
           "stdout=subprocess.DEVNULL);print(time.perf_counter()-t)"
    for label, flag in (("numba", "0"), ("numpy", "1")):
        env = dict(os.environ, COPOPT_DISABLE_NUMBA=flag)
        out = subprocess.run([sys.executable, "-c", code, *cmd], env=env, check=True,
                             capture_output=True, text=True).stdout
        print(f"{'sweep 2^10..2^16 x50 (' + label + ')':<32} {float(out):>10.2f} s")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=7)
    parser.add_argument("--end-to-end", action="store_true")
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    print(f"{'case':<32} {'numba':>10} {'numpy':>10} {'speedup':>8}")
    for name, fast, slow, call_args in kernel_cases(rng):
        # first calls compile (or load from cache) and must agree
        r_fast, r_slow = fast(*call_args), slow(*call_args)
        if isinstance(r_fast, tuple):
            assert r_fast[1] == r_slow[1] and np.allclose(r_fast[0], r_slow[0])
        else:
            assert np.array_equal(r_fast, r_slow)
        number = 20 if "rows" in name else 200
        t_fast = best_of(lambda: fast(*call_args), args.repeat, number)
        t_slow = best_of(lambda: slow(*call_args), args.repeat, number)
        print(f"{name:<32} {t_fast * 1e6:>8.1f}us {t_slow * 1e6:>8.1f}us {t_slow / t_fast:>7.1f}x")
    if args.end_to_end:
        end_to_end()


if __name__ == "__main__":
    main()
