"""Time the numba kernels against their numpy fallbacks.

Usage::

    python3 benchmarks/bench_kernels.py [--repeat 5]

Prints one CSV row per kernel and workload: the best-of-``repeat`` wall time for
each path and the speedup.  The numba timings exclude the first (compiling)
call.  A final row times a short Monte Carlo run end to end, once in this
process and once in a child started with ``MIMO_SDOF_DISABLE_NUMBA=1``, so the
env-flag dispatch is exercised the same way users would hit it.
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from mimo_sdof import kernels


def best_of(fn, repeat, inner):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        for _ in range(inner):
            fn()
        times.append((time.perf_counter() - t0) / inner)
    return min(times)


def workloads(rng):
    blocks = [rng.standard_normal((3, 4)) + 1j * rng.standard_normal((3, 4)) for _ in range(12)]
    h = rng.standard_normal((24, 30)) + 1j * rng.standard_normal((24, 30))
    return [
        ("grid_search", "alignment M=12 N=8 max_tau=32",
         lambda: kernels.grid_search_numba(kernels.ALIGNMENT, 12, 8, 32),
         lambda: kernels.grid_search_numpy(kernels.ALIGNMENT, 12, 8, 32), 3),
        ("grid_search", "decoding M=10 N=12 max_tau=48",
         lambda: kernels.grid_search_numba(kernels.DECODING, 10, 12, 48),
         lambda: kernels.grid_search_numpy(kernels.DECODING, 10, 12, 48), 20),
        ("logdet", "24x30 complex",
         lambda: kernels.logdet_numba(h, 1e4), lambda: kernels.logdet_numpy(h, 1e4), 200),
        ("block_diag", "12 blocks of 3x4",
         lambda: kernels.block_diag_numba(blocks), lambda: kernels.block_diag_numpy(blocks), 500),
    ]


MC_SNIPPET = (
    "import time;from mimo_sdof.phaseplan import AntennaConfig, optimal_plan;"
    "from mimo_sdof.rates import mc_rates;c=AntennaConfig(3,2);p=optimal_plan(c);"
    "mc_rates(c,p,[40.0],2,0);t=time.perf_counter();mc_rates(c,p,[20.0,40.0],200,1);"
    "print(time.perf_counter()-t)"
)


def mc_time(disable):
    env = dict(os.environ, MIMO_SDOF_DISABLE_NUMBA="1" if disable else "0")
    out = subprocess.run([sys.executable, "-c", MC_SNIPPET], env=env, capture_output=True, text=True, check=True)
    return float(out.stdout.strip().splitlines()[-1])


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--skip-mc", action="store_true", help="skip the end-to-end Monte Carlo row")
    args = ap.parse_args(argv)
    if not kernels.HAVE_NUMBA:
        print("numba is not importable; nothing to compare", file=sys.stderr)
        return 1
    print("kernel,workload,numba_s,numpy_s,speedup")
    for name, label, fast, slow, inner in workloads(np.random.default_rng(0)):
        fast()  # compile
        a, b = best_of(fast, args.repeat, inner), best_of(slow, args.repeat, inner)
        print(f"{name},{label},{a:.3e},{b:.3e},{b / a:.2f}")
    if not args.skip_mc:
        a, b = mc_time(False), mc_time(True)
        print(f"mc_rates,(3 2) 200 trials 2 SNRs,{a:.3e},{b:.3e},{b / a:.2f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
