"""Time the compiled and pure-numpy kernel backends on the same workloads.

Each backend runs in its own interpreter because the choice is fixed at
import time by CONESPEC_NO_NUMBA.

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import json
import os
import subprocess
import sys

_WORKER = r"""
import json, sys, time
import numpy as np
from conespec import kernels

repeat = int(sys.argv[1])
rng = np.random.default_rng(0)


def banded(n, width):
    lo = np.maximum(np.arange(n) - width // 2, 0).astype(np.int64)
    return lo, rng.uniform(0.2, 1.0, (n, width))


def best_of(fn):
    fn()  # warm-up (includes compilation for numba)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


lo_s, band_s = banded(6, 6)
lo_k, band_k = banded(2001, 41)
x_k = rng.uniform(0, 1, 2001)
x_s = np.ones(6)
logc = -0.01 * np.arange(400.0)
cases = {
    "power_norms small matrix H=5000": lambda: kernels.power_norms(lo_s, band_s, 5000, 0),
    "orbit_lognorms small matrix H=5000": lambda: kernels.orbit_lognorms(lo_s, band_s, x_s, 5000, 0, 0),
    "orbit_lognorms kernel N=2001 H=400": lambda: kernels.orbit_lognorms(lo_k, band_k, x_k, 400, 0, 0),
    "envelope kernel N=2001 R=400 sup": lambda: kernels.envelope(lo_k, band_k, x_k, logc, 0, 0),
    "envelope kernel N=2001 R=400 sum/l2": lambda: kernels.envelope(lo_k, band_k, x_k, logc, 1, 1),
}
print(json.dumps({"backend": kernels.BACKEND, "times": {k: best_of(f) for k, f in cases.items()}}))
"""


def run_backend(no_numba, repeat):
    env = dict(os.environ)
    env["CONESPEC_NO_NUMBA"] = "1" if no_numba else "0"
    out = subprocess.run([sys.executable, "-c", _WORKER, str(repeat)], env=env,
                         capture_output=True, text=True, check=True)
    return json.loads(out.stdout)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    fast = run_backend(False, args.repeat)
    slow = run_backend(True, args.repeat)
    width = max(map(len, fast["times"]))
    print(f"{'workload':<{width}}  {fast['backend']:>10}  {slow['backend']:>10}  speedup")
    for name, t in fast["times"].items():
        s = slow["times"][name]
        print(f"{name:<{width}}  {t * 1e3:8.2f}ms  {s * 1e3:8.2f}ms  {s / t:6.1f}x")


if __name__ == "__main__":
    main()
