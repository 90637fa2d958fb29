"""Compare the Cython and numpy kernel backends.

Times the two hot kernels directly and then whole chain iterations, running
each backend in a fresh interpreter so the import-time selection applies.

    python3 benchmarks/bench_kernels.py [--iters 3000] [--p 10,20,40]
"""

import argparse
import json
import os
import subprocess
import sys

CHILD = r"""
import json, sys, timeit
import numpy as np
from imapmcmc import kernels
from imapmcmc.synth import random_dag, random_weights, sample_sem
from imapmcmc.sampler import ChainConfig, run_chain

iters, plist = int(sys.argv[1]), [int(x) for x in sys.argv[2].split(",")]
rng = np.random.default_rng(0)
a = rng.normal(size=(200, 12))
corr = np.ascontiguousarray(np.corrcoef(a, rowvar=False))
out = {"backend": kernels.BACKEND}
for size in (0, 3, 8):
    cond = list(range(2, 2 + size))
    reps = 20000
    t = timeit.timeit(lambda: kernels.partial_corr(corr, 0, 1, cond), number=reps)
    out[f"partial_corr|S|={size}"] = t / reps
    idx = list(range(size + 1))
    t = timeit.timeit(lambda: kernels.logdet_sub(corr, idx), number=reps)
    out[f"logdet_sub|idx|={size + 1}"] = t / reps
for p in plist:
    r = np.random.default_rng([1, p])
    dag = random_dag(p, 3, None, r)
    data = sample_sem(random_weights(dag, r), 1000, r)
    tr = run_chain(data, ChainConfig(iters=iters, burn_in=iters, seed=1))
    out[f"chain p={p}"] = tr.timings["mean_iter_seconds"]
print(json.dumps(out))
"""


def run_backend(name, iters, plist):
    env = dict(os.environ, IMAPMCMC_KERNELS=name)
    res = subprocess.run([sys.executable, "-c", CHILD, str(iters), plist], env=env,
                         capture_output=True, text=True, check=True)
    return json.loads(res.stdout)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--iters", type=int, default=3000)
    ap.add_argument("--p", default="10,20,40")
    args = ap.parse_args()
    fast = run_backend("cython", args.iters, args.p)
    slow = run_backend("python", args.iters, args.p)
    if fast["backend"] != "cython":
        print("compiled backend unavailable; only the numpy fallback was timed")
    print(f"{'benchmark':24s} {'cython us':>11s} {'numpy us':>11s} {'speedup':>8s}")
    for key in fast:
        if key == "backend":
            continue
        f, s = fast[key] * 1e6, slow[key] * 1e6
        print(f"{key:24s} {f:11.2f} {s:11.2f} {s / f:8.1f}")


if __name__ == "__main__":
    main()
