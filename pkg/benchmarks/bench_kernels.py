"""Compare the compiled kernels with the numpy fallback.

Usage::

    python3 benchmarks/bench_kernels.py            # kernel timings + one replication per backend
    python3 benchmarks/bench_kernels.py --quick    # smaller batches

Kernel timings call both implementations directly on identical inputs and
check they agree. The replication timing runs the study pipeline in a
subprocess with ``QUICKCOUNT_BACKEND`` set, so the whole package sees the
chosen backend.
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from quickcount import _fallback

try:
    from quickcount import _kernels
except ImportError:
    _kernels = None

REPLICATION = """
import time
from quickcount.harness import StudyConfig, SyntheticFrameSpec, generate_frame, run_replication
from quickcount.kernels import BACKEND
from quickcount.sampling import allocate_proportional
spec = SyntheticFrameSpec(n_strata=20, stations_per_stratum=50, voters=(500, 1000), shock_sd=0.04,
                          exposure=0.5, counts="multinomial")
frame = generate_frame(spec, 7)
alloc = allocate_proportional(frame, 200)
cfg = StudyConfig(sample_size=200, synthetic=spec, frame_seed=7, delta=0.1, reps=100, draws={m},
                  baseline_draws={m}, seed=5)
run_replication(frame, alloc, cfg, 0)
t = time.perf_counter()
for r in range({n}):
    run_replication(frame, alloc, cfg, r)
print(BACKEND, (time.perf_counter() - t) / {n})
"""


def best_of(fn, repeat=5):
    t = timeit.Timer(fn)
    n, _ = t.autorange()
    return min(t.repeat(repeat, n)) / n


def cases(size):
    rng = np.random.default_rng(0)
    u = rng.random(size)
    xs = np.sort(rng.gamma(2.0, size=size))
    z = rng.standard_normal(size)
    k = int(0.95 * size)
    return [
        ("norm_cdf", lambda impl: impl.norm_cdf(z)),
        ("norm_ppf", lambda impl: impl.norm_ppf(u)),
        ("betainc (30, 70)", lambda impl: impl.betainc(30.0, 70.0, u)),
        ("beta_ppf (80.5, 120.5)", lambda impl: impl.beta_ppf(80.5, 120.5, u, 1e-13)),
        ("beta_ppf (0.7, 3.0)", lambda impl: impl.beta_ppf(0.7, 3.0, u, 1e-13)),
        ("beta_ppf sorted (2000, 5000)", lambda impl: impl.beta_ppf_sorted(2000.0, 5000.0, np.sort(u), 1e-13)),
        ("minimal_window", lambda impl: impl.minimal_window(xs, k)),
    ]


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--quick", action="store_true")
    p.add_argument("--size", type=int, default=None, help="batch size per kernel call")
    p.add_argument("--reps", type=int, default=None, help="replications timed per backend")
    args = p.parse_args(argv)
    size = args.size or (2000 if args.quick else 20_000)
    reps = args.reps or (5 if args.quick else 20)

    if _kernels is None:
        print("compiled extension not built; only the fallback can run", file=sys.stderr)
    print(f"batch size {size}\n")
    print("| kernel | fallback (ms) | compiled (ms) | speed-up |")
    print("|---|---:|---:|---:|")
    for name, call in cases(size):
        tf = best_of(lambda: call(_fallback)) * 1e3
        if _kernels is None:
            print(f"| {name} | {tf:.3f} | | |")
            continue
        a, b = np.asarray(call(_fallback), dtype=float), np.asarray(call(_kernels), dtype=float)
        if not np.allclose(a, b, rtol=1e-9, atol=1e-12):
            raise SystemExit(f"backends disagree on {name}")
        tc = best_of(lambda: call(_kernels)) * 1e3
        print(f"| {name} | {tf:.3f} | {tc:.3f} | {tf / tc:.1f}x |")

    print(f"\none study replication (20 strata, c = 200, m = T = 1000), mean of {reps}:\n")
    backends = ["python"] + (["compiled"] if _kernels is not None else [])
    for backend in backends:
        env = dict(os.environ, QUICKCOUNT_BACKEND=backend)
        out = subprocess.run([sys.executable, "-c", REPLICATION.format(m=1000, n=reps)], env=env,
                             capture_output=True, text=True, check=True)
        got, secs = out.stdout.split()
        print(f"  {got:8s} {1e3 * float(secs):8.1f} ms")


if __name__ == "__main__":
    main()
