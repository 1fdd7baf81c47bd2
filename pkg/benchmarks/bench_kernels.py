"""Benchmark the batched root-finding kernel: numba versus numpy fallback.

Runs itself twice in subprocesses, once per implementation (the choice is
fixed at import time by the TRACTDIM_NO_NUMBA environment variable), and
prints a timing comparison.

Usage: python3 benchmarks/bench_kernels.py [--targets N] [--repeats K]
"""

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np


def run_workload(n_targets, repeats):
    from tractdim import _kernels
    from tractdim.poly import Polynomial, tree_pressure

    p = Polynomial.from_string("z^2-1")
    coeffs = np.array(p.coefficients, dtype=complex)
    dcoeffs = np.array(p.derivative_coefficients(), dtype=complex)
    rng = np.random.default_rng(0)
    targets = rng.standard_normal(n_targets) + 1j * rng.standard_normal(
        n_targets)

    _kernels.aberth_batch(coeffs, dcoeffs, targets[:2])  # warm-up / jit
    t0 = time.perf_counter()
    for _ in range(repeats):
        roots, ok = _kernels.aberth_batch(coeffs, dcoeffs, targets)
    kernel_s = (time.perf_counter() - t0) / repeats
    assert bool(np.all(ok))

    t0 = time.perf_counter()
    tree_pressure(p, 1.0, 5.0, 12)
    tree_s = time.perf_counter() - t0

    return {
        "mode": "numpy" if os.environ.get("TRACTDIM_NO_NUMBA") == "1"
        else "numba",
        "aberth_batch_s": kernel_s,
        "tree_pressure_depth12_s": tree_s,
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--targets", type=int, default=4096)
    ap.add_argument("--repeats", type=int, default=10)
    ap.add_argument("--child", action="store_true", help=argparse.SUPPRESS)
    args = ap.parse_args()

    if args.child:
        print(json.dumps(run_workload(args.targets, args.repeats)))
        return

    rows = []
    for no_numba in ("0", "1"):
        env = dict(os.environ, TRACTDIM_NO_NUMBA=no_numba)
        out = subprocess.run(
            [sys.executable, __file__, "--child",
             "--targets", str(args.targets), "--repeats", str(args.repeats)],
            env=env, capture_output=True, text=True, check=True)
        rows.append(json.loads(out.stdout.strip().splitlines()[-1]))

    print("%-8s %18s %26s" % ("mode", "aberth_batch [ms]",
                              "tree_pressure d=12 [ms]"))
    for r in rows:
        print("%-8s %18.3f %26.3f" % (r["mode"], 1e3 * r["aberth_batch_s"],
                                      1e3 * r["tree_pressure_depth12_s"]))
    speedup = rows[1]["aberth_batch_s"] / rows[0]["aberth_batch_s"]
    print("kernel speedup (numba vs numpy): %.2fx" % speedup)


if __name__ == "__main__":
    main()
