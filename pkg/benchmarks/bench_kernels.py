#!/usr/bin/env python3
"""Compare the compiled and NumPy kernels on sampling and path log-sums.

    python3 benchmarks/bench_kernels.py --count 65536 --length 256

Both backends are fed identical inputs; the script checks that the outputs
agree bit for bit before reporting timings.
"""

from __future__ import annotations

import argparse
import json
import time

import numpy as np

from qsmarkov import families, kernels
from qsmarkov.measure import sample_path_array


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def run(count, length, repeat, seed=0):
    m = families.measure("geometric")
    rng = np.random.default_rng(seed)
    u = rng.random((count, length))
    lam_cdf = np.cumsum(m.lam)
    mats = m.seq.matrices(1, length)
    cdfs = np.cumsum(mats, axis=2)
    table = np.log(mats)

    rows = []
    outputs = {}
    for name in sorted(kernels.BACKENDS):
        t_sample, paths = best_of(lambda: kernels.sample_symbols(u, lam_cdf, cdfs, backend=name), repeat)
        t_sum, sums = best_of(lambda: kernels.path_log_sum(paths, table, 0, backend=name), repeat)
        t_full, _ = best_of(lambda: sample_path_array(m, length, count, seed, backend=name), repeat)
        outputs[name] = (paths, sums)
        rows.append({"backend": name, "sample_symbols_s": t_sample, "path_log_sum_s": t_sum,
                     "sample_path_array_s": t_full})

    names = sorted(outputs)
    agree = all(np.array_equal(outputs[names[0]][0], outputs[n][0]) and
                np.array_equal(outputs[names[0]][1], outputs[n][1]) for n in names[1:])
    return {"count": count, "length": length, "repeat": repeat, "identical_outputs": agree, "results": rows}


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    parser.add_argument("--count", type=int, default=65536)
    parser.add_argument("--length", type=int, default=256)
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--json", action="store_true", help="print JSON only")
    args = parser.parse_args(argv)

    report = run(args.count, args.length, args.repeat)
    if args.json:
        print(json.dumps(report, indent=2))
        return 0
    print(f"{args.count} paths x {args.length} symbols, best of {args.repeat}")
    print(f"{'backend':<8} {'sample':>10} {'log-sum':>10} {'end-to-end':>11}")
    for r in report["results"]:
        print(f"{r['backend']:<8} {r['sample_symbols_s']:>9.4f}s {r['path_log_sum_s']:>9.4f}s "
              f"{r['sample_path_array_s']:>10.4f}s")
    if len(report["results"]) == 2:
        py, cy = (next(r for r in report["results"] if r["backend"] == b) for b in ("python", "cython"))
        print(f"speed-up: sample x{py['sample_symbols_s'] / cy['sample_symbols_s']:.1f}, "
              f"log-sum x{py['path_log_sum_s'] / cy['path_log_sum_s']:.1f}")
    print(f"outputs identical across backends: {report['identical_outputs']}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
