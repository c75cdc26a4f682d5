#!/usr/bin/env python3
"""Time one hybrid epoch's coordinate-target pass on each kernel backend.

    python benchmarks/bench_kernels.py
    python benchmarks/bench_kernels.py --p 1000 --m 100 --repeats 3 --csv bench.csv

Both backends must produce identical targets; the script checks this
before reporting timings.
"""

import argparse
import csv
import statistics
import sys
import time

from hybridcd import kernels
from hybridcd.coord_eval import build_cache
from hybridcd.model import generate_dataset, gradient, init_params
from hybridcd.optimizers import HybridConfig, compute_targets


def time_backend(name, params, cache, grad, config, repeats):
    times, out = [], None
    for _ in range(repeats):
        start = time.perf_counter()
        out = compute_targets(params, cache, grad, config, backend=name)
        times.append(time.perf_counter() - start)
    return statistics.median(times), out


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    parser.add_argument("--n", type=int, default=10)
    parser.add_argument("--p", type=int, default=100)
    parser.add_argument("--m", type=int, default=100)
    parser.add_argument("--dw", type=float, nargs="+", default=[0.1, 0.5, 1.0])
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--repeats", type=int, default=3)
    parser.add_argument("--csv", help="also write the results table here")
    args = parser.parse_args(argv)

    backends = [b.BACKEND for b in kernels.available_backends()]
    if len(backends) < 2:
        print("compiled extension not built; only timing the python backend", file=sys.stderr)

    data = generate_dataset(args.n, args.p, args.seed)
    params = init_params(args.m, args.p, args.seed + 1)
    grad = gradient(params, data)
    rows = []
    for dw in args.dw:
        config = HybridConfig(dw=dw, parallel=False)
        results = {}
        for name in backends:
            cache = build_cache(params, data, name)
            results[name] = time_backend(name, params, cache, grad, config, args.repeats)
        outs = [out for _, out in results.values()]
        identical = all(a.tobytes() == b.tobytes() for o in outs[1:] for a, b in zip(outs[0], o))
        probes = int(outs[0][2].sum())
        row = {"n": args.n, "p": args.p, "m": args.m, "dw": dw, "probes": probes,
               "identical": identical}
        for name, (t, _) in results.items():
            row[f"{name}_s"] = t
        if len(backends) == 2:
            row["speedup"] = results["python"][0] / results["cython"][0]
        rows.append(row)

    header = list(rows[0])
    print("  ".join(f"{h:>12}" for h in header))
    for row in rows:
        print("  ".join(f"{v:>12.4g}" if isinstance(v, float) else f"{str(v):>12}"
                        for v in row.values()))
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=header)
            writer.writeheader()
            writer.writerows(rows)
    return 0 if all(r["identical"] for r in rows) else 1


if __name__ == "__main__":
    sys.exit(main())
