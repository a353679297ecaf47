"""Compare the numba and numpy component-labelling kernels.

    python benchmarks/bench_connectivity.py --sizes 1000 10000 100000 --repeat 5

Each size is a random sparse graph with ``n`` nodes and ``edges_per_node * n``
edges. Both kernels must agree before timings are reported. The numba timing
excludes the one-off compile, which is reported separately.
"""

from __future__ import annotations

import argparse
import json
import sys
from timeit import default_timer as timer

import numpy as np

from kgerase._kernels import HAS_NUMBA, labels_numba, labels_numpy


def random_edges(n: int, m: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    return rng.integers(0, n, m, dtype=np.int64), rng.integers(0, n, m, dtype=np.int64)


def best_of(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        start = timer()
        fn()
        times.append(timer() - start)
    return min(times)


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[1_000, 10_000, 100_000])
    ap.add_argument("--edges-per-node", type=float, default=1.5)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--json", action="store_true", help="emit JSON instead of a table")
    args = ap.parse_args(argv)

    if not HAS_NUMBA:
        print("numba is not importable; nothing to compare", file=sys.stderr)
        return 1

    rng = np.random.default_rng(args.seed)
    start = timer()
    labels_numba(2, np.array([0]), np.array([1]))
    compile_s = timer() - start

    rows = []
    for n in args.sizes:
        src, dst = random_edges(n, int(args.edges_per_node * n), rng)
        if not np.array_equal(labels_numba(n, src, dst), labels_numpy(n, src, dst)):
            print(f"kernels disagree at n={n}", file=sys.stderr)
            return 1
        t_nb = best_of(lambda: labels_numba(n, src, dst), args.repeat)
        t_np = best_of(lambda: labels_numpy(n, src, dst), args.repeat)
        rows.append({"nodes": n, "edges": len(src), "numba_s": t_nb, "numpy_s": t_np, "speedup": t_np / t_nb})

    if args.json:
        print(json.dumps({"compile_s": compile_s, "rows": rows}, indent=1))
        return 0
    print(f"numba first call (compile or cache load): {compile_s:.3f}s")
    print(f"{'nodes':>9} {'edges':>9} {'numba s':>11} {'numpy s':>11} {'speedup':>8}")
    for r in rows:
        print(f"{r['nodes']:>9} {r['edges']:>9} {r['numba_s']:>11.6f} {r['numpy_s']:>11.6f} {r['speedup']:>8.1f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
