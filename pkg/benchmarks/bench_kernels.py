"""Time the compiled kernels against the numpy fallback on one sample.

    python3 benchmarks/bench_kernels.py --box 40 --repeat 3
"""

import argparse
import time

import numpy as np

from rggfpp import kernels
from rggfpp.fpp import PassageSpec, assign_passage_times
from rggfpp.geograph import CellGrid, _neighbor_offsets, build_rgg
from rggfpp.point_process import Box, sample_ppp


def _best(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--box", type=float, default=40.0, help="half-width of the square window")
    ap.add_argument("--r", type=float, default=2.0)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--saw-steps", type=int, default=4)
    args = ap.parse_args(argv)

    ps = sample_ppp(1.0, Box(2, args.box), 1)
    g = build_rgg(ps, args.r)
    w = assign_passage_times(g, PassageSpec.exponential(), 2)[g.edge_of]
    grid = CellGrid.build(ps.points, ps.box.lower, 2 * ps.box.L, args.r)
    offsets = _neighbor_offsets(2)
    empty = np.empty(0, dtype=np.int64)
    src = int(g.giant_vertices[0])

    cases = {
        "grid_pairs": lambda m: m.grid_pairs(grid.points, grid.cells, grid.cell_start, grid.shape, offsets, args.r),
        "dijkstra": lambda m: m.dijkstra(g.indptr, g.indices, w, src, empty, np.inf),
        f"count_saw(n={args.saw_steps})": lambda m: m.count_saw(g.indptr, g.indices, src, args.saw_steps),
    }
    mods = {"python": kernels.backend("python")}
    try:
        mods["cython"] = kernels.backend("cython")
    except ImportError:
        print("compiled extension not built; timing the fallback only")

    print(f"{len(ps)} points, {len(g.edges)} edges")
    print(f"{'kernel':<16}" + "".join(f"{name:>12}" for name in mods) + f"{'speedup':>10}")
    for label, call in cases.items():
        t = {name: _best(lambda: call(m), args.repeat) for name, m in mods.items()}
        speed = f"{t['python'] / t['cython']:>9.1f}x" if "cython" in t else ""
        print(f"{label:<16}" + "".join(f"{t[n]:>11.4f}s" for n in mods) + speed)


if __name__ == "__main__":
    main()
