"""Timing comparison of the numba and pure-numpy kernel paths.

Run:  python3 benchmarks/bench_kernels.py [--edges N] [--channels C] [--repeat R]

The same comparison drives the MESHFORMS_NUMBA flag decision: whichever path
wins on your machine, the numerical results agree to float64 roundoff (see
tests/test_kernels.py).
"""

import argparse
import time

import numpy as np

from meshforms import _kernels, build_edge_topology
from meshforms.datasets import DatasetSpec, generate


def timeit(fn, repeat):
    fn()  # warm-up (JIT compilation for the numba path)
    best = np.inf
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--edges", type=int, default=3000)
    parser.add_argument("--channels", type=int, default=32)
    parser.add_argument("--out-channels", type=int, default=64)
    parser.add_argument("--repeat", type=int, default=20)
    args = parser.parse_args()

    if not _kernels.USING_NUMBA:
        print("numba path unavailable (MESHFORMS_NUMBA=0 or numba missing); "
              "benchmarking numpy only")

    rng = np.random.default_rng(0)
    E, C, Co = args.edges, args.channels, args.out_channels
    features = rng.normal(size=(E, C))
    neighbors = rng.integers(0, E, size=(E, 4)).astype(np.int64)
    weights = rng.normal(size=(5, C, Co))
    bias = rng.normal(size=Co)
    grad = rng.normal(size=(E, Co))

    lo, hi = 3 * (E // 4), int(3.3 * (E // 3))
    mesh = generate(DatasetSpec("primitive-zoo", 1, 1, edge_range=(lo, hi), seed=1))[0].mesh
    topo = build_edge_topology(mesh)

    rows = [("kernel", "numpy", "numba", "speedup")]

    def add(name, np_fn, nb_fn):
        t_np = timeit(np_fn, args.repeat)
        if nb_fn is None:
            rows.append((name, f"{t_np * 1e3:.3f} ms", "-", "-"))
            return
        t_nb = timeit(nb_fn, args.repeat)
        rows.append(
            (name, f"{t_np * 1e3:.3f} ms", f"{t_nb * 1e3:.3f} ms", f"{t_np / t_nb:.2f}x")
        )

    add(
        f"conv_forward  E={E} {C}->{Co}",
        lambda: _kernels.conv_forward_numpy(features, neighbors, weights, bias),
        _kernels.conv_forward_numba
        and (lambda: _kernels.conv_forward_numba(features, neighbors, weights, bias)),
    )
    add(
        f"conv_backward E={E} {C}->{Co}",
        lambda: _kernels.conv_backward_numpy(grad, features, neighbors, weights),
        _kernels.conv_backward_numba
        and (lambda: _kernels.conv_backward_numba(grad, features, neighbors, weights)),
    )
    add(
        f"edge_geometry E={topo.edge_count}",
        lambda: _kernels.edge_geometry_numpy(
            mesh.vertices, topo.edges, topo.edge_faces, mesh.faces
        ),
        _kernels.edge_geometry_numba
        and (
            lambda: _kernels.edge_geometry_numba(
                mesh.vertices, topo.edges, topo.edge_faces, mesh.faces
            )
        ),
    )

    widths = [max(len(r[i]) for r in rows) for i in range(4)]
    for row in rows:
        print("  ".join(cell.ljust(w) for cell, w in zip(row, widths)))


if __name__ == "__main__":
    main()
