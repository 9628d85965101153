"""Timing comparison of the compiled and numpy assembly kernels.

Usage: python benchmarks/bench_kernels.py [--n 64] [--degree 2] [--repeat 5]
"""

import argparse
import time

import numpy as np

from oseenhdg._kernels import _pykernels
from oseenhdg.forms import OseenConfig
from oseenhdg.mesh import build_uniform_mesh
from oseenhdg.tables import ElementTables

try:
    from oseenhdg._kernels import _cykernels
except ImportError:
    _cykernels = None


def prepare(n, k):
    mesh = build_uniform_mesh(n)
    tab = ElementTables(mesh, k)
    wfn = OseenConfig(nu=1.0, eta=4.0).wind_fn()
    vol = (
        np.ascontiguousarray(tab.vol_weights),
        np.ascontiguousarray(tab.vol_vals),
        np.ascontiguousarray(tab.vol_grads),
        tab.jinvT,
        np.ascontiguousarray(tab.detj),
        np.ascontiguousarray(tab.wind_volume(wfn)),
    )
    edge = (
        np.ascontiguousarray(tab.edge_weights),
        np.ascontiguousarray(tab.edge_vals),
        np.ascontiguousarray(tab.edge_grads),
        np.ascontiguousarray(tab.facet_vals),
        tab.jinvT,
        np.ascontiguousarray(tab.normals),
        np.ascontiguousarray(tab.edge_lengths),
        np.ascontiguousarray(tab.wind_edges(wfn)),
    )
    return mesh, vol, edge


def time_backend(mod, vol, edge, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        mod.volume_blocks(*vol)
        mod.edge_blocks(*edge)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=64)
    ap.add_argument("--degree", type=int, default=2, choices=[1, 2, 3])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    mesh, vol, edge = prepare(args.n, args.degree)
    print(f"mesh n={args.n} ({mesh.num_elements} elements), degree {args.degree}")
    t_py = time_backend(_pykernels, vol, edge, args.repeat)
    print(f"numpy backend : {t_py * 1e3:9.2f} ms")
    if _cykernels is None:
        print("cython backend: not built")
        return
    t_cy = time_backend(_cykernels, vol, edge, args.repeat)
    print(f"cython backend: {t_cy * 1e3:9.2f} ms   (speedup x{t_py / t_cy:.2f})")


if __name__ == "__main__":
    main()
