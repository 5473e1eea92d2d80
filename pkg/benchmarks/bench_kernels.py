"""Compare the compiled and numpy kernel backends.

Times each per-face kernel on Clifford-torus meshes of growing size, then
times the full analysis pipeline stage by stage to show where the wall clock
goes.

    python benchmarks/bench_kernels.py [--sizes 64 128 256] [--repeat 5]
"""

import argparse
import time
import warnings

import numpy as np

from killing_index import _pycore, fem, generators, hodge
from killing_index.geometry import face_frames

try:
    from killing_index import _core
except ImportError:  # extension not built
    _core = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def kernel_inputs(n):
    out = generators.clifford_torus(n, n)
    mesh = out.mesh
    pos = mesh.lifted_faces()
    frames = face_frames(mesh, out.ambient)
    rhs = np.random.default_rng(0).standard_normal((mesh.num_faces, 3, 6))
    vals = np.random.default_rng(1).standard_normal((mesh.num_faces, 3, 4))
    return mesh, pos, frames.layout, rhs, vals


def bench_kernels(sizes, repeat):
    backends = [("python", _pycore)] + ([("compiled", _core)] if _core is not None else [])
    print(f"{'faces':>8} {'kernel':<16}" + "".join(f"{name:>12}" for name, _ in backends) + f"{'speedup':>10}")
    for n in sizes:
        mesh, pos, layout, rhs, vals = kernel_inputs(n)
        cases = {
            "triangle_layout": lambda m: m.triangle_layout(pos),
            "cotan_weights": lambda m: m.cotan_weights(layout),
            "edge_lstsq": lambda m: m.edge_lstsq(layout, rhs),
            "vertex_scatter": lambda m: m.vertex_scatter(mesh.faces, vals, mesh.num_vertices),
        }
        for name, call in cases.items():
            t = [best_of(lambda m=m: call(m), repeat) for _, m in backends]
            speed = f"{t[0] / t[1]:9.1f}x" if len(t) > 1 else ""
            print(f"{mesh.num_faces:>8} {name:<16}" + "".join(f"{x * 1e3:10.2f}ms" for x in t) + speed)


def bench_pipeline(n):
    stages = {}
    t0 = time.perf_counter()
    out = generators.clifford_torus(n, n)
    geom = out.geometry()
    stages["geometry"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        ops = fem.assemble_jacobi_operators(out.mesh, geom, out.ambient)
    stages["assembly"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    fem.jacobi_spectrum(ops, 12, 0.3)
    stages["jacobi eigensolve"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    hodge.harmonic_basis(out.mesh, hodge.dec_operators(out.mesh, geom), 1, geom=geom)
    stages["harmonic basis"] = time.perf_counter() - t0
    total = sum(stages.values())
    print(f"\npipeline on Clifford {n}x{n} ({out.mesh.num_vertices} vertices)")
    for name, t in stages.items():
        print(f"  {name:<18} {t:8.3f}s {100 * t / total:5.1f}%")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[64, 128, 256])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--pipeline-size", type=int, default=64)
    args = ap.parse_args()
    if _core is None:
        print("compiled extension not available; timing the numpy backend only")
    bench_kernels(args.sizes, args.repeat)
    bench_pipeline(args.pipeline_size)


if __name__ == "__main__":
    main()
