"""Benchmark the hot kernels: numba @njit loops vs the pure-numpy fallback.

Run directly to time the active backend (controlled by AVMIR_PURE_NUMPY):

    python benchmarks/bench_kernels.py

or compare both backends side by side (re-executes itself per backend):

    python benchmarks/bench_kernels.py --compare
"""

import json
import os
import subprocess
import sys
import time

import numpy as np


def bench(fn, *args, repeat=5):
    fn(*args)  # warm-up / JIT compile
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def run_current_backend():
    from avmir import _kernels, imgprep

    rng = np.random.default_rng(7)
    results = {"backend": "numba" if _kernels.NUMBA_ENABLED else "numpy"}

    face = rng.integers(0, 256, size=(128, 128), dtype=np.uint8).astype(np.int32)
    results["lbp_codes 128x128"] = bench(_kernels.lbp_codes, face)

    raster = rng.integers(0, 256, size=(360, 480), dtype=np.uint8)
    results["clahe 480x360 t22"] = bench(_kernels.clahe_u8, raster, 22, 22, 1.0)

    frame = rng.integers(0, 256, size=(360, 480, 3)).astype(np.float64)
    palette = np.array([[255, 0, 255], [255, 0, 0], [255, 255, 0], [0, 255, 0],
                        [0, 255, 255], [0, 0, 255], [0, 0, 0],
                        [255, 255, 255]], dtype=np.float64)
    tmap = imgprep.bayer_matrix(32)
    results["dither 480x360 p8"] = bench(_kernels.dither_indices, frame,
                                         palette, tmap, 64.0)

    supply = rng.random(64)
    supply /= supply.sum()
    demand = np.full(64, 1.0 / 64.0)
    centers = np.stack(np.meshgrid(*[np.arange(4)] * 3, indexing="ij"),
                       axis=-1).reshape(-1, 3) * 64.0 + 32.0
    cost = np.sqrt(((centers[:, None] - centers[None]) ** 2).sum(-1))
    results["emd 64 cells"] = bench(_kernels.emd, supply, demand, cost,
                                    repeat=3)
    return results


def compare():
    rows = {}
    for label, env_value in (("numba", "0"), ("numpy", "1")):
        env = dict(os.environ, AVMIR_PURE_NUMPY=env_value)
        out = subprocess.run([sys.executable, __file__, "--json"], env=env,
                             capture_output=True, text=True, check=True)
        rows[label] = json.loads(out.stdout)

    names = [k for k in rows["numba"] if k != "backend"]
    width = max(len(n) for n in names)
    print(f"{'kernel':<{width}}  {'numba':>10}  {'numpy':>10}  {'speedup':>8}")
    for name in names:
        a = rows["numba"][name]
        b = rows["numpy"][name]
        print(f"{name:<{width}}  {a * 1e3:>8.2f}ms  {b * 1e3:>8.2f}ms  "
              f"{b / a:>7.1f}x")


if __name__ == "__main__":
    if "--compare" in sys.argv:
        compare()
    elif "--json" in sys.argv:
        print(json.dumps(run_current_backend()))
    else:
        results = run_current_backend()
        print(f"backend: {results.pop('backend')}")
        for name, seconds in results.items():
            print(f"  {name:<20} {seconds * 1e3:8.2f} ms")
