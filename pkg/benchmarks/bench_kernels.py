"""Benchmark: compiled relaxation kernel vs the pure-Python fallback.

Usage (from the repository root, after ``python3 setup.py build_ext
--inplace`` if you want the compiled side):

    python3 benchmarks/bench_kernels.py
"""

import time

import numpy as np

from avatarforge._kernels import _pykernels

try:
    from avatarforge._kernels import _cykernels
except ImportError:
    _cykernels = None

CASES = [
    ("128px / 32px hole", 128, 32),
    ("256px / 96px hole", 256, 96),
    ("512px / 192px hole", 512, 192),
]


def make_case(size, hole, seed=0):
    rng = np.random.default_rng(seed)
    values = rng.random((size, size))
    mask = np.zeros((size, size), dtype=np.uint8)
    r0 = (size - hole) // 2
    mask[r0 : r0 + hole, r0 : r0 + hole] = 1
    values[mask == 1] = values[mask == 0].mean()
    return values, mask


def run(kernel, values, mask):
    work = values.copy()
    t0 = time.perf_counter()
    sweeps, _ = kernel.sor_relax(work, mask, 1.9, 1e-6, 10_000)
    return time.perf_counter() - t0, sweeps, work


def main():
    print(f"{'case':<22}{'sweeps':>8}{'pure (s)':>12}{'compiled (s)':>14}{'speedup':>10}{'bitwise':>9}")
    for name, size, hole in CASES:
        values, mask = make_case(size, hole)
        t_pure, sweeps, out_pure = run(_pykernels, values, mask)
        if _cykernels is None:
            print(f"{name:<22}{sweeps:>8}{t_pure:>12.3f}{'n/a':>14}{'n/a':>10}{'n/a':>9}")
            continue
        t_comp, sweeps_c, out_comp = run(_cykernels, values, mask)
        assert sweeps == sweeps_c
        same = "yes" if np.array_equal(out_pure, out_comp) else "NO"
        print(
            f"{name:<22}{sweeps:>8}{t_pure:>12.3f}{t_comp:>14.4f}"
            f"{t_pure / t_comp:>9.0f}x{same:>9}"
        )
    if _cykernels is None:
        print("\ncompiled kernel not built; run: python3 setup.py build_ext --inplace")


if __name__ == "__main__":
    main()
