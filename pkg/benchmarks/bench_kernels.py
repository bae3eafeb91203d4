"""Compare the numba kernels against their numpy fallbacks.

Run: python benchmarks/bench_kernels.py --repeats 20
"""
import argparse
import time

import numpy as np

from modof import _kernels


def best_ms(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, (time.perf_counter() - t0) * 1000.0)
    return best


def main(argv=None):
    p = argparse.ArgumentParser()
    p.add_argument("--repeats", type=int, default=20)
    p.add_argument("--rows", type=int, default=4000, help="message rows for scatter-add")
    p.add_argument("--hidden", type=int, default=256)
    p.add_argument("--mols", type=int, default=500, help="fingerprints per side for tanimoto")
    args = p.parse_args(argv)
    rng = np.random.default_rng(0)

    values = rng.standard_normal((args.rows, args.hidden))
    index = rng.integers(0, args.rows // 2, size=args.rows)
    fps = rng.integers(0, 2**63, size=(args.mols, 32), dtype=np.uint64) & rng.integers(
        0, 2**63, size=(args.mols, 32), dtype=np.uint64)

    cases = [
        ("scatter_add_rows", lambda u: _kernels.scatter_add_rows(values, index, args.rows // 2, use_numba=u)),
        ("tanimoto_matrix", lambda u: _kernels.tanimoto_matrix(fps, fps, use_numba=u)),
    ]
    print(f"numba available: {_kernels.HAVE_NUMBA}")
    for name, run in cases:
        ref = run(False)
        if _kernels.HAVE_NUMBA:
            got = run(True)  # also compiles
            assert np.allclose(got, ref, rtol=0, atol=1e-9), name
        t_np = best_ms(lambda: run(False), args.repeats)
        line = f"{name:18s} numpy {t_np:9.3f} ms"
        if _kernels.HAVE_NUMBA:
            t_nb = best_ms(lambda: run(True), args.repeats)
            line += f"   numba {t_nb:9.3f} ms   speedup {t_np / max(t_nb, 1e-9):6.2f}x"
        print(line)


if __name__ == "__main__":
    main()
