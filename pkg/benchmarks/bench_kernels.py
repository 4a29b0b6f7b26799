"""Compare the compiled and pure-numpy inner solvers.

Times ``pr_prox`` and ``quad_composite_prox`` on desk-sized inputs and
checks that both backends return the same iterate.

    python benchmarks/bench_kernels.py --repeats 50
"""

import argparse
import time

import numpy as np

from asyncadmm import kernels
from asyncadmm.problems import generate_phase_retrieval, generate_sparse_pca


def _time(fn, repeats):
    fn()
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def cases(seed):
    rng = np.random.default_rng(seed)
    pr = generate_phase_retrieval(seed, 1, 8, 30)[0]
    c = rng.standard_normal(pr.dim)
    yield "pr_prox (d=8, m=30, weight=20)", lambda k: k.pr_prox(
        pr._A, pr._B, pr.measurements, c, 20.0, 1e-9, 500)

    sp = generate_sparse_pca(seed, 1, 50, 100, lam=10.0)[0]
    lo, hi = sp._eig
    w = 2.05 * 2.0 * hi
    H = np.ascontiguousarray(w * np.eye(50) - 2.0 * sp._gram)
    h = w * rng.standard_normal(50)
    step = 1.0 / (w - 2.0 * lo)
    yield "quad_composite_prox (d=50, m=100)", lambda k: k.quad_composite_prox(
        H, h, float(sp.l1_weight), float(sp.radius), step, h / w, 1e-10, 10000)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=30)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    compiled = kernels.compiled_backend()
    if compiled is None:
        print("compiled extension not built; only the numpy backend is available")
    print(f"{'kernel':42s} {'numpy [ms]':>11s} {'cython [ms]':>12s} {'speedup':>8s} {'max |diff|':>11s}")
    for name, call in cases(args.seed):
        t_py = _time(lambda: call(kernels.python_backend), args.repeats)
        if compiled is None:
            print(f"{name:42s} {1e3 * t_py:11.3f} {'-':>12s} {'-':>8s} {'-':>11s}")
            continue
        t_c = _time(lambda: call(compiled), args.repeats)
        diff = float(np.max(np.abs(call(kernels.python_backend)[0] - call(compiled)[0])))
        print(f"{name:42s} {1e3 * t_py:11.3f} {1e3 * t_c:12.3f} {t_py / t_c:8.2f} {diff:11.2e}")


if __name__ == "__main__":
    main()
