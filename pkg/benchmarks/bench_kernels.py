"""Time the numba kernels against their numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--docs 200000] [--k 5 10 20] [--repeat 5]

Prints best-of-``repeat`` wall time per kernel and backend, plus the
speedup and the relative difference between backends. Power iteration is
run with ``tol=0`` for a fixed 100 steps, so on random tensors (no
dominant eigenvector) rounding differences grow and its diff column is
only indicative. The first numba call (JIT compile or cache load) is
excluded.
"""

import argparse
import time

import numpy as np

from spectral_mom import kernels
from spectral_mom.corpus import LabelSet, SparseCorpus, rows_from_tokens


def best_of(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def workloads(n_docs, d, n_labels, k, rng):
    corpus = rows_from_tokens(rng.integers(0, d, size=(n_docs, 20)), d, SparseCorpus)
    labels = rows_from_tokens(rng.integers(0, n_labels, size=(n_docs, 3)), n_labels, LabelSet)
    w = rng.standard_normal((d, k))
    t = kernels.canonical_symmetrize(rng.standard_normal((k, k, k)))
    theta = rng.standard_normal(k)
    theta /= np.linalg.norm(theta)
    cx = (corpus.indptr, corpus.indices, corpus.counts)
    ly = (labels.indptr, labels.indices, labels.counts)
    return {
        "cube_sum": lambda f: f(*cx, w, 0, n_docs),
        "label_projection": lambda f: f(*cx, *ly, w, n_labels, True, 0, n_docs),
        # many short solves, the shape of the restart loop
        "power_iterate": lambda f: [f(t, theta, 100, 0.0) for _ in range(200)][-1][0],
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--docs", type=int, default=200_000)
    ap.add_argument("--words", type=int, default=1000)
    ap.add_argument("--labels", type=int, default=200)
    ap.add_argument("--k", type=int, nargs="+", default=[5, 10, 20])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    if not kernels.NUMBA_KERNELS:
        raise SystemExit("numba is unavailable or disabled (SPECTRAL_MOM_DISABLE_NUMBA); nothing to compare")

    print(f"{'kernel':<18}{'k':>4}{'numpy s':>12}{'numba s':>12}{'speedup':>10}  rel diff")
    for k in args.k:
        rng = np.random.default_rng(args.seed)
        for name, call in workloads(args.docs, args.words, args.labels, k, rng).items():
            f_np, f_nb = kernels.NUMPY_KERNELS[name], kernels.NUMBA_KERNELS[name]
            call(f_nb)  # compile / load from cache
            t_np, r_np = best_of(lambda: call(f_np), args.repeat)
            t_nb, r_nb = best_of(lambda: call(f_nb), args.repeat)
            a, b = np.asarray(r_np), np.asarray(r_nb)
            diff = float(np.max(np.abs(a - b)) / max(np.max(np.abs(a)), 1e-300))
            print(f"{name:<18}{k:>4}{t_np:>12.4f}{t_nb:>12.4f}{t_np / t_nb:>9.1f}x  {diff:.1e}")


if __name__ == "__main__":
    main()
