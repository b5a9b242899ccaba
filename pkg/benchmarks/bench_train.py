"""End-to-end training time per stage under the active backend.

    python3 benchmarks/bench_train.py
    SPECTRAL_MOM_DISABLE_NUMBA=1 python3 benchmarks/bench_train.py

Run both lines to compare backends on the whole pipeline.
"""

import argparse
import time

from spectral_mom import TrainConfig, backend, generate_corpus, sample_params, train


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--docs", type=int, default=200_000)
    ap.add_argument("--words", type=int, default=1000)
    ap.add_argument("--labels", type=int, default=200)
    ap.add_argument("--k", type=int, default=10)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()

    truth = sample_params(args.words, args.labels, args.k, seed=0, prior_concentration=10.0)
    corpus, labels = generate_corpus(truth, args.docs, seed=1)
    cfg = TrainConfig(k=args.k, threads=args.threads)
    t0 = time.perf_counter()
    res = train(corpus, labels, cfg)
    total = time.perf_counter() - t0
    print(f"backend {backend()}  N={args.docs} D={args.words} L={args.labels} K={args.k}")
    for name, secs in res.timings.items():
        print(f"  {name:<22}{secs:8.3f}s")
    print(f"  {'total':<22}{total:8.3f}s")


if __name__ == "__main__":
    main()
