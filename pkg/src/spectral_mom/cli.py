"""Command-line entry point: train, predict, eval, synth, bounds, experiment.

Exit codes: 0 success, 2 usage, 3 data or I/O, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
import time

from .corpus import corpus_stats, read_corpus, write_corpus
from .errors import DataError, NumericalError
from .evaluation import macro_auc
from .model import SMOOTHING, SpectralModel, load_model, predict_scores, rank_labels, save_model
from .moments import ESTIMATORS, estimate_m2
from .pipeline import TrainConfig, train
from .spectral import truncated_eig
from .synth import (
    BoundInputs,
    GroundTruth,
    convergence_experiment,
    experiment_csv,
    generate_corpus,
    sample_params,
    theorem_bounds,
)

EXIT_USAGE, EXIT_DATA, EXIT_NUMERICAL = 2, 3, 4


class _Fail(Exception):
    def __init__(self, code, stage, exc):
        self.code, self.stage, self.exc = code, stage, exc


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _positive_float(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {v}")
    return v


def _int_list(text):
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _add_solver_flags(p, k_required=True):
    p.add_argument("--k", type=_positive_int, required=k_required, help="number of latent topics")
    p.add_argument("--estimator", choices=ESTIMATORS, default="unbiased")
    p.add_argument("--eig-tol", type=_positive_float, default=1e-10)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--threads", type=_positive_int, default=1)
    p.add_argument("--binarize", action="store_true", help="treat feature values as presence indicators")


def _add_tpm_flags(p):
    p.add_argument("--restarts", type=_positive_int, default=None, help="default 10 + 2K")
    p.add_argument("--power-iters", type=_positive_int, default=100)
    p.add_argument("--tpm-tol", type=_positive_float, default=1e-10)


def build_parser():
    parser = argparse.ArgumentParser(prog="spectral-mom", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="estimate a model from a labelled corpus")
    p.add_argument("--data", required=True)
    p.add_argument("--model", required=True, help="output model file")
    _add_solver_flags(p)
    _add_tpm_flags(p)

    p = sub.add_parser("predict", help="rank labels for every document")
    p.add_argument("--data", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--out", default="-")
    p.add_argument("--top", type=_positive_int, default=None, help="default: all labels")
    p.add_argument("--smoothing", type=_positive_float, default=SMOOTHING)

    p = sub.add_parser("eval", help="macro AUC and precision@m")
    p.add_argument("--data", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--at", type=_int_list, default=[1, 3, 5])
    p.add_argument("--csv", default=None, help="also write the report as CSV")
    p.add_argument("--smoothing", type=_positive_float, default=SMOOTHING)

    p = sub.add_parser("synth", help="sample a ground truth and a corpus from it")
    p.add_argument("--k", type=_positive_int, required=True)
    p.add_argument("--words", type=_positive_int, default=100, help="vocabulary size D")
    p.add_argument("--labels", type=_positive_int, default=50, help="label count L")
    p.add_argument("--n-docs", type=_positive_int, default=50000)
    p.add_argument("--words-per-doc", type=_positive_int, default=20)
    p.add_argument("--labels-per-doc", type=int, default=3)
    p.add_argument("--concentration", type=_positive_float, default=0.3)
    p.add_argument("--prior-concentration", type=_positive_float, default=None)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--truth-seed", type=int, default=None, help="defaults to --seed")
    p.add_argument("--out", required=True, help="corpus file")
    p.add_argument("--truth", required=True, help="ground-truth file (model format)")

    p = sub.add_parser("bounds", help="evaluate the finite-sample error bounds on a corpus")
    p.add_argument("--data", required=True)
    _add_solver_flags(p)
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--c1", type=_positive_float, default=1.0)
    p.add_argument("--c2", type=_positive_float, default=1.0)
    p.add_argument("--model", default=None, help="take pi_max / pi_min from this model")

    p = sub.add_parser("experiment", help="median recovery error against sample size")
    p.add_argument("--truth", required=True)
    p.add_argument("--grid", type=_int_list, required=True)
    p.add_argument("--trials", type=_positive_int, default=5)
    p.add_argument("--words-per-doc", type=_positive_int, default=20)
    p.add_argument("--labels-per-doc", type=int, default=3)
    p.add_argument("--out", default="-")
    _add_solver_flags(p, k_required=False)
    _add_tpm_flags(p)
    return parser


def _open_out(path):
    return sys.stdout if path == "-" else open(path, "w", encoding="utf-8")


def _config(args, k):
    return TrainConfig(
        k=k,
        estimator=args.estimator,
        eig_tol=args.eig_tol,
        tpm_tol=args.tpm_tol,
        restarts=args.restarts,
        power_iters=args.power_iters,
        seed=args.seed,
        threads=args.threads,
    )


def _stage(stage, fn, *a, **kw):
    try:
        return fn(*a, **kw)
    except (DataError, OSError) as exc:
        raise _Fail(EXIT_DATA, stage, exc) from exc
    except NumericalError as exc:
        raise _Fail(EXIT_NUMERICAL, stage, exc) from exc


def cmd_train(args):
    corpus, labels = _stage("read", read_corpus, args.data, True, args.binarize)
    k = args.k
    if corpus.n_docs < k * k:
        print(f"warning: N={corpus.n_docs} < K^2={k * k}; the moment estimates are likely too noisy", file=sys.stderr)
    if k > corpus.n_words:
        raise _Fail(EXIT_USAGE, "train", ValueError(f"--k {k} exceeds vocabulary size {corpus.n_words}"))
    res = _stage("train", train, corpus, labels, _config(args, k))
    _stage("write", save_model, res.model, args.model)
    lam = res.eigs.values
    print(f"passes     {res.passes.count}")
    print(f"documents  {corpus.n_docs}")
    print(f"sigma_1    {res.sigma1:.6g}")
    print(f"sigma_K    {res.sigmaK:.6g}")
    print(f"lambda_min {lam.min():.6g}")
    print(f"lambda_max {lam.max():.6g}")
    for name, sec in res.timings.items():
        print(f"time {name:<22} {sec:.3f}s", file=sys.stderr)
    return 0


def cmd_predict(args):
    model = _stage("read", load_model, args.model)
    corpus, _ = _stage("read", read_corpus, args.data, False, True)
    scores = _stage("predict", predict_scores, model, corpus, args.smoothing)
    out = _open_out(args.out)
    try:
        for i, row in enumerate(scores):
            order = rank_labels(row)
            if args.top is not None:
                order = order[: args.top]
            out.write(str(i))
            for lab in order:
                out.write(f"\t{lab}:{row[lab]:.6g}")
            out.write("\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def cmd_eval(args):
    model = _stage("read", load_model, args.model)
    corpus, labels = _stage("read", read_corpus, args.data, True, True)
    report = _stage("eval", macro_auc, model, corpus, labels, args.at, args.smoothing)
    sys.stdout.write(report.text())
    if args.csv:
        with open(args.csv, "w", encoding="utf-8") as fh:
            fh.write(report.csv())
    return 0


def cmd_synth(args):
    tseed = args.seed if args.truth_seed is None else args.truth_seed
    try:
        truth = sample_params(args.words, args.labels, args.k, args.concentration, tseed, args.prior_concentration)
    except ValueError as exc:
        raise _Fail(EXIT_USAGE, "synth", exc) from exc
    corpus, labels = generate_corpus(truth, args.n_docs, args.words_per_doc, args.labels_per_doc, args.seed)
    _stage("write", write_corpus, args.out, corpus, labels)
    _stage("write", save_model, SpectralModel(O=truth.O, Q=truth.Q, pi=truth.pi, pi_raw=truth.pi), args.truth)
    return 0


def cmd_bounds(args):
    corpus, labels = _stage("read", read_corpus, args.data, True, args.binarize)
    if not 0 < args.delta <= 1:
        raise _Fail(EXIT_USAGE, "bounds", ValueError("--delta must lie in (0, 1]"))
    if args.k > corpus.n_words:
        raise _Fail(EXIT_USAGE, "bounds", ValueError(f"--k {args.k} exceeds vocabulary size {corpus.n_words}"))
    scales = _stage("stats", corpus_stats, corpus, labels)
    m2 = _stage("pass1", estimate_m2, corpus, args.estimator, args.threads)
    eig = _stage("eig", truncated_eig, m2, args.k, tol=args.eig_tol, seed=args.seed)
    pi_max = pi_min = 1.0
    if args.model:
        model = _stage("read", load_model, args.model)
        pi_max, pi_min = float(model.pi.max()), float(model.pi.min())
    b = theorem_bounds(
        BoundInputs(
            sigma1=float(eig.values[0]),
            sigmaK=float(eig.values[-1]),
            scales=scales,
            n=corpus.n_docs,
            delta=args.delta,
            k=args.k,
            c1=args.c1,
            c2=args.c2,
            pi_max=pi_max,
            pi_min=pi_min,
        )
    )
    print(f"N           {corpus.n_docs}")
    print(f"sigma_1     {eig.values[0]:.6g}")
    print(f"sigma_K     {eig.values[-1]:.6g}")
    print(f"d1s         {scales.d1s:.6g}")
    print(f"d2s         {scales.d2s:.6g}")
    print(f"d3s         {scales.d3s:.6g}")
    print(f"dls         {scales.dls:.6g}")
    for line in b.lines():
        print(line)
    return 0


def cmd_experiment(args):
    m = _stage("read", load_model, args.truth)
    truth = GroundTruth(pi=m.pi, O=m.O, Q=m.Q)
    k = args.k or truth.k
    rows = convergence_experiment(
        truth, args.grid, args.trials, args.seed, _config(args, k), args.words_per_doc, args.labels_per_doc
    )
    out = _open_out(args.out)
    try:
        out.write(experiment_csv(rows))
    finally:
        if out is not sys.stdout:
            out.close()
    for r in rows:
        for f in r.failures:
            print(f"N={r.n} {f}", file=sys.stderr)
    return 0


COMMANDS = {
    "train": cmd_train,
    "predict": cmd_predict,
    "eval": cmd_eval,
    "synth": cmd_synth,
    "bounds": cmd_bounds,
    "experiment": cmd_experiment,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse: 0 for --help, 2 for usage errors
        return int(exc.code or 0)
    t0 = time.perf_counter()
    try:
        code = COMMANDS[args.command](args)
    except _Fail as f:
        print(f"error [{f.stage}]: {f.exc}", file=sys.stderr)
        return f.code
    except BrokenPipeError:
        # reader went away (e.g. piped into head); stop quietly
        sys.stdout = None
        return 0
    if args.command == "train":
        print(f"time total {time.perf_counter() - t0:.3f}s", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
