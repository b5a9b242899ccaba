"""Synthetic ground truth, corpus generation, alignment and the error-bound calculator."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .corpus import LabelSet, MomentScales, SparseCorpus, corpus_stats, rows_from_tokens
from .errors import DimensionMismatchError, SpectralMomError

MAX_COLUMN_CORRELATION = 0.95


@dataclass(frozen=True)
class GroundTruth:
    pi: np.ndarray
    O: np.ndarray
    Q: np.ndarray

    @property
    def k(self) -> int:
        return self.pi.size

    def moment2(self) -> np.ndarray:
        """Population ``M2 = sum_k pi_k mu_k mu_k^T``."""
        return (self.O * self.pi) @ self.O.T


def _max_column_correlation(o):
    if o.shape[1] < 2:
        return -1.0
    c = np.corrcoef(o.T)
    np.fill_diagonal(c, -1.0)
    return float(np.nanmax(c))


def sample_params(
    d: int,
    l: int,
    k: int,
    concentration: float = 0.3,
    seed: int = 0,
    prior_concentration: float | None = None,
    max_tries: int = 1000,
) -> GroundTruth:
    """Draw ``pi`` and every column of ``O`` and ``Q`` from a symmetric Dirichlet.

    ``prior_concentration`` overrides the Dirichlet parameter of ``pi`` only;
    by default all three share ``concentration``. Topic matrices whose
    columns correlate above 0.95 are redrawn.
    """
    if k > min(d, l):
        raise ValueError(f"k={k} must not exceed min(d, l)={min(d, l)}")
    if k < 1 or concentration <= 0:
        raise ValueError("need k >= 1 and a positive concentration")
    rng = np.random.default_rng(seed)
    a_pi = concentration if prior_concentration is None else prior_concentration
    pi = np.ones(1) if k == 1 else rng.dirichlet(np.full(k, a_pi))
    for _ in range(max_tries):
        o = rng.dirichlet(np.full(d, concentration), size=k).T
        if _max_column_correlation(o) <= MAX_COLUMN_CORRELATION:
            break
    else:
        raise SpectralMomError("could not draw weakly correlated topic columns")
    q = rng.dirichlet(np.full(l, concentration), size=k).T
    return GroundTruth(pi=pi, O=o, Q=q)


def _draw_rows(rng, dist, topics, per_doc, cls, n_cols):
    n = topics.size
    tokens = np.empty((n, per_doc), dtype=np.int64)
    for k in range(dist.shape[1]):
        sel = np.flatnonzero(topics == k)
        if sel.size and per_doc:
            tokens[sel] = rng.choice(n_cols, size=(sel.size, per_doc), p=dist[:, k])
    return rows_from_tokens(tokens, n_cols, cls)


def generate_corpus(
    truth: GroundTruth,
    n_docs: int,
    words_per_doc: int = 20,
    labels_per_doc: int = 3,
    seed: int = 0,
    return_topics: bool = False,
):
    """Sample documents: one topic per document, then i.i.d. words and labels.

    Rows hold the distinct indices; ``counts`` keeps how often each was drawn.
    """
    if words_per_doc < 1:
        raise ValueError("words_per_doc must be >= 1")
    rng = np.random.default_rng(seed)
    topics = rng.choice(truth.k, size=n_docs, p=truth.pi)
    corpus = _draw_rows(rng, truth.O, topics, words_per_doc, SparseCorpus, truth.O.shape[0])
    labels = _draw_rows(rng, truth.Q, topics, labels_per_doc, LabelSet, truth.Q.shape[0])
    if return_topics:
        return corpus, labels, topics
    return corpus, labels


@dataclass(frozen=True)
class RecoveryError:
    mu_errs: np.ndarray
    gamma_errs: np.ndarray
    pi_errs: np.ndarray  # against the renormalised prior
    pi_raw_errs: np.ndarray  # against lambda_k ** -2 as estimated
    permutation: np.ndarray  # truth topic k <-> model topic permutation[k]


def align_and_error(truth: GroundTruth, model) -> RecoveryError:
    """Match model topics to truth by optimal assignment on column distances of ``O``."""
    if truth.O.shape != model.O.shape or truth.Q.shape != model.Q.shape:
        raise DimensionMismatchError(
            f"truth O{truth.O.shape}/Q{truth.Q.shape} vs model O{model.O.shape}/Q{model.Q.shape}"
        )
    cost = np.linalg.norm(truth.O[:, :, None] - model.O[:, None, :], axis=0)
    rows, perm = linear_sum_assignment(cost)
    perm = perm[np.argsort(rows)]
    return RecoveryError(
        mu_errs=cost[np.arange(truth.k), perm],
        gamma_errs=np.linalg.norm(truth.Q - model.Q[:, perm], axis=0),
        pi_errs=np.abs(truth.pi - model.pi[perm]),
        pi_raw_errs=np.abs(truth.pi - model.pi_raw[perm]),
        permutation=perm,
    )


# --------------------------------------------------------------------------
# finite-sample bounds


@dataclass(frozen=True)
class BoundInputs:
    sigma1: float
    sigmaK: float
    scales: MomentScales
    n: int
    delta: float = 0.05
    k: int = 1
    c1: float = 1.0
    c2: float = 1.0
    pi_max: float = 1.0
    pi_min: float = 1.0

    def __post_init__(self):
        if not 0 < self.sigmaK <= self.sigma1:
            raise ValueError("need 0 < sigmaK <= sigma1")
        if not 0 < self.delta <= 1:
            raise ValueError("delta must lie in (0, 1]")
        if self.n < 1:
            raise ValueError("n must be >= 1")


@dataclass(frozen=True)
class TheoremBounds:
    mu_bound: float
    gamma_bound: float
    pi_bound: float
    n1: float
    n2: float  # implied constant taken as 1
    n3: float  # implied constant taken as 1
    eps1: float
    eps2: float

    def lines(self):
        return [
            f"eps1        {self.eps1:.6g}",
            f"eps2        {self.eps2:.6g}",
            f"mu_bound    {self.mu_bound:.6g}",
            f"gamma_bound {self.gamma_bound:.6g}",
            f"pi_bound    {self.pi_bound:.6g}",
            f"n1          {self.n1:.6g}",
            f"n2          {self.n2:.6g}  (up to constants)",
            f"n3          {self.n3:.6g}  (up to constants)",
        ]


def confidence_terms(delta: float) -> tuple[float, float]:
    eps1 = 1.0 + math.sqrt(math.log(1.0 / delta) / 2.0)
    eps2 = 1.0 + math.sqrt(math.log(2.0 / delta) / 2.0)
    return eps1, eps2


def theorem_bounds(b: BoundInputs) -> TheoremBounds:
    s1, sk = b.sigma1, b.sigmaK
    d2, d3, dl = b.scales.d2s, b.scales.d3s, b.scales.dls
    eps1, eps2 = confidence_terms(b.delta)
    rt = math.sqrt(b.n)
    r2 = math.sqrt(2.0)

    mu = (
        160 * math.sqrt(s1) / (d2 * sk**2.5)
        + 32 * math.sqrt(2 * s1) / (d3 * sk**1.5)
        + 4 * math.sqrt(s1) / (d2 * sk)
    ) * eps1 / rt
    gamma = (
        160 / (d2 * sk**3.5) + 32 * r2 / (d3 * sk**2.5) + (2 + 2 * r2) / (d2 * sk**2)
    ) * 2 * eps1 / rt
    gamma += 8 * eps2 / (dl * sk * rt) if dl > 0 else math.inf
    pi = (200 / sk**2.5 + 40 * r2 / sk**1.5) * eps1 / (d3 * rt)

    inner = (b.k / b.c1) * math.sqrt(b.pi_max / b.pi_min)
    # log log of an argument <= e is <= 0 or undefined: no constraint from that term
    loglog = math.log(math.log(inner)) if inner > 1 else -math.inf
    n1 = max(0.0, b.c2 * (math.log(b.k) + loglog))
    n2 = (eps1 / (d2 * sk)) ** 2
    n3 = b.k**2 * (10 / (d2 * sk**2.5) + 2 * r2 / (d3 * sk**1.5)) ** 2 * eps1**2
    return TheoremBounds(mu, gamma, pi, n1, n2, n3, eps1, eps2)


# --------------------------------------------------------------------------
# convergence experiment


@dataclass
class ExperimentRow:
    n: int
    mu_err: float
    gamma_err: float
    pi_err: float
    pi_raw_err: float
    failures: list = field(default_factory=list)


def convergence_experiment(
    truth: GroundTruth,
    n_grid,
    trials: int = 5,
    seed: int = 0,
    config=None,
    words_per_doc: int = 20,
    labels_per_doc: int = 3,
) -> list[ExperimentRow]:
    """Median recovery error per sample size.

    Trial ``t`` draws its corpus with seed ``seed + t``. Each cell pools the
    per-topic errors of all successful trials and reports their median; a
    failing trial is recorded in ``failures`` instead of aborting the run.
    """
    from .pipeline import TrainConfig, train

    if config is None:
        config = TrainConfig(k=truth.k)
    grid = [int(n) for n in n_grid]
    if grid != sorted(grid):
        raise ValueError("n_grid must be ascending")
    rows = []
    for n in grid:
        mu, gam, pi, pir, fails = [], [], [], [], []
        for t in range(trials):
            try:
                corpus, labels = generate_corpus(truth, n, words_per_doc, labels_per_doc, seed=seed + t)
                res = train(corpus, labels, config)
                err = align_and_error(truth, res.model)
            except SpectralMomError as exc:
                fails.append(f"trial {t}: {type(exc).__name__}: {exc}")
                continue
            mu.append(err.mu_errs)
            gam.append(err.gamma_errs)
            pi.append(err.pi_errs)
            pir.append(err.pi_raw_errs)

        def med(xs):
            return float(np.median(np.concatenate(xs))) if xs else math.nan

        rows.append(ExperimentRow(n, med(mu), med(gam), med(pi), med(pir), fails))
    return rows


def experiment_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["N", "mu_err", "gamma_err", "pi_err"])
    for r in rows:
        w.writerow([r.n, repr(r.mu_err), repr(r.gamma_err), repr(r.pi_err)])
    return buf.getvalue()


