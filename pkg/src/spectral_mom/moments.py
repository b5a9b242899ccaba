"""The three data passes: pairwise moment, whitened third moment, label projection.

Two estimators are available.

``"paper"``
    The raw co-occurrence products ``X^T X``, ``XW (x) XW (x) XW`` and
    ``Y (x) XWU (x) XWU`` normalised by the sums of ``n**2``, ``n**3`` and
    ``n**2 * m`` (``n`` word tokens and ``m`` label tokens per document).
    Self-pairs and self-triples of a token are included.

``"unbiased"``
    Sums restricted to distinct token positions within a document,
    normalised by ``n(n-1)``, ``n(n-1)(n-2)`` and ``n(n-1) m``. On count
    data drawn from the latent-topic model these are unbiased for
    ``sum_k pi_k mu_k mu_k^T`` and its third-order and label analogues;
    the ``"paper"`` sums are not, because of the repeated-token terms.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import kernels
from .corpus import LabelSet, SparseCorpus
from .errors import DegenerateMomentError, DimensionMismatchError

ESTIMATORS = ("paper", "unbiased")


@dataclass
class PassCounter:
    """Counts full passes over the training documents."""

    count: int = 0
    names: list = field(default_factory=list)

    def tick(self, name):
        self.count += 1
        self.names.append(name)


@dataclass(frozen=True)
class PairwiseMoment:
    matrix: sp.csr_matrix
    estimator: str = "paper"

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class WhitenedThirdMoment:
    tensor: np.ndarray

    @property
    def dim(self) -> int:
        return self.tensor.shape[0]


@dataclass(frozen=True)
class RawLabelProjection:
    matrix: np.ndarray

    @property
    def n_labels(self) -> int:
        return self.matrix.shape[0]

    @property
    def topics(self) -> int:
        return self.matrix.shape[1]


def _check_estimator(estimator):
    if estimator not in ESTIMATORS:
        raise ValueError(f"estimator must be one of {ESTIMATORS}, got {estimator!r}")


def _chunks(n, threads):
    threads = max(1, int(threads))
    edges = np.linspace(0, n, threads + 1).astype(np.int64)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def _map_reduce(fn, n, threads):
    """Apply ``fn(start, stop)`` to contiguous chunks; sum in chunk order."""
    spans = _chunks(n, threads)
    if not spans:
        return None
    if len(spans) == 1:
        return fn(*spans[0])
    with ThreadPoolExecutor(max_workers=len(spans)) as pool:
        parts = list(pool.map(lambda s: fn(*s), spans))
    out = parts[0]
    for p in parts[1:]:
        out = out + p
    return out


def _token_sums(n, m=None):
    """Exact integer normalisers keyed by estimator."""
    n = n.astype(object)
    out = {
        ("paper", 2): int(sum(n * n)),
        ("paper", 3): int(sum(n * n * n)),
        ("unbiased", 2): int(sum(n * (n - 1))),
        ("unbiased", 3): int(sum(n * (n - 1) * (n - 2))),
    }
    if m is not None:
        m = m.astype(object)
        out[("paper", "l")] = int(sum(n * n * m))
        out[("unbiased", "l")] = int(sum(n * (n - 1) * m))
    return out


def estimate_m2(
    corpus: SparseCorpus,
    estimator: str = "unbiased",
    threads: int = 1,
    counter: PassCounter | None = None,
) -> PairwiseMoment:
    """Pass 1: the normalised word co-occurrence matrix."""
    _check_estimator(estimator)
    norm = _token_sums(corpus.nnz)[(estimator, 2)]
    if norm <= 0:
        raise DegenerateMomentError(
            f"pairwise normaliser is zero for estimator {estimator!r}: no document has enough words"
        )
    x = corpus.to_csr()

    def block(a, b):
        xb = x[a:b]
        return (xb.T @ xb).tocsr()

    m2 = _map_reduce(block, corpus.n_docs, threads)
    if estimator == "unbiased":
        colsum = np.asarray(x.sum(axis=0)).ravel()
        m2 = (m2 - sp.diags(colsum)).tocsr()
        m2.eliminate_zeros()
    m2 = (m2 / float(norm)).tocsr()
    m2.sort_indices()
    if counter is not None:
        counter.tick("pairwise")
    return PairwiseMoment(m2, estimator)


def whitened_third_moment(
    corpus: SparseCorpus,
    basis,
    estimator: str = "unbiased",
    threads: int = 1,
    counter: PassCounter | None = None,
) -> WhitenedThirdMoment:
    """Pass 2: the third word moment contracted with ``W`` on every mode.

    Accumulates ``z_i (x) z_i (x) z_i`` with ``z_i = W^T x_i`` per document;
    the ``D x D x D`` moment is never formed.
    """
    _check_estimator(estimator)
    w = np.ascontiguousarray(basis.W, dtype=np.float64)
    if w.shape[0] != corpus.n_words:
        raise DimensionMismatchError(
            f"whitening matrix has {w.shape[0]} rows, corpus has {corpus.n_words} words"
        )
    norm = _token_sums(corpus.nnz)[(estimator, 3)]
    if norm <= 0:
        raise DegenerateMomentError(
            f"third-moment normaliser is zero for estimator {estimator!r}"
        )
    ip, ix, ic = corpus.indptr, corpus.indices, corpus.counts
    t = _map_reduce(lambda a, b: kernels.cube_sum(ip, ix, ic, w, a, b), corpus.n_docs, threads)
    if estimator == "unbiased":
        t = t - _repeat_terms(corpus, w)
    t = kernels.canonical_symmetrize(t / float(norm))
    if counter is not None:
        counter.tick("third")
    return WhitenedThirdMoment(t)


def _repeat_terms(corpus, w):
    """Contributions of token triples sharing a position.

    sum over pairs-equal placements minus twice the all-equal term, so that
    ``cube_sum - _repeat_terms`` keeps only distinct positions.
    """
    x = corpus.to_csr()
    z = np.asarray(x @ w)
    b = np.asarray(x.T @ z)  # B_v = sum_i c_iv z_i
    colsum = np.asarray(x.sum(axis=0)).ravel()
    k = w.shape[1]
    s = np.zeros((k, k, k))
    g = np.zeros((k, k, k))
    step = max(1, kernels._CHUNK_ELEMS // max(1, k * k))
    for lo in range(0, w.shape[0], step):
        wc = w[lo : lo + step]
        ww = (wc[:, :, None] * wc[:, None, :]).reshape(wc.shape[0], k * k)
        s += (ww.T @ b[lo : lo + step]).reshape(k, k, k)
        g += (ww.T @ (colsum[lo : lo + step, None] * wc)).reshape(k, k, k)
    # s[a,b,c]: positions a,b tied; the other two placements are transposes
    return s + s.transpose(0, 2, 1) + s.transpose(2, 0, 1) - 2.0 * g


def estimate_raw_q(
    corpus: SparseCorpus,
    labels: LabelSet,
    basis,
    eigs,
    estimator: str = "unbiased",
    threads: int = 1,
    counter: PassCounter | None = None,
) -> RawLabelProjection:
    """Pass 3: column k is ``sum_i y_i (u_k^T W^T x_i)^2`` over the normaliser."""
    _check_estimator(estimator)
    if labels.n_docs != corpus.n_docs:
        raise DimensionMismatchError(
            f"labels have {labels.n_docs} rows, corpus has {corpus.n_docs}"
        )
    w = np.asarray(basis.W, dtype=np.float64)
    u = np.asarray(eigs.vectors, dtype=np.float64)
    if w.shape[0] != corpus.n_words or u.shape[0] != w.shape[1]:
        raise DimensionMismatchError("basis / eigenvector shapes do not match the corpus")
    norm = _token_sums(corpus.nnz, labels.nnz)[(estimator, "l")]
    if norm <= 0:
        raise DegenerateMomentError(
            f"label cross-moment normaliser is zero for estimator {estimator!r}"
        )
    p = np.ascontiguousarray(w @ u)
    excl = estimator == "unbiased"
    args = (corpus.indptr, corpus.indices, corpus.counts, labels.indptr, labels.indices, labels.counts, p, labels.n_labels, excl)
    r = _map_reduce(lambda a, b: kernels.label_projection(*args, a, b), corpus.n_docs, threads)
    if counter is not None:
        counter.tick("labels")
    return RawLabelProjection(r / float(norm))
