"""Label-ranking metrics: per-document ROC AUC, its macro average, precision@m."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from .errors import DataError, DimensionMismatchError
from .model import SMOOTHING, predict_scores, rank_labels


@dataclass
class MetricReport:
    macro_auc: float
    per_doc_auc: list
    precision_at: dict = field(default_factory=dict)
    n_skipped: int = 0

    def text(self) -> str:
        rows = [("macro_auc", f"{self.macro_auc:.6f}")]
        rows += [(f"precision@{m}", f"{p:.6f}") for m, p in sorted(self.precision_at.items())]
        rows += [("n_evaluated", str(sum(a is not None for a in self.per_doc_auc))), ("n_skipped", str(self.n_skipped))]
        width = max(len(k) for k, _ in rows)
        return "\n".join(f"{k.ljust(width)}  {v}" for k, v in rows) + "\n"

    def csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["metric", "value"])
        w.writerow(["macro_auc", repr(self.macro_auc)])
        for m, p in sorted(self.precision_at.items()):
            w.writerow([f"precision@{m}", repr(p)])
        w.writerow(["n_skipped", self.n_skipped])
        return buf.getvalue()


def _positive_mask(n_labels, positives):
    pos = np.asarray(sorted(set(int(p) for p in positives)), dtype=np.int64)
    if pos.size and (pos[0] < 0 or pos[-1] >= n_labels):
        raise IndexError(f"positive label outside [0, {n_labels})")
    mask = np.zeros(n_labels, dtype=bool)
    mask[pos] = True
    return mask


def doc_auc(scores, positives) -> float | None:
    """Probability that a positive label outscores a negative one, ties as 1/2.

    ``None`` when there are no positives or no negatives.
    """
    scores = np.asarray(scores, dtype=np.float64)
    mask = _positive_mask(scores.size, positives)
    n_pos = int(mask.sum())
    n_neg = scores.size - n_pos
    if n_pos == 0 or n_neg == 0:
        return None
    ranks = rankdata(scores)  # midranks
    u = ranks[mask].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def doc_auc_pairs(scores, positives) -> float | None:
    """Brute-force pair enumeration; the definition :func:`doc_auc` must match."""
    scores = np.asarray(scores, dtype=np.float64)
    mask = _positive_mask(scores.size, positives)
    pos, neg = scores[mask], scores[~mask]
    if pos.size == 0 or neg.size == 0:
        return None
    wins = 0.0
    for p in pos:
        for q in neg:
            if p > q:
                wins += 1.0
            elif p == q:
                wins += 0.5
    return wins / (pos.size * neg.size)


def precision_at(scores, positives, m: int) -> float:
    mask = _positive_mask(len(scores), positives)
    top = rank_labels(scores)[:m]
    return float(mask[top].sum()) / m


def evaluate_scores(score_matrix, labels, at=(1, 3, 5)) -> MetricReport:
    """Batch form of :func:`doc_auc` and :func:`precision_at` over all documents."""
    score_matrix = np.asarray(score_matrix, dtype=np.float64)
    n, n_labels = labels.n_docs, labels.n_labels
    if score_matrix.shape != (n, n_labels):
        raise DimensionMismatchError(
            f"scores {score_matrix.shape} vs labels ({n}, {n_labels})"
        )
    mask = labels.binarized().to_csr(dtype=bool).toarray()
    n_pos = mask.sum(axis=1)
    n_neg = n_labels - n_pos
    ok = (n_pos > 0) & (n_neg > 0)
    if not ok.any():
        raise DataError("no document has both positive and negative labels")
    ranks = rankdata(score_matrix, axis=1) if n else np.zeros((0, n_labels))
    u = np.where(mask, ranks, 0.0).sum(axis=1) - n_pos * (n_pos + 1) / 2.0
    auc = np.divide(u, n_pos * n_neg, out=np.zeros(n), where=ok)
    per_doc = [float(a) if d else None for a, d in zip(auc, ok)]

    prec = {}
    if at:
        top_m = max(int(m) for m in at)
        order = np.argsort(-score_matrix, axis=1, kind="stable")[:, :top_m]
        hits = np.take_along_axis(mask, order, axis=1)
        cum = np.cumsum(hits, axis=1)
        for m in at:
            m = int(m)
            got = cum[:, min(m, top_m) - 1] if m <= n_labels else cum[:, -1]
            prec[m] = float(np.mean(got / m))
    return MetricReport(
        macro_auc=float(np.mean(auc[ok])),
        per_doc_auc=per_doc,
        precision_at=prec,
        n_skipped=int(n - ok.sum()),
    )


def macro_auc(model, corpus, labels, at=(1, 3, 5), smoothing: float = SMOOTHING) -> MetricReport:
    if labels.n_docs != corpus.n_docs or labels.n_labels != model.n_labels:
        raise DimensionMismatchError("model, corpus and labels disagree in shape")
    return evaluate_scores(predict_scores(model, corpus, smoothing), labels, at)
