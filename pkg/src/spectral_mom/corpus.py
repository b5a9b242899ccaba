"""Sparse document-word / document-label containers and the text format.

Interchange format (0-based indices)::

    N D L
    l1,l2,... f1:v1 f2:v2 ...

One line per document after the header. Lines starting with ``#`` are
comments. A document without labels starts directly with its features.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import Iterable, Sequence, TextIO

import numpy as np
import scipy.sparse as sp

from .errors import DimensionMismatchError, EmptyCorpusError, ParseError

__all__ = [
    "SparseCorpus",
    "LabelSet",
    "MomentScales",
    "parse_corpus",
    "read_corpus",
    "serialize_corpus",
    "write_corpus",
    "corpus_stats",
    "rows_from_tokens",
]


class _SparseRows:
    """CSR-style rows of sorted, distinct column indices with integer counts.

    ``counts`` holds multiplicities. A binary matrix has every count equal
    to one.
    """

    __slots__ = ("indptr", "indices", "counts", "n_cols")

    def __init__(self, indptr, indices, counts, n_cols):
        indptr = np.ascontiguousarray(indptr, dtype=np.int64)
        indices = np.ascontiguousarray(indices, dtype=np.int64)
        counts = np.ascontiguousarray(counts, dtype=np.int64)
        n_cols = int(n_cols)
        if indptr.ndim != 1 or indptr.size == 0 or indptr[0] != 0:
            raise ValueError("indptr must be 1-d and start at 0")
        if indptr[-1] != indices.size or indices.shape != counts.shape:
            raise ValueError("indptr, indices and counts disagree in length")
        if np.any(np.diff(indptr) < 0):
            raise ValueError("indptr must be non-decreasing")
        if indices.size:
            if indices.min() < 0 or indices.max() >= n_cols:
                raise ValueError(f"column index outside [0, {n_cols})")
            if counts.min() < 1:
                raise ValueError("counts must be positive")
            row_of = np.repeat(np.arange(indptr.size - 1), np.diff(indptr))
            same_row = row_of[1:] == row_of[:-1]
            if np.any(np.diff(indices)[same_row] <= 0):
                raise ValueError("indices must be strictly increasing within a row")
        for arr in (indptr, indices, counts):
            arr.setflags(write=False)
        object.__setattr__(self, "indptr", indptr)
        object.__setattr__(self, "indices", indices)
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "n_cols", n_cols)

    def __setattr__(self, name, value):
        raise AttributeError(f"{type(self).__name__} is immutable")

    @classmethod
    def from_rows(cls, rows: Sequence[Iterable[int]], n_cols: int, counts=None):
        """Build from per-row index lists (deduplicated and sorted here).

        ``counts``, when given, parallels ``rows``; repeated indices in a row
        have their counts summed.
        """
        indptr = [0]
        all_idx, all_cnt = [], []
        for i, row in enumerate(rows):
            idx = np.asarray(list(row), dtype=np.int64)
            cnt = (
                np.ones(idx.size, dtype=np.int64)
                if counts is None
                else np.asarray(list(counts[i]), dtype=np.int64)
            )
            if idx.size:
                uniq, inv = np.unique(idx, return_inverse=True)
                cnt = np.bincount(inv, weights=cnt, minlength=uniq.size).astype(np.int64)
                idx = uniq
            all_idx.append(idx)
            all_cnt.append(cnt)
            indptr.append(indptr[-1] + idx.size)
        indices = np.concatenate(all_idx) if all_idx else np.zeros(0, np.int64)
        cnts = np.concatenate(all_cnt) if all_cnt else np.zeros(0, np.int64)
        return cls(np.asarray(indptr), indices, cnts, n_cols)

    @classmethod
    def from_scipy(cls, m):
        m = sp.csr_matrix(m)
        m.sum_duplicates()
        m.sort_indices()
        keep = m.data != 0
        if not keep.all():
            m.eliminate_zeros()
        data = m.data
        if np.any(data < 0) or np.any(data != np.round(data)):
            raise ValueError("matrix entries must be non-negative integers")
        return cls(m.indptr, m.indices, data.astype(np.int64), m.shape[1])

    @property
    def n_docs(self) -> int:
        return self.indptr.size - 1

    @property
    def rows(self) -> list[list[int]]:
        return [self.indices[a:b].tolist() for a, b in zip(self.indptr[:-1], self.indptr[1:])]

    def row(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i] : self.indptr[i + 1]]

    def row_counts(self, i: int) -> np.ndarray:
        return self.counts[self.indptr[i] : self.indptr[i + 1]]

    @property
    def n_distinct(self) -> np.ndarray:
        """Distinct entries per row."""
        return np.diff(self.indptr)

    @property
    def nnz(self) -> np.ndarray:
        """Row totals: the number of tokens per row (distinct entries when binary)."""
        row_of = np.repeat(np.arange(self.n_docs), self.n_distinct)
        return np.bincount(row_of, weights=self.counts, minlength=self.n_docs).astype(np.int64)

    @property
    def is_binary(self) -> bool:
        return bool(np.all(self.counts == 1))

    def binarized(self):
        if self.is_binary:
            return self
        return type(self)(self.indptr, self.indices, np.ones_like(self.counts), self.n_cols)

    def to_csr(self, dtype=np.float64) -> sp.csr_matrix:
        return sp.csr_matrix(
            (self.counts.astype(dtype), self.indices, self.indptr),
            shape=(self.n_docs, self.n_cols),
        )

    def take(self, docs):
        """Rows ``docs`` (an index array) as a new container of the same type."""
        docs = np.asarray(docs, dtype=np.int64)
        lens = self.n_distinct[docs]
        indptr = np.zeros(docs.size + 1, dtype=np.int64)
        np.cumsum(lens, out=indptr[1:])
        sel = np.concatenate(
            [np.arange(self.indptr[d], self.indptr[d + 1]) for d in docs]
        ) if docs.size else np.zeros(0, np.int64)
        sel = sel.astype(np.int64)
        return type(self)(indptr, self.indices[sel], self.counts[sel], self.n_cols)

    def __len__(self):
        return self.n_docs

    def __eq__(self, other):
        return (
            type(self) is type(other)
            and self.n_cols == other.n_cols
            and np.array_equal(self.indptr, other.indptr)
            and np.array_equal(self.indices, other.indices)
            and np.array_equal(self.counts, other.counts)
        )

    __hash__ = None


class SparseCorpus(_SparseRows):
    """Document-word matrix X, one row per document."""

    __slots__ = ()

    @property
    def n_words(self) -> int:
        return self.n_cols

    def __repr__(self):
        return f"SparseCorpus(n_docs={self.n_docs}, n_words={self.n_words}, nnz={self.indices.size})"


class LabelSet(_SparseRows):
    """Document-label matrix Y, one row per document."""

    __slots__ = ()

    @property
    def n_labels(self) -> int:
        return self.n_cols

    def __repr__(self):
        return f"LabelSet(n_docs={self.n_docs}, n_labels={self.n_labels}, nnz={self.indices.size})"


def rows_from_tokens(tokens: np.ndarray, n_cols: int, cls=SparseCorpus):
    """Collapse an ``(n_docs, m)`` array of token draws into sorted rows with counts."""
    tokens = np.asarray(tokens, dtype=np.int64)
    n, m = tokens.shape
    if m == 0:
        return cls(np.zeros(n + 1, np.int64), np.zeros(0, np.int64), np.zeros(0, np.int64), n_cols)
    s = np.sort(tokens, axis=1)
    new = np.ones_like(s, dtype=bool)
    new[:, 1:] = s[:, 1:] != s[:, :-1]
    flat_new = new.ravel()
    indices = s.ravel()[flat_new]
    starts = np.flatnonzero(flat_new)
    counts = np.diff(np.append(starts, s.size))
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(new.sum(axis=1), out=indptr[1:])
    return cls(indptr, indices, counts, n_cols)


@dataclass(frozen=True)
class MomentScales:
    """Mean powers of the per-document totals.

    ``d1s = mean(n)``, ``d2s = mean(n**2)``, ``d3s = mean(n**3)`` and
    ``dls = mean(n**2 * m)`` with ``n`` the word total and ``m`` the label
    total of a document.
    """

    d1s: float
    d2s: float
    d3s: float
    dls: float
    n_docs: int
    sum1: int
    sum2: int
    sum3: int
    suml: int


def _exact_sum(values) -> int:
    return int(sum(int(v) for v in values))


def corpus_stats(corpus: SparseCorpus, labels: LabelSet | None = None) -> MomentScales:
    n_docs = corpus.n_docs
    if n_docs == 0:
        raise EmptyCorpusError("corpus has no documents")
    n = corpus.nnz.astype(object)
    s1 = _exact_sum(n)
    s2 = _exact_sum(n * n)
    s3 = _exact_sum(n * n * n)
    if labels is not None:
        if labels.n_docs != n_docs:
            raise DimensionMismatchError(
                f"labels have {labels.n_docs} rows, corpus has {n_docs}"
            )
        sl = _exact_sum(n * n * labels.nnz.astype(object))
    else:
        sl = 0
    return MomentScales(
        d1s=s1 / n_docs,
        d2s=s2 / n_docs,
        d3s=s3 / n_docs,
        dls=sl / n_docs,
        n_docs=n_docs,
        sum1=s1,
        sum2=s2,
        sum3=s3,
        suml=sl,
    )


def _parse_int(tok, what, lineno):
    try:
        return int(tok)
    except ValueError:
        raise ParseError(f"non-numeric {what} {tok!r}", lineno) from None


def parse_corpus(
    stream: TextIO | str, expect_labels: bool = True, binarize: bool = False
) -> tuple[SparseCorpus, LabelSet | None]:
    """Parse the sparse multi-label text format.

    With ``binarize=True`` every feature becomes a presence indicator. By
    default integer feature values are kept as word counts; a non-integer
    value is then an error. Repeated indices within a line are merged
    (counts summed, or collapsed when binarizing). A label listed twice
    counts twice unless binarizing.
    """
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    lineno = 0
    header = None
    for raw in stream:
        lineno += 1
        line = raw.strip()
        if line:
            header = line
            break
    if header is None:
        raise ParseError("missing header 'N D L'", 1)
    parts = header.split()
    if len(parts) != 3:
        raise ParseError(f"malformed header {header!r}, expected 'N D L'", lineno)
    try:
        n_docs, n_words, n_labels = (int(p) for p in parts)
    except ValueError:
        raise ParseError(f"malformed header {header!r}, expected three integers", lineno) from None
    if n_docs < 0 or n_words < 0 or n_labels < 0:
        raise ParseError("header dimensions must be non-negative", lineno)

    w_ptr = [0]
    w_idx: list[int] = []
    w_cnt: list[int] = []
    l_ptr = [0]
    l_idx: list[int] = []
    l_cnt: list[int] = []
    n_seen = 0
    for raw in stream:
        lineno += 1
        line = raw.strip()
        if line.startswith("#"):
            continue
        if n_seen >= n_docs:
            if not line:
                continue
            raise ParseError(f"more data lines than the {n_docs} declared in the header", lineno)
        toks = line.split()
        if toks and ":" not in toks[0]:
            labs: dict[int, int] = {}
            for t in toks[0].split(","):
                if t == "":
                    continue
                lab = _parse_int(t, "label index", lineno)
                if lab < 0 or lab >= n_labels:
                    raise ParseError(f"label index {lab} outside [0, {n_labels})", lineno)
                labs[lab] = 1 if binarize else labs.get(lab, 0) + 1
            for lab in sorted(labs):
                l_idx.append(lab)
                l_cnt.append(labs[lab])
            toks = toks[1:]
        l_ptr.append(len(l_idx))
        feats: dict[int, int] = {}
        for t in toks:
            key, sep, val = t.partition(":")
            if not sep:
                raise ParseError(f"feature token {t!r} is not 'index:value'", lineno)
            f = _parse_int(key, "feature index", lineno)
            if f < 0 or f >= n_words:
                raise ParseError(f"feature index {f} outside [0, {n_words})", lineno)
            try:
                v = float(val)
            except ValueError:
                raise ParseError(f"non-numeric feature value {val!r}", lineno) from None
            if not math.isfinite(v) or v <= 0:
                raise ParseError(f"feature value {val!r} must be positive", lineno)
            if binarize:
                feats[f] = 1
            else:
                if v != round(v):
                    raise ParseError(
                        f"feature value {val!r} is not an integer count (use binarize)", lineno
                    )
                feats[f] = feats.get(f, 0) + int(v)
        for f in sorted(feats):
            w_idx.append(f)
            w_cnt.append(feats[f])
        w_ptr.append(len(w_idx))
        n_seen += 1
    if n_seen != n_docs:
        raise ParseError(f"header declares {n_docs} documents, found {n_seen}", lineno)
    corpus = SparseCorpus(np.array(w_ptr), np.array(w_idx, np.int64), np.array(w_cnt, np.int64), n_words)
    if not expect_labels:
        return corpus, None
    labels = LabelSet(np.array(l_ptr), np.array(l_idx, np.int64), np.array(l_cnt, np.int64), n_labels)
    return corpus, labels


def read_corpus(path, expect_labels=True, binarize=False):
    with open(path, encoding="utf-8") as fh:
        return parse_corpus(fh, expect_labels=expect_labels, binarize=binarize)


def serialize_corpus(corpus: SparseCorpus, labels: LabelSet | None = None, n_labels=None) -> str:
    """Canonical text form: sorted, deduplicated indices, integer values."""
    buf = io.StringIO()
    write_corpus(buf, corpus, labels, n_labels=n_labels)
    return buf.getvalue()


def write_corpus(sink, corpus: SparseCorpus, labels: LabelSet | None = None, n_labels=None):
    if labels is not None and labels.n_docs != corpus.n_docs:
        raise ValueError("labels and corpus differ in document count")
    L = labels.n_labels if labels is not None else int(n_labels or 0)
    if isinstance(sink, (str, bytes)) or hasattr(sink, "__fspath__"):
        with open(sink, "w", encoding="utf-8") as fh:
            return write_corpus(fh, corpus, labels, n_labels)
    sink.write(f"{corpus.n_docs} {corpus.n_words} {L}\n")
    for i in range(corpus.n_docs):
        parts = []
        if labels is not None and labels.n_distinct[i]:
            parts.append(",".join(map(str, np.repeat(labels.row(i), labels.row_counts(i)).tolist())))
        parts.extend(f"{f}:{c}" for f, c in zip(corpus.row(i).tolist(), corpus.row_counts(i).tolist()))
        sink.write(" ".join(parts))
        sink.write("\n")
