"""Parameter assembly, label prediction and the binary model file."""

from __future__ import annotations

import io
import struct
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateTopicError, DimensionMismatchError, ModelFormatError

MAGIC = b"SMOM"
VERSION = 1
SMOOTHING = 1e-12


@dataclass(frozen=True)
class SpectralModel:
    """Topic-word matrix ``O`` (D x K), topic-label matrix ``Q`` (L x K) and prior.

    ``pi`` is the renormalised prior used for prediction; ``pi_raw`` keeps
    the unnormalised ``lambda_k ** -2`` values.
    """

    O: np.ndarray
    Q: np.ndarray
    pi: np.ndarray
    pi_raw: np.ndarray

    @property
    def n_words(self) -> int:
        return self.O.shape[0]

    @property
    def n_labels(self) -> int:
        return self.Q.shape[0]

    @property
    def k(self) -> int:
        return self.O.shape[1]

    def check(self, atol=1e-10):
        """Raise ``ValueError`` if a stochasticity invariant is violated."""
        d, k = self.O.shape
        if self.Q.shape[1] != k or self.pi.shape != (k,) or self.pi_raw.shape != (k,):
            raise ValueError("inconsistent model dimensions")
        for name, m in (("O", self.O), ("Q", self.Q)):
            if not np.all(np.isfinite(m)) or np.any(m < 0):
                raise ValueError(f"{name} has negative or non-finite entries")
            if np.any(np.abs(m.sum(axis=0) - 1.0) > atol):
                raise ValueError(f"{name} columns do not sum to 1")
        if np.any(self.pi <= 0) or abs(self.pi.sum() - 1.0) > 1e-12:
            raise ValueError("pi is not a strictly positive distribution")
        if np.any(self.pi_raw <= 0):
            raise ValueError("pi_raw must be positive")
        return self

    def __eq__(self, other):
        return isinstance(other, SpectralModel) and all(
            np.array_equal(getattr(self, f), getattr(other, f)) for f in ("O", "Q", "pi", "pi_raw")
        )

    __hash__ = None


@dataclass(frozen=True)
class LabelScores:
    scores: np.ndarray
    ranking: np.ndarray


def _clamp_normalize(cols, what):
    cols = np.clip(np.asarray(cols, dtype=np.float64), 0.0, None)
    sums = cols.sum(axis=0)
    for j in np.flatnonzero(~(sums > 0)):
        raise DegenerateTopicError(
            f"{what} column for topic {j} has no positive mass after clamping", topic=int(j)
        )
    return cols / sums


def assemble_model(basis, eigs, raw_q) -> SpectralModel:
    w_pinv = np.asarray(basis.W_pinv, dtype=np.float64)
    u = np.asarray(eigs.vectors, dtype=np.float64)
    lam = np.asarray(eigs.values, dtype=np.float64)
    q = np.asarray(getattr(raw_q, "matrix", raw_q), dtype=np.float64)
    k = lam.size
    if w_pinv.shape[1] != u.shape[0] or u.shape[1] != k or q.shape[1] != k:
        raise DimensionMismatchError(
            f"shapes disagree: W_pinv {w_pinv.shape}, U {u.shape}, raw Q {q.shape}"
        )
    o = _clamp_normalize(w_pinv @ u, "O")
    qn = _clamp_normalize(q, "Q")
    pi_raw = lam ** -2.0
    return SpectralModel(O=o, Q=qn, pi=pi_raw / pi_raw.sum(), pi_raw=pi_raw)


def _doc_words(model, doc):
    words = np.unique(np.asarray(list(doc), dtype=np.int64))
    if words.size and (words[0] < 0 or words[-1] >= model.n_words):
        raise IndexError(f"word index outside [0, {model.n_words})")
    return words


def _softmax_rows(logp):
    logp = logp - logp.max(axis=-1, keepdims=True)
    p = np.exp(logp)
    return p / p.sum(axis=-1, keepdims=True)


def posterior_topics(model: SpectralModel, doc, smoothing: float = SMOOTHING) -> np.ndarray:
    """``P[h=k | d]`` for the set of distinct words in ``doc``, in log space."""
    words = _doc_words(model, doc)
    if words.size == 0:
        return model.pi.copy()
    logp = np.log(model.pi) + np.log(model.O[words] + smoothing).sum(axis=0)
    return _softmax_rows(logp)


def posterior_topics_direct(model: SpectralModel, doc, smoothing: float = SMOOTHING) -> np.ndarray:
    """Plain product form of :func:`posterior_topics`; underflows on long documents."""
    words = _doc_words(model, doc)
    p = model.pi * np.prod(model.O[words] + smoothing, axis=0)
    return p / p.sum()


def rank_labels(scores: np.ndarray) -> np.ndarray:
    """Label indices by descending score, ascending index among ties."""
    return np.argsort(-np.asarray(scores), kind="stable")


def predict_labels(model: SpectralModel, doc, top_m: int | None = None, smoothing: float = SMOOTHING) -> LabelScores:
    weights = posterior_topics(model, doc, smoothing)
    scores = np.minimum(model.Q @ weights, 1.0)  # rounding can exceed 1 by an ulp
    ranking = rank_labels(scores)
    if top_m is not None:
        ranking = ranking[:top_m]
    return LabelScores(scores, ranking)


def predict_scores(model: SpectralModel, corpus, smoothing: float = SMOOTHING) -> np.ndarray:
    """``P[l | d]`` for every document of ``corpus`` as an ``(N, L)`` array."""
    if corpus.n_words != model.n_words:
        raise DimensionMismatchError(
            f"corpus has {corpus.n_words} words, model has {model.n_words}"
        )
    x = corpus.binarized().to_csr()
    logp = np.asarray(x @ np.log(model.O + smoothing)) + np.log(model.pi)
    return np.minimum(_softmax_rows(logp) @ model.Q.T, 1.0)


# --------------------------------------------------------------------------
# binary file: magic, u32 version, u64 D L K, pi_raw, pi, O and Q column-major


def dumps_model(model: SpectralModel) -> bytes:
    d, k = model.O.shape
    l = model.Q.shape[0]
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack("<I", VERSION))
    buf.write(struct.pack("<QQQ", d, l, k))
    for arr in (model.pi_raw, model.pi, model.O, model.Q):
        buf.write(np.asarray(arr, dtype="<f8").ravel(order="F").tobytes())
    return buf.getvalue()


def save_model(model: SpectralModel, sink) -> None:
    data = dumps_model(model)
    if hasattr(sink, "write"):
        sink.write(data)
    else:
        with open(sink, "wb") as fh:
            fh.write(data)


def loads_model(data: bytes) -> SpectralModel:
    if data[:4] != MAGIC:
        raise ModelFormatError("bad magic: not a spectral model file")
    if len(data) < 8:
        raise ModelFormatError("truncated file: missing section 'version'")
    (version,) = struct.unpack_from("<I", data, 4)
    if version != VERSION:
        raise ModelFormatError(f"unsupported model version {version}, expected {VERSION}")
    if len(data) < 32:
        raise ModelFormatError("truncated file: missing section 'dimensions'")
    d, l, k = struct.unpack_from("<QQQ", data, 8)
    pos = 32
    out = {}
    for name, shape in (("pi_raw", (k,)), ("pi", (k,)), ("O", (d, k)), ("Q", (l, k))):
        n = int(np.prod(shape))
        end = pos + 8 * n
        if len(data) < end:
            raise ModelFormatError(f"truncated file: missing section '{name}'")
        out[name] = np.frombuffer(data, dtype="<f8", count=n, offset=pos).reshape(shape, order="F").astype(np.float64)
        pos = end
    if len(data) != pos:
        raise ModelFormatError(f"{len(data) - pos} trailing bytes after section 'Q'")
    model = SpectralModel(O=out["O"], Q=out["Q"], pi=out["pi"], pi_raw=out["pi_raw"])
    try:
        model.check()
    except ValueError as exc:
        raise ModelFormatError(f"invariant violated in loaded model: {exc}") from exc
    return model


def load_model(source) -> SpectralModel:
    if hasattr(source, "read"):
        return loads_model(source.read())
    with open(source, "rb") as fh:
        return loads_model(fh.read())
