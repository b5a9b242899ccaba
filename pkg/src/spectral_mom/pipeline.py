"""End-to-end parameter extraction: three passes plus the spectral steps."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .corpus import LabelSet, SparseCorpus
from .errors import DimensionMismatchError
from .model import SpectralModel, assemble_model
from .moments import PassCounter, estimate_m2, estimate_raw_q, whitened_third_moment
from .spectral import WhiteningBasis, truncated_eig, whitening_from_eig
from .tensorpm import TensorEigs, tensor_power_method


@dataclass
class TrainConfig:
    k: int
    estimator: str = "unbiased"
    eig_tol: float = 1e-10
    eig_max_iter: int | None = None
    eig_method: str = "lanczos"
    tpm_tol: float = 1e-10
    restarts: int | None = None
    power_iters: int = 100
    seed: int = 42
    threads: int = 1

    def __post_init__(self):
        if int(self.k) < 1:
            raise ValueError("k must be >= 1")
        if self.eig_tol <= 0 or self.tpm_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")


@dataclass
class TrainResult:
    model: SpectralModel
    basis: WhiteningBasis
    eigs: TensorEigs
    passes: PassCounter
    timings: dict = field(default_factory=dict)

    @property
    def sigma1(self) -> float:
        return float(self.basis.eig.values[0])

    @property
    def sigmaK(self) -> float:
        return float(self.basis.eig.values[-1])


def train(corpus: SparseCorpus, labels: LabelSet, config: TrainConfig) -> TrainResult:
    """Estimate ``O``, ``Q`` and ``pi`` with exactly three passes over the documents."""
    if labels.n_docs != corpus.n_docs:
        raise DimensionMismatchError(
            f"labels have {labels.n_docs} rows, corpus has {corpus.n_docs}"
        )
    k = int(config.k)
    if k > corpus.n_words:
        raise ValueError(f"k={k} exceeds the vocabulary size {corpus.n_words}")
    counter = PassCounter()
    timings = {}

    t0 = time.perf_counter()
    m2 = estimate_m2(corpus, config.estimator, config.threads, counter)
    timings["pass1_pairwise"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    eig = truncated_eig(
        m2, k, tol=config.eig_tol, max_iter=config.eig_max_iter, seed=config.seed, method=config.eig_method
    )
    basis = whitening_from_eig(eig)
    timings["whitening"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    t3 = whitened_third_moment(corpus, basis, config.estimator, config.threads, counter)
    timings["pass2_third"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    eigs = tensor_power_method(
        t3,
        k,
        restarts=config.restarts,
        iters=config.power_iters,
        tol=config.tpm_tol,
        seed=config.seed,
        threads=config.threads,
    )
    timings["tensor_decomposition"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    raw_q = estimate_raw_q(corpus, labels, basis, eigs, config.estimator, config.threads, counter)
    timings["pass3_labels"] = time.perf_counter() - t0

    model = assemble_model(basis, eigs, raw_q)
    return TrainResult(model, basis, eigs, counter, timings)


def whitening_residual(m2, basis: WhiteningBasis) -> float:
    """``||W^T M2 W - I||_F``."""
    mat = getattr(m2, "matrix", m2)
    w = basis.W
    g = w.T @ np.asarray(mat @ w)
    return float(np.linalg.norm(g - np.eye(w.shape[1])))
