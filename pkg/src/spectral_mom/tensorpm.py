"""Robust tensor power method for symmetric orthogonally decomposable tensors."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DecompositionError


@dataclass(frozen=True)
class TensorEigs:
    values: np.ndarray  # (k,) positive
    vectors: np.ndarray  # (K, k), column j is u_j
    iterations_used: np.ndarray  # (k,) power steps of the selected restart

    @property
    def k(self) -> int:
        return self.values.size


def default_restarts(k: int) -> int:
    return 10 + 2 * int(k)


def _tensor_of(t):
    return np.ascontiguousarray(getattr(t, "tensor", t), dtype=np.float64)


def rank_one(lam: float, u: np.ndarray) -> np.ndarray:
    """``lam * u (x) u (x) u``, exactly symmetric."""
    u = np.asarray(u, dtype=np.float64)
    return kernels.canonical_symmetrize(lam * np.einsum("i,j,k->ijk", u, u, u))


def deflate(t, lam: float, u: np.ndarray) -> np.ndarray:
    """``t - lam * u (x) u (x) u`` for a unit vector ``u``."""
    u = np.asarray(u, dtype=np.float64)
    if abs(np.linalg.norm(u) - 1.0) > 1e-10:
        raise ValueError(f"deflation vector must be unit norm, got norm {np.linalg.norm(u):.12g}")
    arr = _tensor_of(t)
    if lam == 0:
        return arr.copy()
    return arr - rank_one(lam, u)


def tensor_apply(t, a, b, c) -> float:
    """Multilinear form ``T(a, b, c)``."""
    return float(np.einsum("ijk,i,j,k->", _tensor_of(t), a, b, c))


def _run_restart(t, theta0, iters, tol):
    theta, used = kernels.power_iterate(t, theta0, iters, tol)
    lam = float(theta @ kernels.contract2(t, theta))
    if lam < 0:
        theta = -theta
        lam = -lam
    return lam, np.asarray(theta), int(used)


def tensor_power_method(
    t,
    k: int,
    restarts: int | None = None,
    iters: int = 100,
    tol: float = 1e-10,
    seed: int = 42,
    threads: int = 1,
) -> TensorEigs:
    """Extract ``k`` eigenpairs by power iteration with random restarts and deflation.

    Each round runs ``restarts`` iterations ``theta <- T(., theta, theta)``
    from seeded uniform unit starts, keeps the candidate with the largest
    ``T(theta, theta, theta)`` (lowest restart index on ties) and deflates
    it out before the next round.
    """
    arr = _tensor_of(t).copy()
    dim = arr.shape[0]
    if arr.shape != (dim, dim, dim):
        raise ValueError("tensor must be cubic")
    if not 1 <= k <= dim:
        raise ValueError(f"k must lie in [1, {dim}], got {k}")
    if restarts is None:
        restarts = default_restarts(k)
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    rng = np.random.default_rng(seed)
    values = np.empty(k)
    vectors = np.empty((dim, k))
    used = np.empty(k, dtype=np.int64)
    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        for r in range(k):
            starts = rng.standard_normal((restarts, dim))
            starts /= np.linalg.norm(starts, axis=1, keepdims=True)
            if pool is None:
                cands = [_run_restart(arr, s, iters, tol) for s in starts]
            else:
                cands = list(pool.map(lambda s: _run_restart(arr, s, iters, tol), starts))
            best = 0
            for i in range(1, restarts):
                if cands[i][0] > cands[best][0]:
                    best = i
            lam, theta, n_used = cands[best]
            if not lam > 0:
                raise DecompositionError(
                    f"round {r + 1}: best eigenvalue {lam:.3e} is not positive; "
                    "k may be too large or the sample too small for the moment estimate"
                )
            values[r] = lam
            vectors[:, r] = theta
            used[r] = n_used
            arr = arr - rank_one(lam, theta)
    finally:
        if pool is not None:
            pool.shutdown()
    return TensorEigs(values, vectors, used)
