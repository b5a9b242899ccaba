"""Truncated symmetric eigendecomposition and the whitening basis."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ConvergenceError, RankDeficiencyError

DENSE_LIMIT = 512


@dataclass(frozen=True)
class EigPairs:
    values: np.ndarray  # (K,) descending
    vectors: np.ndarray  # (D, K) orthonormal columns

    @property
    def k(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class WhiteningBasis:
    W: np.ndarray
    W_pinv: np.ndarray
    eig: EigPairs

    @property
    def k(self) -> int:
        return self.W.shape[1]


def canonical_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip each column so its first non-negligible entry is positive."""
    v = np.array(vectors, dtype=np.float64, copy=True)
    for j in range(v.shape[1]):
        col = v[:, j]
        big = np.abs(col) > 1e-12 * max(np.abs(col).max(), 1e-300)
        if big.any() and col[np.argmax(big)] < 0:
            v[:, j] = -col
    return v


def _as_operator(m2):
    mat = getattr(m2, "matrix", m2)
    if sp.issparse(mat):
        return sp.csr_matrix(mat, dtype=np.float64)
    return np.asarray(mat, dtype=np.float64)


def dense_eig(m2, k: int) -> EigPairs:
    """Top-``k`` eigenpairs by a full dense ``eigh``; the reference path."""
    mat = _as_operator(m2)
    if sp.issparse(mat):
        mat = mat.toarray()
    vals, vecs = np.linalg.eigh(mat)
    order = np.argsort(vals)[::-1][:k]
    return EigPairs(vals[order], canonical_signs(vecs[:, order]))


def truncated_eig(
    m2,
    k: int,
    tol: float = 1e-10,
    max_iter: int | None = None,
    seed: int = 42,
    method: str = "lanczos",
) -> EigPairs:
    """The ``k`` algebraically largest eigenpairs of a symmetric matrix.

    ``method="lanczos"`` runs ARPACK's implicitly restarted Lanczos from a
    seeded start vector; ``"dense"`` runs a full ``eigh``. Lanczos falls back
    to the dense path when ``k >= D - 1`` (ARPACK needs ``k < D``).

    Each returned pair satisfies ``||M w - nu w|| <= tol * nu`` or
    :class:`ConvergenceError` is raised.
    """
    mat = _as_operator(m2)
    d = mat.shape[0]
    if mat.shape != (d, d):
        raise ValueError("matrix must be square")
    if not 1 <= k <= d:
        raise ValueError(f"k must lie in [1, {d}], got {k}")
    if max_iter is None:
        max_iter = 10 * d
    if method == "dense" or k >= d - 1:
        pairs = dense_eig(mat, k)
    elif method == "lanczos":
        v0 = np.random.default_rng(seed).standard_normal(d)
        try:
            vals, vecs = spla.eigsh(mat, k=k, which="LA", tol=tol, maxiter=max_iter, v0=v0)
        except spla.ArpackNoConvergence as exc:
            raise ConvergenceError(
                f"Lanczos did not converge to {k} eigenpairs within {max_iter} iterations"
            ) from exc
        order = np.argsort(vals)[::-1]
        pairs = EigPairs(vals[order], canonical_signs(vecs[:, order]))
    else:
        raise ValueError(f"unknown method {method!r}")

    if pairs.values[-1] <= tol:
        raise RankDeficiencyError(
            f"eigenvalue {k} of the pairwise moment is {pairs.values[-1]:.3e} <= {tol:g}; "
            "the moment has rank below k, choose a smaller k"
        )
    resid = np.linalg.norm(mat @ pairs.vectors - pairs.vectors * pairs.values, axis=0)
    # floor at a few ulps of the spectral radius: tol*nu can sit below rounding
    floor = 64 * np.finfo(float).eps * abs(pairs.values[0])
    bad = resid > np.maximum(tol * pairs.values, floor)
    if bad.any():
        j = int(np.argmax(bad))
        raise ConvergenceError(
            f"eigenpair {j} residual {resid[j]:.3e} exceeds tolerance {tol:g} x {pairs.values[j]:.3e}"
        )
    return pairs


def whitening_from_eig(eig: EigPairs) -> WhiteningBasis:
    vals = np.asarray(eig.values, dtype=np.float64)
    if np.any(vals <= 0):
        raise RankDeficiencyError("whitening needs strictly positive eigenvalues")
    root = np.sqrt(vals)
    vecs = np.asarray(eig.vectors, dtype=np.float64)
    return WhiteningBasis(W=vecs / root, W_pinv=vecs * root, eig=eig)


def whiten(m2, k: int, tol: float = 1e-10, max_iter: int | None = None, seed: int = 42, method: str = "lanczos"):
    return whitening_from_eig(truncated_eig(m2, k, tol=tol, max_iter=max_iter, seed=seed, method=method))
