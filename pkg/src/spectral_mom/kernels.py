"""Hot loops of the estimation passes and the tensor power iteration.

Every kernel has a numba implementation (``*_nb``) and a vectorised numpy
implementation (``*_np``). The public names dispatch on
``spectral_mom._accel.HAVE_NUMBA``; both variants stay importable so the
benchmark and the tests can compare them.
"""

import numpy as np

from ._accel import HAVE_NUMBA, njit

_CHUNK_ELEMS = 1 << 22


def canonical_symmetrize(t):
    """Copy each sorted-index entry ``t[i<=j<=k]`` to all its permutations.

    The result is exactly (bitwise) invariant under index permutation.
    """
    k = t.shape[0]
    idx = np.sort(np.indices((k, k, k)).reshape(3, -1), axis=0)
    return t[idx[0], idx[1], idx[2]].reshape(k, k, k)


# --------------------------------------------------------------------------
# pass 2: sum_i z_i (x) z_i (x) z_i with z_i = W^T x_i


@njit(cache=True, nogil=True)
def _cube_sum_nb(indptr, indices, counts, w, start, stop):
    k = w.shape[1]
    out = np.zeros((k, k, k))
    z = np.empty(k)
    for d in range(start, stop):
        z[:] = 0.0
        for p in range(indptr[d], indptr[d + 1]):
            c = counts[p]
            v = indices[p]
            for a in range(k):
                z[a] += c * w[v, a]
        for a in range(k):
            za = z[a]
            for b in range(a, k):
                zab = za * z[b]
                for c3 in range(b, k):
                    out[a, b, c3] += zab * z[c3]
    # mirror the canonical block
    for a in range(k):
        for b in range(a, k):
            for c3 in range(b, k):
                v3 = out[a, b, c3]
                out[a, c3, b] = v3
                out[b, a, c3] = v3
                out[b, c3, a] = v3
                out[c3, a, b] = v3
                out[c3, b, a] = v3
    return out


def _cube_sum_np(indptr, indices, counts, w, start, stop):
    import scipy.sparse as sp

    k = w.shape[1]
    out = np.zeros((k, k, k))
    step = max(1, _CHUNK_ELEMS // max(1, k * k))
    for lo in range(start, stop, step):
        hi = min(stop, lo + step)
        a, b = indptr[lo], indptr[hi]
        x = sp.csr_matrix(
            (counts[a:b].astype(np.float64), indices[a:b], indptr[lo : hi + 1] - a),
            shape=(hi - lo, w.shape[0]),
        )
        z = np.asarray(x @ w)
        zz = (z[:, :, None] * z[:, None, :]).reshape(hi - lo, k * k)
        out += (zz.T @ z).reshape(k, k, k)
    return canonical_symmetrize(out)


# --------------------------------------------------------------------------
# pass 3: R[l, :] += y_il * ((P^T x_i)^2 - repeat_correction)


@njit(cache=True, nogil=True)
def _label_proj_nb(x_ptr, x_idx, x_cnt, y_ptr, y_idx, y_cnt, p, n_labels, exclude_repeats, start, stop):
    k = p.shape[1]
    out = np.zeros((n_labels, k))
    g = np.empty(k)
    for d in range(start, stop):
        if y_ptr[d] == y_ptr[d + 1]:
            continue
        g[:] = 0.0
        for q in range(x_ptr[d], x_ptr[d + 1]):
            c = x_cnt[q]
            v = x_idx[q]
            for a in range(k):
                g[a] += c * p[v, a]
        for a in range(k):
            g[a] = g[a] * g[a]
        if exclude_repeats:
            for q in range(x_ptr[d], x_ptr[d + 1]):
                c = x_cnt[q]
                v = x_idx[q]
                for a in range(k):
                    g[a] -= c * p[v, a] * p[v, a]
        for q in range(y_ptr[d], y_ptr[d + 1]):
            lab = y_idx[q]
            cy = y_cnt[q]
            for a in range(k):
                out[lab, a] += cy * g[a]
    return out


def _label_proj_np(x_ptr, x_idx, x_cnt, y_ptr, y_idx, y_cnt, p, n_labels, exclude_repeats, start, stop):
    import scipy.sparse as sp

    n = stop - start
    a, b = x_ptr[start], x_ptr[stop]
    x = sp.csr_matrix(
        (x_cnt[a:b].astype(np.float64), x_idx[a:b], x_ptr[start : stop + 1] - a),
        shape=(n, p.shape[0]),
    )
    a, b = y_ptr[start], y_ptr[stop]
    y = sp.csr_matrix(
        (y_cnt[a:b].astype(np.float64), y_idx[a:b], y_ptr[start : stop + 1] - a),
        shape=(n, n_labels),
    )
    g = np.asarray(x @ p) ** 2
    if exclude_repeats:
        g -= np.asarray(x @ (p * p))
    return np.asarray(y.T @ g)


# --------------------------------------------------------------------------
# tensor power iteration  theta <- T(., theta, theta) / ||.||


@njit(cache=True, nogil=True)
def _contract2_nb(t, theta):
    k = t.shape[0]
    out = np.zeros(k)
    for i in range(k):
        s = 0.0
        for j in range(k):
            tj = 0.0
            for l in range(k):
                tj += t[i, j, l] * theta[l]
            s += tj * theta[j]
        out[i] = s
    return out


@njit(cache=True, nogil=True)
def _power_iterate_nb(t, theta, iters, tol):
    k = t.shape[0]
    th = theta.copy()
    used = 0
    for it in range(iters):
        nxt = _contract2_nb(t, th)
        nrm = 0.0
        for i in range(k):
            nrm += nxt[i] * nxt[i]
        nrm = np.sqrt(nrm)
        used = it + 1
        if nrm == 0.0:
            break
        diff = 0.0
        for i in range(k):
            nxt[i] /= nrm
            diff += (nxt[i] - th[i]) ** 2
        th = nxt
        if np.sqrt(diff) <= tol:
            break
    return th, used


def _contract2_np(t, theta):
    return (t @ theta) @ theta


def _power_iterate_np(t, theta, iters, tol):
    th = theta.copy()
    used = 0
    for it in range(iters):
        nxt = (t @ th) @ th
        nrm = np.sqrt(nxt @ nxt)
        used = it + 1
        if nrm == 0.0:
            break
        nxt = nxt / nrm
        done = np.sqrt(np.sum((nxt - th) ** 2)) <= tol
        th = nxt
        if done:
            break
    return th, used


if HAVE_NUMBA:
    cube_sum = _cube_sum_nb
    label_projection = _label_proj_nb
    contract2 = _contract2_nb
    power_iterate = _power_iterate_nb
else:
    cube_sum = _cube_sum_np
    label_projection = _label_proj_np
    contract2 = _contract2_np
    power_iterate = _power_iterate_np

NUMPY_KERNELS = {
    "cube_sum": _cube_sum_np,
    "label_projection": _label_proj_np,
    "contract2": _contract2_np,
    "power_iterate": _power_iterate_np,
}
NUMBA_KERNELS = (
    {
        "cube_sum": _cube_sum_nb,
        "label_projection": _label_proj_nb,
        "contract2": _contract2_nb,
        "power_iterate": _power_iterate_nb,
    }
    if HAVE_NUMBA
    else {}
)
