"""Slow, obviously-correct reference implementations used only by the tests.

Everything here enumerates token positions explicitly, so it is only usable
on tiny corpora.
"""

import itertools

import numpy as np


def tokens(rows_obj, i):
    """Token list of row ``i`` with each index repeated by its count."""
    return np.repeat(rows_obj.row(i), rows_obj.row_counts(i)).tolist()


def _positions(n, order, distinct):
    idx = itertools.product(range(n), repeat=order)
    if distinct:
        return [p for p in idx if len(set(p)) == order]
    return list(idx)


def m2_oracle(corpus, estimator):
    d = corpus.n_words
    out = np.zeros((d, d))
    norm = 0
    for i in range(corpus.n_docs):
        tok = tokens(corpus, i)
        pos = _positions(len(tok), 2, estimator == "unbiased")
        norm += len(pos)
        for p, q in pos:
            out[tok[p], tok[q]] += 1.0
    return out / norm


def t3_oracle(corpus, w, estimator):
    """Whitened third moment from the explicit ``D x D x D`` tensor."""
    d = corpus.n_words
    m3 = np.zeros((d, d, d))
    norm = 0
    for i in range(corpus.n_docs):
        tok = tokens(corpus, i)
        pos = _positions(len(tok), 3, estimator == "unbiased")
        norm += len(pos)
        for p, q, r in pos:
            m3[tok[p], tok[q], tok[r]] += 1.0
    m3 /= norm
    return np.einsum("abc,ai,bj,ck->ijk", m3, w, w, w)


def raw_q_oracle(corpus, labels, w, u, estimator):
    p = w @ u
    out = np.zeros((labels.n_labels, u.shape[1]))
    norm = 0
    for i in range(corpus.n_docs):
        tok = tokens(corpus, i)
        labs = tokens(labels, i)
        pos = _positions(len(tok), 2, estimator == "unbiased")
        norm += len(pos) * len(labs)
        for lab in labs:
            for a, b in pos:
                out[lab] += p[tok[a]] * p[tok[b]]
    return out / norm


def orthogonal_tensor(rng, k, dim=None, lam_range=(1.0, 5.0)):
    """``sum_k lam_k v_k^(x)3`` with orthonormal ``v`` and distinct ``lam``."""
    dim = k if dim is None else dim
    q, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    v = q[:, :k]
    while True:
        lam = rng.uniform(*lam_range, size=k)
        if k == 1 or np.min(np.diff(np.sort(lam))) > 0.05:
            break
    t = np.einsum("r,ir,jr,kr->ijk", lam, v, v, v)
    return t, lam, v


def best_permutation(cost):
    """Brute-force minimum-cost assignment; row ``r`` goes to ``perm[r]``."""
    k = cost.shape[0]
    best, best_cost = None, np.inf
    for perm in itertools.permutations(range(k)):
        c = cost[np.arange(k), perm].sum()
        if c < best_cost - 1e-15:
            best, best_cost = perm, c
    return np.array(best), best_cost
