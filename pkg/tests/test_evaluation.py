import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from spectral_mom.corpus import LabelSet, SparseCorpus
from spectral_mom.errors import DataError, DimensionMismatchError
from spectral_mom.evaluation import (
    doc_auc,
    doc_auc_pairs,
    evaluate_scores,
    macro_auc,
    precision_at,
)
from spectral_mom.model import SpectralModel


@st.composite
def scored(draw, max_l=40):
    l = draw(st.integers(1, max_l))
    # a small value pool forces plenty of ties
    pool = draw(st.sampled_from([3, 10, 1000]))
    scores = draw(st.lists(st.integers(0, pool), min_size=l, max_size=l))
    pos = draw(st.lists(st.integers(0, l - 1), max_size=l, unique=True))
    return np.asarray(scores, float) / pool, pos


def test_perfect():
    assert doc_auc([0.9, 0.1], [0]) == 1.0


def test_mixed_pairs():
    assert doc_auc([0.5, 0.4, 0.3], [0, 2]) == 0.5


def test_all_ties():
    assert doc_auc([0.2] * 6, [1, 4]) == 0.5


def test_undefined_cases():
    assert doc_auc([0.1, 0.2], []) is None
    assert doc_auc([0.1, 0.2], [0, 1]) is None
    assert doc_auc_pairs([0.1, 0.2], []) is None


def test_out_of_range():
    with pytest.raises(IndexError):
        doc_auc([0.1, 0.2], [2])


@given(scored())
def test_rank_formula_equals_pair_enumeration(case):
    scores, pos = case
    assert doc_auc(scores, pos) == doc_auc_pairs(scores, pos)


@given(scored())
def test_reversal_complements_without_ties(case):
    scores, pos = case
    if len(np.unique(scores)) != scores.size:
        scores = np.arange(scores.size, dtype=float)[np.random.default_rng(len(pos)).permutation(scores.size)]
    a = doc_auc(scores, pos)
    if a is not None:
        assert doc_auc(-scores, pos) == pytest.approx(1.0 - a, abs=1e-15)


@given(scored())
def test_monotone_map_invariance(case):
    scores, pos = case
    assert doc_auc(np.exp(3 * scores) - 7, pos) == doc_auc(scores, pos)


def test_precision_at():
    assert precision_at([0.1, 0.9, 0.5, 0.7], [1, 2], 2) == 0.5
    assert precision_at([0.1, 0.9, 0.5, 0.7], [1, 3], 2) == 1.0


def test_macro_mean_and_skips():
    y = LabelSet.from_rows([[0], [2], [], [0, 1, 2]], 3)
    scores = np.array([[0.9, 0.1, 0.0], [0.5, 0.5, 0.5], [0.1, 0.2, 0.3], [0.3, 0.2, 0.1]])
    r = evaluate_scores(scores, y, at=(1,))
    assert r.macro_auc == 0.75
    assert r.n_skipped == 2
    assert r.per_doc_auc == [1.0, 0.5, None, None]
    # precision averages over every document
    assert r.precision_at[1] == pytest.approx((1 + 0 + 0 + 1) / 4)


def test_no_evaluable_document():
    with pytest.raises(DataError):
        evaluate_scores(np.ones((1, 2)), LabelSet.from_rows([[]], 2))


def test_shape_mismatch():
    with pytest.raises(DimensionMismatchError):
        evaluate_scores(np.ones((2, 2)), LabelSet.from_rows([[0]], 2))


def test_single_document_macro_equals_doc_auc():
    m = SpectralModel(
        np.array([[0.9, 0.1], [0.1, 0.9]]), np.array([[0.7, 0.1], [0.2, 0.2], [0.1, 0.7]]),
        np.array([0.5, 0.5]), np.ones(2),
    )
    c = SparseCorpus.from_rows([[0]], 2)
    y = LabelSet.from_rows([[2]], 3)
    r = macro_auc(m, c, y)
    from spectral_mom.model import predict_labels

    assert r.macro_auc == doc_auc(predict_labels(m, [0]).scores, [2])


def test_report_formats():
    y = LabelSet.from_rows([[0], [1]], 2)
    r = evaluate_scores(np.array([[0.9, 0.1], [0.9, 0.1]]), y, at=(1, 2))
    text = r.text().splitlines()
    assert text[0].split() == ["macro_auc", "0.500000"]
    assert len({line.index(line.split()[1]) for line in text}) == 1  # aligned values
    assert r.csv().splitlines()[0] == "metric,value"
    assert "precision@2,0.5" in r.csv()


@given(st.integers(1, 6), st.integers(1, 12), st.integers(0, 2**31), st.sampled_from([3, 1000]))
def test_batch_matches_per_document_reference(n, l, seed, pool):
    rng = np.random.default_rng(seed)
    scores = rng.integers(0, pool, size=(n, l)) / pool
    rows = [rng.choice(l, size=rng.integers(0, l + 1), replace=False) for _ in range(n)]
    y = LabelSet.from_rows(rows, l)
    ref = [doc_auc(scores[i], rows[i]) for i in range(n)]
    if all(a is None for a in ref):
        with pytest.raises(DataError):
            evaluate_scores(scores, y)
        return
    r = evaluate_scores(scores, y, at=(1, 2, l + 3))
    assert r.per_doc_auc == ref
    for m in (1, 2, l + 3):
        assert r.precision_at[m] == pytest.approx(np.mean([precision_at(scores[i], rows[i], m) for i in range(n)]))
