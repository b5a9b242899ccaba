import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import best_permutation, orthogonal_tensor
from spectral_mom.errors import DecompositionError
from spectral_mom.kernels import canonical_symmetrize
from spectral_mom.tensorpm import (
    default_restarts,
    deflate,
    rank_one,
    tensor_apply,
    tensor_power_method,
)


def e(i, d):
    v = np.zeros(d)
    v[i] = 1.0
    return v


def cube(v):
    return np.einsum("i,j,k->ijk", v, v, v)


def aligned_errors(lam, v, res):
    """Per-pair vector and value errors after optimal matching."""
    cost = np.linalg.norm(v[:, :, None] - res.vectors[:, None, :], axis=0)
    perm, _ = best_permutation(cost)
    return cost[np.arange(len(lam)), perm], np.abs(lam - res.values[perm])


def test_rank_one_scalar():
    r = tensor_power_method(2.0 * cube(e(0, 1)), 1)
    assert r.values[0] == pytest.approx(2.0, abs=1e-12)
    assert r.vectors[0, 0] == pytest.approx(1.0, abs=1e-12)


def test_two_component_example():
    t = 2.0 * cube(e(0, 2)) + cube(e(1, 2))
    r = tensor_power_method(t, 2)
    np.testing.assert_allclose(r.values, [2.0, 1.0], atol=1e-10)
    np.testing.assert_allclose(np.abs(r.vectors), np.eye(2), atol=1e-8)


def test_negative_eigenvalue_sign_flip():
    r = tensor_power_method(-3.0 * cube(e(1, 2)), 1)
    assert r.values[0] == pytest.approx(3.0)
    np.testing.assert_allclose(r.vectors[:, 0], [0.0, -1.0], atol=1e-10)


def test_zero_tensor_fails():
    with pytest.raises(DecompositionError, match="not positive"):
        tensor_power_method(np.zeros((2, 2, 2)), 1)


def test_argument_checks():
    with pytest.raises(ValueError):
        tensor_power_method(np.zeros((2, 2, 2)), 3)
    with pytest.raises(ValueError):
        tensor_power_method(np.zeros((2, 2, 2)), 1, restarts=0)
    assert default_restarts(5) == 20


def test_random_basis_321():
    t, lam, v = orthogonal_tensor(np.random.default_rng(5), 3)
    t = np.einsum("r,ir,jr,kr->ijk", np.array([3.0, 2.0, 1.0]), v, v, v)
    r = tensor_power_method(t, 3)
    verr, lerr = aligned_errors(np.array([3.0, 2.0, 1.0]), v, r)
    assert verr.max() <= 1e-6 and lerr.max() <= 1e-6


@settings(max_examples=40)
@given(st.integers(1, 8), st.integers(0, 2**31))
def test_orthogonal_recovery_and_reconstruction(k, seed):
    t, lam, v = orthogonal_tensor(np.random.default_rng(seed), k)
    r = tensor_power_method(t, k)
    verr, lerr = aligned_errors(lam, v, r)
    assert verr.max() <= 1e-6 and lerr.max() <= 1e-6
    recon = sum(rank_one(r.values[j], r.vectors[:, j]) for j in range(k))
    assert np.linalg.norm(t - recon) <= 1e-6
    gram = r.vectors.T @ r.vectors
    assert np.abs(gram - np.eye(k)).max() <= 1e-8
    assert np.all(r.values > 0)
    assert np.all(r.iterations_used <= 100)


@settings(max_examples=25)
@given(st.integers(2, 6), st.integers(0, 2**31))
def test_perturbation_robustness(k, seed):
    rng = np.random.default_rng(seed)
    t, lam, v = orthogonal_tensor(rng, k)
    noise = canonical_symmetrize(rng.standard_normal((k, k, k)))
    eps = 1e-3
    noise *= eps / np.linalg.norm(noise)  # Frobenius norm bounds the spectral norm
    r = tensor_power_method(t + noise, k)
    verr, lerr = aligned_errors(lam, v, r)
    assert np.all(verr <= 2 * 8 * eps / lam)
    assert np.all(lerr <= 2 * 5 * eps)


def test_deterministic_and_thread_independent():
    t, _, _ = orthogonal_tensor(np.random.default_rng(9), 5)
    t = t + 1e-3 * canonical_symmetrize(np.random.default_rng(10).standard_normal((5, 5, 5)))
    a = tensor_power_method(t, 5, seed=3)
    b = tensor_power_method(t, 5, seed=3)
    c = tensor_power_method(t, 5, seed=3, threads=4)
    for x in (b, c):
        assert np.array_equal(a.values, x.values)
        assert np.array_equal(a.vectors, x.vectors)
        assert np.array_equal(a.iterations_used, x.iterations_used)


def test_ties_go_to_lowest_restart():
    # two equal components: whichever the first restart reaching the max finds wins
    t = cube(e(0, 2)) + cube(e(1, 2))
    r = tensor_power_method(t, 1, restarts=7, seed=0)
    rng = np.random.default_rng(0)
    starts = rng.standard_normal((7, 2))
    first = int(np.argmax(np.abs(starts[0])))
    assert abs(r.vectors[first, 0]) == pytest.approx(1.0)


# ---- deflation


def test_deflate_exact_cancellation():
    t = 2.0 * cube(e(0, 3))
    assert not deflate(t, 2.0, e(0, 3)).any()


def test_deflate_zero_lambda_is_identity():
    t = canonical_symmetrize(np.random.default_rng(0).standard_normal((3, 3, 3)))
    u = np.array([0.6, 0.8, 0.0])
    out = deflate(t, 0.0, u)
    assert np.array_equal(out, t) and out is not t


def test_deflate_two_component():
    t = 2.0 * cube(e(0, 2)) + cube(e(1, 2))
    np.testing.assert_array_equal(deflate(t, 2.0, e(0, 2)), cube(e(1, 2)))


def test_deflate_rejects_non_unit():
    with pytest.raises(ValueError, match="unit norm"):
        deflate(np.zeros((2, 2, 2)), 1.0, np.array([1.0, 1.0]))


@given(st.integers(1, 5), st.integers(0, 2**31), st.floats(-5, 5))
def test_deflate_preserves_symmetry(k, seed, lam):
    rng = np.random.default_rng(seed)
    t = canonical_symmetrize(rng.standard_normal((k, k, k)))
    u = rng.standard_normal(k)
    u /= np.linalg.norm(u)
    out = deflate(t, lam, u)
    for perm in [(0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)]:
        assert np.array_equal(out, out.transpose(perm))
    assert tensor_apply(out, u, u, u) == pytest.approx(tensor_apply(t, u, u, u) - lam, abs=1e-9)
