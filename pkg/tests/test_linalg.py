import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from l2verify.linalg import (
    SpectralNormError,
    abs_matvec,
    as_matrix,
    as_vector,
    matTvec,
    matvec,
    rowwise_l2,
    spectral_norm,
)


def gram_oracle(W):
    return float(np.sqrt(np.linalg.eigvalsh(W.T @ W)[-1]))


@pytest.mark.parametrize(
    "W, expected",
    [
        ([[0.0, 1.0], [1.0, 0.0]], 1.0),
        ([[-1.0, 1.0], [1.0, -1.0]], 2.0),
        (np.eye(5), 1.0),
    ],
)
def test_spectral_norm_examples(W, expected):
    assert spectral_norm(np.array(W)) == pytest.approx(expected, rel=1e-7)


def test_spectral_norm_overestimates_by_inflation():
    tol = 1e-6
    s = spectral_norm(np.eye(3), tol=tol)
    assert s == pytest.approx(1.0 + 10 * tol, rel=1e-12)


def test_spectral_norm_deterministic():
    W = np.random.default_rng(3).normal(size=(6, 4))
    assert spectral_norm(W, seed=7) == spectral_norm(W, seed=7)


def test_spectral_norm_nonconvergence_carries_estimate():
    # Two nearly equal singular values make power iteration crawl.
    W = np.diag([1.0, 1.0 - 1e-9, 0.5])
    with pytest.raises(SpectralNormError) as info:
        spectral_norm(W, tol=1e-15, max_iter=3)
    assert info.value.estimate > 0


def test_spectral_norm_rejects_bad_input():
    with pytest.raises(ValueError):
        spectral_norm(np.zeros((0, 2)))
    with pytest.raises(ValueError):
        spectral_norm(np.eye(2), tol=0.0)
    with pytest.raises(ValueError):
        spectral_norm(np.array([[np.nan]]))


def test_spectral_norm_zero_matrix():
    assert spectral_norm(np.zeros((2, 3))) == 0.0


def test_spectral_norm_matches_eigen_oracle():
    rng = np.random.default_rng(0)
    for _ in range(50):
        W = rng.normal(size=tuple(rng.integers(1, 9, size=2)))
        tol = 1e-12
        est = spectral_norm(W, tol=tol, max_iter=200000) / (1 + 10 * tol)
        assert est == pytest.approx(gram_oracle(W), rel=1e-6)


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 6), st.integers(1, 6)), elements=st.floats(-5, 5)))
def test_spectral_norm_upper_bounds_every_direction(W):
    s = spectral_norm(W, max_iter=100000)
    U = np.random.default_rng(1).normal(size=(100, W.shape[1]))
    U /= np.linalg.norm(U, axis=1, keepdims=True)
    assert np.all(np.linalg.norm(U @ W.T, axis=1) <= s * (1 + 1e-9) + 1e-12)


@pytest.mark.parametrize(
    "W, expected",
    [
        ([[0.5, 0.5], [1.5, -0.5]], [0.70710678118654757, 1.5811388300841898]),
        (np.eye(3), [1.0, 1.0, 1.0]),
        ([[3.0, 4.0]], [5.0]),
    ],
)
def test_rowwise_l2_examples(W, expected):
    np.testing.assert_allclose(rowwise_l2(np.array(W)), expected, rtol=1e-12)


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 8), st.integers(1, 8)), elements=st.floats(-100, 100)))
def test_rowwise_l2_squares(W):
    np.testing.assert_allclose(rowwise_l2(W) ** 2, (W * W).sum(axis=1), rtol=1e-12, atol=1e-300)


def test_products():
    np.testing.assert_array_equal(matvec([[0.0, 1.0], [1.0, 0.0]], [1.0, 1.0]), [1.0, 1.0])
    np.testing.assert_array_equal(abs_matvec([[-1.0, 1.0], [1.0, -1.0]], [1.0, 1.0]), [2.0, 2.0])
    v = np.array([0.3, -2.0, 5.0])
    np.testing.assert_array_equal(matTvec(np.eye(3), v), v)


def test_products_reject_mismatch():
    with pytest.raises(ValueError):
        matvec(np.eye(2), np.ones(3))
    with pytest.raises(ValueError):
        matTvec(np.eye(2), np.ones(3))
    with pytest.raises(ValueError):
        abs_matvec(np.ones((2, 3)), np.ones(2))


def test_finite_checks():
    with pytest.raises(ValueError):
        as_vector([1.0, np.inf])
    with pytest.raises(ValueError):
        as_matrix([[np.nan, 0.0]])
    assert as_vector([1, 2]).dtype == np.float64


@pytest.mark.parametrize("scale", [1e-150, 1e-80, 1e150])
def test_spectral_norm_extreme_scales(scale):
    W = np.array([[3.0, 0.0], [0.0, 4.0]]) * scale
    assert spectral_norm(W) == pytest.approx(4.0 * scale, rel=1e-8)
