"""Dense matrix helpers: finite-checked arrays, products and matrix norms."""

import numpy as np

DEFAULT_TOL = 1e-9
DEFAULT_MAX_ITER = 10000


class SpectralNormError(RuntimeError):
    """Power iteration hit ``max_iter`` before meeting the tolerance.

    The last estimate (already inflated like a converged result) is kept on
    ``estimate`` so the caller can decide whether to use it.
    """

    def __init__(self, message, estimate):
        super().__init__(message)
        self.estimate = estimate


def as_vector(v, name="vector"):
    arr = np.array(v, dtype=np.float64)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or Inf")
    return arr


def as_matrix(W, name="matrix"):
    arr = np.array(W, dtype=np.float64)
    if arr.ndim != 2 or arr.size == 0:
        raise ValueError(f"{name} must be a nonempty 2-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or Inf")
    return arr


def _check_cols(W, v):
    if W.shape[1] != v.shape[-1]:
        raise ValueError(f"dimension mismatch: matrix {W.shape} and vector of length {v.shape[-1]}")


def matvec(W, v):
    W, v = np.asarray(W, dtype=np.float64), np.asarray(v, dtype=np.float64)
    _check_cols(W, v)
    return W @ v


def matTvec(W, v):
    W, v = np.asarray(W, dtype=np.float64), np.asarray(v, dtype=np.float64)
    if W.shape[0] != v.shape[-1]:
        raise ValueError(f"dimension mismatch: matrix {W.shape} transposed and vector of length {v.shape[-1]}")
    return W.T @ v


def abs_matvec(W, v):
    """``|W| @ v``; used to push box radii through an affine map."""
    W, v = np.asarray(W, dtype=np.float64), np.asarray(v, dtype=np.float64)
    _check_cols(W, v)
    return np.abs(W) @ v


def rowwise_l2(W):
    """Euclidean norm of every row of ``W``."""
    W = np.asarray(W, dtype=np.float64)
    if W.ndim != 2 or W.size == 0:
        raise ValueError("rowwise_l2 expects a nonempty matrix")
    return np.sqrt(np.einsum("ij,ij->i", W, W))


def spectral_norm(W, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER, seed=0):
    """Largest singular value of ``W`` by power iteration on ``W^T W``.

    The start vector is drawn uniformly on the sphere from ``seed`` so the
    result is reproducible. Iteration stops once successive estimates agree
    to ``tol`` relative; the converged value is multiplied by ``1 + 10 tol``
    so that radii built from it over-estimate rather than under-estimate.
    """
    W = as_matrix(W, "W")
    if tol <= 0:
        raise ValueError("tol must be positive")
    inflate = 1.0 + 10.0 * tol
    # Work on W / max|W_ij| so squared norms neither underflow nor overflow.
    scale = float(np.max(np.abs(W)))
    if scale == 0.0:
        return 0.0
    W = W / scale
    n = W.shape[1]
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)

    sigma_prev = np.linalg.norm(W @ v)
    for _ in range(max_iter):
        w = W.T @ (W @ v)
        norm_w = np.linalg.norm(w)
        if norm_w == 0.0:
            # v lies in the null space; with a random start this means W == 0
            # up to rounding, fall back to the Frobenius norm which bounds it.
            return float(np.linalg.norm(W)) * scale * inflate
        v = w / norm_w
        sigma = np.linalg.norm(W @ v)
        if abs(sigma - sigma_prev) <= tol * sigma:
            return float(sigma) * scale * inflate
        sigma_prev = sigma
    raise SpectralNormError(
        f"power iteration did not converge in {max_iter} iterations", float(sigma_prev) * scale * inflate
    )
