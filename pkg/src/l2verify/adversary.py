"""Upper bounds on the robustness margin (attacks, sampling) and the
product-of-spectral-norms lower bound."""

import math
from dataclasses import dataclass

import numpy as np

from .linalg import DEFAULT_TOL, spectral_norm
from .sets import Ball, sample_ball


@dataclass(frozen=True)
class AttackResult:
    value: float
    point: np.ndarray
    feasible: bool


def spec_value_and_grad(net, c, X):
    """``c . f(x)`` and its gradient for a batch of inputs ``X`` (rows).

    The ReLU derivative at exactly zero is taken as zero.
    """
    zs = net.forward_trace(X)
    c = np.asarray(c, dtype=np.float64)
    vals = zs[-1] @ c
    delta = np.broadcast_to(c, zs[-1].shape)
    for k in range(net.num_layers - 1, 0, -1):
        delta = (delta @ net.layers[k].weight) * (zs[k - 1] > 0)
    return vals, delta @ net.layers[0].weight


def pgd_upper_bound(net, c, center, radius, steps=200, restarts=10, step_size=None, seed=0, input_set=None):
    """Minimise ``c . f(x)`` over the ball by projected gradient descent.

    Restart 0 starts at the centre, the others uniformly inside the ball,
    restart ``i`` drawing from its own stream seeded by ``(seed, i)``.
    Steps move along the normalised negative gradient, by ``step_size``
    annealed to zero on a cosine schedule, and then project back. Every evaluated point is feasible, so the smallest value
    seen is an upper bound on the true minimum. ``input_set`` may replace the
    ball by any set with ``project`` and ``sample`` (e.g. a box; steps then
    use the gradient sign).
    """
    region = Ball(center, radius) if input_set is None else input_set
    center = region.center
    if step_size is None:
        scale = region.radius if isinstance(region, Ball) else float(np.max(region.radius, initial=0.0))
        step_size = 0.1 * scale
    # one stream per restart, so a run with more restarts contains every start of a smaller one
    extra = [region.sample(1, np.random.default_rng([seed, i])) for i in range(1, max(restarts, 1))]
    starts = np.vstack([center[None, :], *extra])
    X = region.project(starts)
    vals, grads = spec_value_and_grad(net, c, X)
    best_vals, best_pts = vals.copy(), X.copy()
    use_sign = not isinstance(region, Ball)
    for t in range(steps):
        if use_sign:
            direction = np.sign(grads)
        else:
            norm = np.linalg.norm(grads, axis=1, keepdims=True)
            direction = grads / np.where(norm > 0, norm, 1.0)
        # cosine annealing lets the iterates settle instead of bouncing by a full step
        eta = step_size * 0.5 * (1.0 + math.cos(math.pi * t / steps))
        X = region.project(X - eta * direction)
        vals, grads = spec_value_and_grad(net, c, X)
        better = vals < best_vals
        best_vals[better] = vals[better]
        best_pts[better] = X[better]
    i = int(np.argmin(best_vals))
    point = best_pts[i]
    value = float(net.forward(point) @ np.asarray(c, dtype=np.float64))
    return AttackResult(value, point, bool(region.contains(point, slack=1e-12)))


def hidden_spectral_product(net, tol=DEFAULT_TOL, seed=0):
    """``prod_{k<N} ||W_k||_2`` over every layer but the last."""
    prod = 1.0
    for k, layer in enumerate(net.layers[:-1]):
        prod *= spectral_norm(layer.weight, tol=tol, seed=seed + k)
    return prod


def lip_naive_bound(net, c, center, radius, tol=DEFAULT_TOL, seed=0, product=None):
    """``c.f(center) - radius ||c^T W_N|| prod_{k<N} ||W_k||_2``.

    ``product`` may carry a precomputed :func:`hidden_spectral_product`.
    """
    c = np.asarray(c, dtype=np.float64)
    value = float(net.forward(np.asarray(center, dtype=np.float64)) @ c)
    if product is None:
        product = hidden_spectral_product(net, tol=tol, seed=seed)
    return value - radius * float(np.linalg.norm(c @ net.layers[-1].weight)) * product


def sample_min(net, c, center, radius, n=10000, seed=0):
    """Smallest ``c . f(x)`` over ``n`` points: the centre, then ``n - 1`` uniform draws from the ball."""
    if n < 1:
        raise ValueError("n must be >= 1")
    center = np.asarray(center, dtype=np.float64)
    rng = np.random.default_rng(seed)
    X = np.vstack([center[None, :], sample_ball(center, radius, n - 1, rng)])
    return float(np.min(net.forward(X) @ np.asarray(c, dtype=np.float64)))
