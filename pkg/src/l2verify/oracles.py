"""Brute-force reference solvers used to check the closed forms.

Nothing here is used by the verifier itself.
"""

import itertools

import numpy as np

MAX_ORACLE_DIM = 12


def orthant_patterns(n):
    """All ``2**n`` sign patterns as a ``(2**n, n)`` array of +1 (nonneg) / -1 (nonpos)."""
    return np.array(list(itertools.product((1.0, -1.0), repeat=n))).reshape(-1, n)


def _min_linear_over_orthant_ball(w, signs, center, radius, iters=200):
    """``min w.x`` over ``{s_i x_i >= 0} ∩ B_2(center, radius)`` for a stack of orthants.

    The optimum lies on the projection path ``x(t) = P(center - t w)`` where
    ``P`` projects onto the orthant: with a multiplier on the ball constraint
    the KKT point is exactly such a projection, and ``w . x(t)`` is
    nonincreasing in ``t``. The largest feasible ``t`` is found by bisection.
    Infeasible orthants return ``+inf``.
    """
    def path(t):
        y = center - t[:, None] * w
        return np.where(signs > 0, np.maximum(y, 0.0), np.minimum(y, 0.0))

    def dist(t):
        return np.linalg.norm(path(t) - center, axis=1)

    m = w.shape[0]
    zero = np.zeros(m)
    feasible = dist(zero) <= radius * (1 + 1e-15) + 1e-300
    # Directions that escape to infinity along the path.
    unbounded = np.any(((signs > 0) & (w < 0)) | ((signs < 0) & (w > 0)), axis=1)
    lo = zero.copy()
    hi = np.ones(m)
    for _ in range(2100):
        grow = unbounded & (dist(hi) <= radius)
        if not np.any(grow):
            break
        hi[grow] *= 2.0
    # Bounded paths stop moving once t passes max |center - x_stop| / |w|.
    with np.errstate(divide="ignore", invalid="ignore"):
        t_stop = np.where(np.abs(w) > 0, (np.abs(center) + radius) / np.abs(w), 0.0)
    hi = np.where(unbounded, hi, np.maximum(t_stop.max(axis=1), 1.0) * 2.0)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        ok = dist(mid) <= radius
        lo = np.where(ok, mid, lo)
        hi = np.where(ok, hi, mid)
    x = path(lo)
    vals = np.einsum("ij,ij->i", w, x)
    return np.where(feasible, vals, np.inf), x


def brute_min_relu_ball(c, g, center, radius, samples=100_000, seed=0, return_point=False):
    """``min c.relu(x) - g.x`` over ``B_2(center, radius)`` by orthant enumeration.

    Inside an orthant the objective is linear, so each piece is solved
    exactly; uniform samples from the ball are added as a safety net.
    """
    c, g, center = (np.asarray(v, dtype=np.float64) for v in (c, g, center))
    n = c.shape[0]
    if n > MAX_ORACLE_DIM:
        raise ValueError(f"orthant oracle supports dimension <= {MAX_ORACLE_DIM}, got {n}")
    signs = orthant_patterns(n)
    w = np.where(signs > 0, c - g, -g)
    vals, pts = _min_linear_over_orthant_ball(w, signs, np.broadcast_to(center, signs.shape), radius)
    i = int(np.argmin(vals))
    best, best_x = float(vals[i]), pts[i]
    if samples:
        from .sets import sample_ball

        X = sample_ball(center, radius, samples, np.random.default_rng(seed))
        sv = np.maximum(X, 0.0) @ c - X @ g
        j = int(np.argmin(sv))
        if sv[j] < best:
            best, best_x = float(sv[j]), X[j]
    return (best, best_x) if return_point else best


def finite_difference(fn, point, step=1e-5):
    """Central-difference gradient of a scalar function."""
    point = np.asarray(point, dtype=np.float64)
    grad = np.zeros_like(point)
    flat, gflat = point.reshape(-1), grad.reshape(-1)
    for i in range(flat.size):
        e = np.zeros_like(flat)
        e[i] = step
        gflat[i] = (fn((flat + e).reshape(point.shape)) - fn((flat - e).reshape(point.shape))) / (2 * step)
    return grad


def socp_inner_value(a, b, lam, const, s, t):
    """Dual objective of one-neuron SOCP with ``mu`` at its optimum.

    ``-(lam const + sum max((a-s)^2, (b-t)^2) / lam) / 2`` for given ``s, t >= 0``.
    """
    a, b, s, t = (np.asarray(v, dtype=np.float64) for v in (a, b, s, t))
    return -0.5 * (lam * const + np.sum(np.maximum((a - s) ** 2, (b - t) ** 2)) / lam)


def socp_grid_search(a, b, lam, const, points=2001, rounds=4):
    """Maximise :func:`socp_inner_value` over ``s, t >= 0`` for scalar ``a, b`` by zooming grids."""
    def best_along(v):
        lo, hi = 0.0, max(abs(v), 1.0) * 2.0
        best = 0.0
        for _ in range(rounds):
            grid = np.linspace(lo, hi, points)
            best = grid[np.argmin((v - grid) ** 2)]
            width = (hi - lo) / (points - 1)
            lo, hi = max(best - 2 * width, 0.0), best + 2 * width
        return best

    s, t = best_along(a), best_along(b)
    return socp_inner_value(a, b, lam, const, s, t), s, t


def rejection_sample_intersection(ell_center, ell_axes, box_center, box_radius, n, seed=0):
    """Uniform samples from ``E_2 ∩ B_inf`` by rejection from the box."""
    rng = np.random.default_rng(seed)
    box_center, box_radius = np.asarray(box_center, float), np.asarray(box_radius, float)
    X = box_center + box_radius * rng.uniform(-1.0, 1.0, size=(n, box_center.shape[0]))
    inside = np.linalg.norm((X - ell_center) / ell_axes, axis=1) <= 1.0
    return X[inside]
