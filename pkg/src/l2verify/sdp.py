"""Offsets for linear lower bounds of ``c . relu(x)`` over l2 balls and
ellipsoids, and the backward pass that uses them layer by layer.

For a fixed slope ``g`` the offset ``h`` returned here satisfies

    c . relu(x) >= g . x + h     for every x in the set,

for any value of the multiplier ``lam >= 0``. The offsets are closed forms of
the dual of a per-coordinate semidefinite relaxation; the multiplier is a
free parameter that the bound optimizer tunes.
"""

from dataclasses import dataclass

import numpy as np

from .box import BackwardPass, LinearBound, relaxations_from_boxes
from .linalg import DEFAULT_MAX_ITER, DEFAULT_TOL, rowwise_l2, spectral_norm
from .relaxation import UNSTABLE, relax_relu
from .sets import Ball

AXIS_FLOOR = 1e-12


@dataclass(frozen=True)
class BallBounds:
    """``||z_k(x) - centers[k]||_2 <= radii[k]`` for every layer ``k``."""

    centers: list
    radii: list

    def __post_init__(self):
        if any(r < 0 for r in self.radii):
            raise ValueError("ball radii must be nonnegative")


@dataclass(frozen=True)
class EllipsoidBounds:
    """``||(z_k(x) - centers[k]) / axes[k]||_2 <= 1`` for every layer ``k``."""

    centers: list
    axes: list

    def __post_init__(self):
        if any(np.any(a <= 0) for a in self.axes):
            raise ValueError("ellipsoid axes must be strictly positive")


def phi(c, g, center, lam):
    """``min(c - g - lam*center, g + lam*center, 0)`` elementwise."""
    c, g, center = (np.asarray(v, dtype=np.float64) for v in (c, g, center))
    return np.minimum(np.minimum(c - g - lam * center, g + lam * center), 0.0)


def sdp_offset(c, g, center, radius, lam):
    """Offset valid on the ball ``B_2(center, radius)``.

    ``lam = 0`` is only finite when ``phi`` vanishes there, in which case the
    limit value 0 is returned.
    """
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    center = np.asarray(center, dtype=np.float64)
    p = phi(c, g, center, lam)
    if lam == 0:
        if np.any(p != 0):
            raise ValueError("offset is unbounded below at lam = 0 unless phi vanishes")
        return 0.0
    return -0.5 * (lam * (radius**2 - center @ center) + (p @ p) / lam)


def optimal_offset_zero_center(c, g, radius):
    """Best offset over ``lam`` for a ball centred at the origin: ``-radius ||min(c-g, g, 0)||``.

    This is also the exact minimum of ``c.relu(x) - g.x`` on that ball.
    """
    c, g = np.asarray(c, dtype=np.float64), np.asarray(g, dtype=np.float64)
    return -radius * float(np.linalg.norm(np.minimum(np.minimum(c - g, g), 0.0)))


def optimal_lambda_zero_center(c, g, radius):
    """Maximiser of :func:`sdp_offset` in ``lam`` at a zero centre, ``||phi|| / radius``."""
    p = phi(c, g, np.zeros_like(np.asarray(g, dtype=np.float64)), 0.0)
    return float(np.linalg.norm(p)) / radius


def point_offset(c, g, center):
    """Exact offset when the set is the single point ``center``."""
    center = np.asarray(center, dtype=np.float64)
    return float(np.asarray(c) @ np.maximum(center, 0.0) - np.asarray(g) @ center)


def extension_tau_mask(box_center, box_radius):
    """Neurons whose interval straddles zero; only these may carry ``tau > 0``."""
    return relax_relu(box_center, box_radius).status == UNSTABLE


def sdp_offset_extension(c, g, ell_center, ell_axes, box_center, box_radius, lam, tau):
    """Offset valid on ``E_2(ell_center, ell_axes)`` intersected with ``B_inf(box_center, box_radius)``.

    ``tau`` multiplies the upper triangle-relaxation line of each neuron; it
    is forced to zero on neurons whose box interval does not straddle zero.
    With ``tau = 0`` and ``ell_axes = r 1`` this equals
    ``sdp_offset(c, g, ell_center, r, lam / r**2)``.
    """
    if lam <= 0:
        raise ValueError("lam must be positive")
    tau = np.asarray(tau, dtype=np.float64)
    if np.any(tau < 0):
        raise ValueError("tau must be nonnegative")
    c, g = np.asarray(c, dtype=np.float64), np.asarray(g, dtype=np.float64)
    xh, ax = np.asarray(ell_center, dtype=np.float64), np.asarray(ell_axes, dtype=np.float64)
    xt, rt = np.asarray(box_center, dtype=np.float64), np.asarray(box_radius, dtype=np.float64)
    tau = np.where(extension_tau_mask(xt, rt), np.broadcast_to(tau, xt.shape), 0.0)
    shift = lam * xh / ax**2
    a = c - g + tau * (rt - xt) - shift
    b = g + tau * (rt + xt) + shift
    p = ax * np.minimum(np.minimum(a, b), 0.0)
    scaled = xh / ax
    return -0.5 * (lam * (1.0 - scaled @ scaled) + 2.0 * tau @ (rt * rt - xt * xt) + (p @ p) / lam)


def ball_propagate(net, center, radius, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER, seed=0):
    """l2 balls around every preactivation from per-layer spectral norms.

    Centres are the preactivations of the centre input itself. ReLU is
    1-Lipschitz, so ``||relu(z) - relu(zc)|| <= ||z - zc||`` and each radius
    is the previous one times the spectral norm of the next weight.
    """
    centers = net.forward_trace(np.asarray(center, dtype=np.float64))
    radii = []
    r = float(radius)
    for k, layer in enumerate(net.layers):
        r = r * spectral_norm(layer.weight, tol=tol, max_iter=max_iter, seed=seed + k)
        radii.append(r)
    return BallBounds(list(centers), radii)


def ellipsoid_propagate(W, center, axes, bias=None, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER, seed=0):
    """Axis-aligned ellipsoid containing ``W E_2(center, axes) + bias``.

    New axes are ``y * ||diag(y)^-1 W diag(axes)||_2`` with ``y`` the row norms
    of ``W diag(axes)``. A zero row maps to a point; its axis is set to
    ``AXIS_FLOOR`` so the set stays a proper ellipsoid.
    """
    W = np.asarray(W, dtype=np.float64)
    center, axes = np.asarray(center, dtype=np.float64), np.asarray(axes, dtype=np.float64)
    M = W * axes
    y = rowwise_l2(M)
    nonzero = y > 0
    scaled = np.where(nonzero[:, None], M / np.where(nonzero, y, 1.0)[:, None], 0.0)
    sigma = spectral_norm(scaled, tol=tol, max_iter=max_iter, seed=seed) if np.any(nonzero) else 0.0
    new_axes = np.where(nonzero, y * sigma, AXIS_FLOOR)
    new_center = W @ center + (0.0 if bias is None else np.asarray(bias, dtype=np.float64))
    return new_center, new_axes


def ellipsoid_bounds(net, center, axes, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER, seed=0):
    """Chain :func:`ellipsoid_propagate` through the network.

    Between layers the centre passes through ReLU, which keeps the set sound
    because ``|relu(a) - relu(b)| <= |a - b|`` coordinatewise.
    """
    centers, all_axes = [], []
    z, a = np.asarray(center, dtype=np.float64), np.broadcast_to(np.asarray(axes, dtype=np.float64), np.shape(center))
    for k, layer in enumerate(net.layers):
        src = z if k == 0 else np.maximum(z, 0.0)
        z, a = ellipsoid_propagate(layer.weight, src, a, layer.bias, tol=tol, max_iter=max_iter, seed=seed + k)
        centers.append(z)
        all_axes.append(a)
    return EllipsoidBounds(centers, all_axes)


def close_bound_ball(bound, center, radius):
    """``min`` of ``g.x + h`` over ``B_2(center, radius)``."""
    return Ball(center, radius).min_linear(bound.g, bound.h)


def sdpcrown_backward(net, c, boxes, alpha, lam, balls=None, ellipsoids=None, tau=None, input_set=None):
    """Backward pass with per-layer offsets valid on l2 balls (or ellipsoids).

    Slopes ``g_k`` follow the ordinary box relaxation pass (relaxations built
    from ``boxes`` with lower slopes ``alpha``). The offset of hidden layer
    ``k`` is replaced by :func:`sdp_offset` on ``balls``, or, when
    ``ellipsoids`` are given, by :func:`sdp_offset_extension` on the ellipsoid
    intersected with the box.
    """
    if (balls is None) == (ellipsoids is None):
        raise ValueError("pass exactly one of balls or ellipsoids")
    N = net.num_layers
    c = np.asarray(c, dtype=np.float64)
    rels = relaxations_from_boxes(boxes, alpha, num_hidden=N - 1)
    lam = np.broadcast_to(np.asarray(lam, dtype=np.float64), (max(N - 1, 0),))
    taus = [np.zeros(n) for n in net.hidden_dims] if tau is None else tau

    gs, hs, cs, ds = [None] * N, [None] * N, [None] * N, [None] * N
    G, H = c, 0.0
    gs[N - 1], hs[N - 1] = G, H
    for k in range(N - 2, -1, -1):
        nxt = net.layers[k + 1]
        ck = nxt.weight.T @ G
        dk = H + G @ nxt.bias
        rel = rels[k]
        G = np.maximum(ck, 0.0) * rel.alpha + np.minimum(ck, 0.0) * rel.beta
        if balls is not None:
            zc, r = balls.centers[k], balls.radii[k]
            off = point_offset(ck, G, zc) if r == 0 else sdp_offset(ck, G, zc, r, lam[k])
        else:
            off = sdp_offset_extension(
                ck, G, ellipsoids.centers[k], ellipsoids.axes[k], boxes.centers[k], boxes.radii[k], lam[k], taus[k]
            )
        H = off + dk
        gs[k], hs[k], cs[k], ds[k] = G, H, ck, dk
    first = net.layers[0]
    bound = LinearBound(first.weight.T @ G, H + G @ first.bias, input_set)
    return BackwardPass(gs, hs, cs, ds, bound)
