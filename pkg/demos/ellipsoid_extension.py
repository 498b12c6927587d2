"""Ellipsoidal intermediates and the box-intersected offset.

A skewed first layer stretches the input ball into an ellipse. The ball
bound wraps it in a circle of radius ``||W||_2``; axis-aligned ellipsoids
follow each output coordinate separately. Intersecting the ellipsoid with
the interval box and tuning the extra multipliers ``tau`` can only raise
the offset at a fixed ``lam``.

    python3 demos/ellipsoid_extension.py
"""

import numpy as np
from scipy.optimize import minimize

from l2verify import Ball, Network, optimize_lower_bound
from l2verify.box import ibp
from l2verify.linalg import rowwise_l2, spectral_norm
from l2verify.sdp import ball_propagate, ellipsoid_propagate, extension_tau_mask, sdp_offset_extension
from l2verify.sets import sample_ball

W = np.array([[0.5, 0.5], [1.5, -0.5]])
rng = np.random.default_rng(0)

print("row norms of W:", rowwise_l2(W))
print("||W||_2:", spectral_norm(W, tol=1e-12))
_, axes = ellipsoid_propagate(W, np.zeros(2), np.ones(2), tol=1e-12)
print("ellipsoid axes:", axes)

# Both sets contain the image of the unit ball
Z = sample_ball(np.zeros(2), 1.0, 20000, rng) @ W.T
print("max ||z|| / ||W||      :", np.max(np.linalg.norm(Z, axis=1)) / spectral_norm(W))
print("max ||z / axes||       :", np.max(np.linalg.norm(Z / axes, axis=1)))
print("area ratio ellipse/disc:", np.prod(axes) / spectral_norm(W) ** 2)

# One-layer offset on the ellipse with the box constraint switched off and on
c, g = np.array([-1.0, -1.0]), np.array([-0.3, -0.6])
box_centre, box_radius = np.zeros(2), np.abs(W) @ np.ones(2)
lam = 1.0
mask = extension_tau_mask(box_centre, box_radius)


def offset(tau):
    return sdp_offset_extension(c, g, np.zeros(2), axes, box_centre, box_radius, lam, np.where(mask, tau, 0.0))


res = minimize(lambda t: -offset(t), np.zeros(2), method="L-BFGS-B", bounds=[(0, None)] * 2)
print(f"\nlam = {lam}: offset with tau = 0 is {offset(np.zeros(2)):.4f}, tuned tau {res.x} gives {-res.fun:.4f}")

# Whole-network comparison
net = Network.from_weights([W, np.array([[1.0, -1.0], [0.5, 1.0]]), np.array([[1.0, -1.0]])], [None, [0.2, -0.1], None])
x_hat = np.array([0.3, -0.2])
for rho in (0.1, 0.3, 0.6):
    vals = {m: optimize_lower_bound(net, np.array([1.0]), Ball(x_hat, rho), m).lower_bound
            for m in ("lirpa-box", "sdp-crown", "sdp-crown-ext")}
    print(f"rho {rho}: " + ", ".join(f"{m} {v:.4f}" for m, v in vals.items()))
