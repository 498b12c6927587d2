"""Two-neuron, three-layer example where the ball offset beats the box.

The network maps (1, 1) to 0 and the input ball has radius 1. Interval
propagation gives the second hidden layer a box of half-width 2 around the
origin, which triangle relaxations turn into a lower bound of -2. Replacing
that layer's offset by the ball-based one, with its multiplier chosen
analytically, gives -sqrt(2), which is also the true minimum.

    python3 demos/worked_example.py
"""

import math

import numpy as np

from l2verify import Ball, Network, ibp, lirpa_backward, optimize_lower_bound, relaxations_from_boxes
from l2verify.adversary import pgd_upper_bound
from l2verify.sdp import ball_propagate, close_bound_ball, sdpcrown_backward

net = Network.from_weights([
    np.array([[0.0, 1.0], [1.0, 0.0]]),
    np.array([[-1.0, 1.0], [1.0, -1.0]]),
    np.array([[-1.0, -1.0]]),
])
x_hat, rho = np.array([1.0, 1.0]), 1.0
c = np.array([1.0])

print("f(x_hat) =", net(x_hat))

# Intermediate boxes from interval propagation
boxes = ibp(net, x_hat, np.full(2, rho))
for k, (z, r) in enumerate(zip(boxes.centers, boxes.radii), start=1):
    print(f"layer {k}: box centre {z}, radius {r}")

# Plain backward pass, lower slopes 0 on the unstable layer
rels = relaxations_from_boxes(boxes, alpha=0.0)
for k, rel in enumerate(rels, start=1):
    print(f"layer {k}: alpha {rel.alpha}, beta {rel.beta}, gamma {rel.gamma}")
box_pass = lirpa_backward(net, rels, c)
print("box bound:", box_pass.bound.g, "x +", box_pass.bound.h)

# Ball intermediates: radii are products of spectral norms
balls = ball_propagate(net, x_hat, rho, tol=1e-12)
print("ball radii:", [round(r, 9) for r in balls.radii])

# Ball offsets with the multiplier that maximises the second layer's offset
lam = [0.0, math.sqrt(1 / 8)]
ball_pass = sdpcrown_backward(net, c, boxes, 0.0, lam, balls=balls)
print("ball bound:", ball_pass.bound.g, "x +", ball_pass.bound.h)
print("closed over the ball:", close_bound_ball(ball_pass.bound, x_hat, rho), " -sqrt(2) =", -math.sqrt(2))

# The optimiser finds the same values from its default start
for method in ("lirpa-box", "sdp-crown"):
    res = optimize_lower_bound(net, c, Ball(x_hat, rho), method)
    print(f"{method:10s} optimised bound {res.lower_bound:.8f} in {res.wall_time:.3f}s")

# And an attack cannot do better than the certificate
print("PGD upper bound:", pgd_upper_bound(net, c, x_hat, rho).value)
