"""How the box-versus-ball gap grows with width.

For ``f(x) = -sum relu(x_i)`` on a ball of radius 1 at the origin, the best
box-derived offset is ``-n/2`` while the ball offset is ``-sqrt(n)/2``. The
ratio is ``sqrt(n)``. Also shown are the certified lower bounds, the exact
minimum ``-sqrt(n)`` (reached at ``x = 1/sqrt(n)``) and what PGD finds; the
attack starts on a flat piece at the origin, so it lags at large ``n``.

    python3 demos/sqrt_n_gap.py
"""

import math

import numpy as np

from l2verify import Ball, Network, OptimizerConfig, optimize_lower_bound
from l2verify.adversary import pgd_upper_bound

cfg = OptimizerConfig(spectral_tol=1e-12)
print(f"{'n':>4} {'box offset':>12} {'ball offset':>12} {'ratio':>8} {'sqrt(n)':>8} "
      f"{'box bound':>10} {'ball bound':>10} {'exact':>8} {'PGD':>8}")
for n in (1, 4, 16, 64, 256):
    net = Network.from_weights([np.eye(n), -np.ones((1, n))])
    ball = Ball(np.zeros(n), 1.0)
    c = np.array([1.0])
    off_box = optimize_lower_bound(net, c, ball, "lirpa-box", cfg, objective="offset").lower_bound
    off_ball = optimize_lower_bound(net, c, ball, "sdp-crown", cfg, objective="offset").lower_bound
    lb_box = optimize_lower_bound(net, c, ball, "lirpa-box", cfg).lower_bound
    lb_ball = optimize_lower_bound(net, c, ball, "sdp-crown", cfg).lower_bound
    pgd = pgd_upper_bound(net, c, np.zeros(n), 1.0).value
    print(f"{n:4d} {off_box:12.6f} {off_ball:12.6f} {off_box / off_ball:8.4f} {math.sqrt(n):8.4f} "
          f"{lb_box:10.4f} {lb_ball:10.4f} {-math.sqrt(n):8.4f} {pgd:8.4f}")
