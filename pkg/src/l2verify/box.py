"""Elementwise (box) bounds: interval propagation and the backward linear
relaxation pass.

Layers are indexed from 0 here: ``boxes.centers[k]`` bounds the preactivation
of layer ``k + 1`` in the usual 1-based numbering. Relaxations are needed for
every hidden layer, i.e. ``relaxations[k]`` for ``k = 0 .. N-2``.
"""

from dataclasses import dataclass

import numpy as np

from .relaxation import relax_relu
from .sets import Box

DEFAULT_ALPHA = 0.5


@dataclass(frozen=True)
class BoxBounds:
    centers: list
    radii: list

    def __post_init__(self):
        for r in self.radii:
            if np.any(r < 0):
                raise ValueError("box radii must be nonnegative")

    def __len__(self):
        return len(self.centers)

    def lower(self, k):
        return self.centers[k] - self.radii[k]

    def upper(self, k):
        return self.centers[k] + self.radii[k]

    def box(self, k):
        return Box(self.centers[k], self.radii[k])


@dataclass(frozen=True)
class LinearBound:
    """Certificate ``g.x + h <= c.f(x)`` for every ``x`` in ``input_set``.

    ``g`` may be a matrix with one row per objective, in which case ``h``
    is a vector.
    """

    g: np.ndarray
    h: np.ndarray
    input_set: object = None

    def close(self, input_set=None):
        """Minimum of the linear lower bound over ``input_set``."""
        region = self.input_set if input_set is None else input_set
        if region is None:
            raise ValueError("no input set to close the bound over")
        return region.min_linear(self.g, self.h)


@dataclass(frozen=True)
class BackwardPass:
    """Per-layer coefficients of a backward pass.

    ``gs[k]``/``hs[k]`` give ``gs[k] . z_{k+1}(x) + hs[k] <= c.f(x)``; ``cs[k]``
    and ``ds[k]`` are the coefficients of ``relu(z_{k+1})`` before relaxing.
    """

    gs: list
    hs: list
    cs: list
    ds: list
    bound: LinearBound


def _interval_to_box(lo, hi):
    return (lo + hi) / 2.0, (hi - lo) / 2.0


def ibp_step(layer, center, radius, apply_relu=True):
    """Box of ``W relu(z) + b`` given the box of ``z`` (or of ``x`` when ``apply_relu`` is False)."""
    if apply_relu:
        center, radius = _interval_to_box(np.maximum(center - radius, 0.0), np.maximum(center + radius, 0.0))
    return layer.weight @ center + layer.bias, np.abs(layer.weight) @ radius


def ibp(net, center, radius):
    """Interval bound propagation of the input box ``B_inf(center, radius)``."""
    center = np.asarray(center, dtype=np.float64)
    radius = np.broadcast_to(np.asarray(radius, dtype=np.float64), center.shape)
    if center.shape[-1] != net.input_dim:
        raise ValueError(f"input box has dimension {center.shape[-1]}, network expects {net.input_dim}")
    if np.any(radius < 0):
        raise ValueError("input radius must be nonnegative")
    centers, radii = [], []
    z, r = center, radius
    for k, layer in enumerate(net.layers):
        z, r = ibp_step(layer, z, r, apply_relu=k > 0)
        centers.append(z)
        radii.append(r)
    return BoxBounds(centers, radii)


def relaxations_from_boxes(boxes, alpha=DEFAULT_ALPHA, num_hidden=None):
    """Triangle relaxations for the hidden layers described by ``boxes``.

    ``alpha`` is either a scalar or a list with one array per hidden layer.
    """
    n = len(boxes) - 1 if num_hidden is None else num_hidden
    alphas = alpha if isinstance(alpha, (list, tuple)) else [alpha] * n
    return [relax_relu(boxes.centers[k], boxes.radii[k], alphas[k]) for k in range(n)]


def lirpa_backward(net, relaxations, c, input_set=None):
    """Backward linear relaxation pass for ``c.f(x)``.

    ``c`` is a vector or a matrix with one objective per row. Returns a
    :class:`BackwardPass` whose ``bound`` is expressed over the network input;
    it is valid on whatever input box the relaxations were built from.
    """
    N = net.num_layers
    if len(relaxations) < N - 1:
        raise ValueError(f"need relaxations for {N - 1} hidden layers, got {len(relaxations)}")
    C = np.atleast_2d(np.asarray(c, dtype=np.float64))
    if C.shape[1] != net.output_dim:
        raise ValueError(f"objective vector has length {C.shape[1]}, network outputs {net.output_dim}")
    m = C.shape[0]

    gs, hs, cs, ds = [None] * N, [None] * N, [None] * N, [None] * N
    G, H = C, np.zeros(m)
    gs[N - 1], hs[N - 1] = G, H
    for k in range(N - 2, -1, -1):
        nxt = net.layers[k + 1]
        ck = G @ nxt.weight
        dk = H + G @ nxt.bias
        rel = relaxations[k]
        pos, neg = np.maximum(ck, 0.0), np.minimum(ck, 0.0)
        G = pos * rel.alpha + neg * rel.beta
        H = neg @ rel.gamma + dk
        gs[k], hs[k], cs[k], ds[k] = G, H, ck, dk
    first = net.layers[0]
    g, h = G @ first.weight, H + G @ first.bias
    if np.ndim(c) == 1:
        gs = [x[0] for x in gs]
        hs = [x[0] for x in hs]
        cs = [None if x is None else x[0] for x in cs]
        ds = [None if x is None else x[0] for x in ds]
        g, h = g[0], h[0]
    return BackwardPass(gs, hs, cs, ds, LinearBound(g, h, input_set))


def close_bound_box(bound, center, radius):
    """``min`` of ``g.x + h`` over ``B_inf(center, radius)``."""
    return Box(center, radius).min_linear(bound.g, bound.h)


def intermediate_boxes_backward(net, box, alpha=DEFAULT_ALPHA):
    """Preactivation boxes from backward passes on truncated networks.

    Every neuron of layer ``k`` is bounded above and below by a backward pass
    through layers ``1..k`` that uses the (already refined) boxes of earlier
    layers. Each result is intersected with the interval step from the
    previous refined box, so it is never looser than :func:`ibp`.
    """
    if not isinstance(box, Box):
        box = Box(*box)
    centers, radii = [], []
    for k, layer in enumerate(net.layers):
        if k == 0:
            z, r = ibp_step(layer, box.center, box.radius, apply_relu=False)
        else:
            z_ibp, r_ibp = ibp_step(layer, centers[-1], radii[-1])
            sub = net.truncated(k + 1)
            partial = BoxBounds(list(centers), list(radii))
            rels = relaxations_from_boxes(partial, alpha, num_hidden=k)
            n = layer.out_dim
            spec = np.vstack([np.eye(n), -np.eye(n)])
            bnd = lirpa_backward(sub, rels, spec).bound
            vals = box.min_linear(bnd.g, bnd.h)
            lo = np.maximum(vals[:n], z_ibp - r_ibp)
            hi = np.minimum(-vals[n:], z_ibp + r_ibp)
            hi = np.maximum(hi, lo)  # guard rounding; both sides are sound
            z, r = _interval_to_box(lo, hi)
        centers.append(z)
        radii.append(r)
    return BoxBounds(centers, radii)
