"""Projected Adam ascent on the relaxation parameters, and robustness margins.

A :class:`BoundProblem` fixes everything that does not change during
optimisation (intermediate boxes, balls, ellipsoids, relaxation intercepts)
and evaluates the certified lower bound together with its exact gradient
with respect to

* ``alpha``: lower ReLU slopes, one array per hidden layer, in ``[0, 1]``;
* ``lam``: one multiplier per hidden layer, ``>= LAMBDA_MIN``;
* ``tau``: box-line multipliers per hidden neuron, ``>= 0`` (extension only).

All arrays carry a leading axis over objective rows so several margins are
optimised at once; rows never interact.

Gradient conventions at kinks (any subgradient is valid, these are fixed):
the slope of ``g = max(c,0) alpha + min(c,0) beta`` with respect to ``c`` at
``c = 0`` is ``beta``; in ``min(a, b, 0)`` ties prefer ``0``, then ``a``;
``d||g||/dg`` at ``g = 0`` is ``0``; ``d|g|/dg`` at ``0`` is ``0``.
"""

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize_scalar

from .box import ibp, intermediate_boxes_backward, relaxations_from_boxes
from .linalg import DEFAULT_TOL
from .network import margin_spec
from .relaxation import UNSTABLE
from .sdp import ball_propagate, ellipsoid_bounds
from .sets import Ball, Box, Ellipsoid

LAMBDA_MIN = 1e-8
LAMBDA_MAX = 1e6
METHODS = ("lirpa-box", "sdp-crown", "sdp-crown-ext")


@dataclass(frozen=True)
class OptimizerConfig:
    iterations: int = 300
    lr_alpha: float = 0.5
    lr_lambda: float = 0.05
    decay: float = 0.98
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0
    alpha_init: float = 0.5
    intermediate: str = "ibp"
    spectral_tol: float = DEFAULT_TOL
    debug: bool = False

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.lr_alpha <= 0 or self.lr_lambda <= 0:
            raise ValueError("learning rates must be positive")
        if not 0 < self.decay <= 1:
            raise ValueError("decay must lie in (0, 1]")
        if self.intermediate not in ("ibp", "backward"):
            raise ValueError("intermediate must be 'ibp' or 'backward'")


@dataclass
class RelaxationParams:
    alpha: list
    lam: np.ndarray
    tau: list

    def copy(self):
        return RelaxationParams([a.copy() for a in self.alpha], self.lam.copy(), [t.copy() for t in self.tau])

    def arrays(self):
        return [*self.alpha, self.lam, *self.tau]

    def row(self, i):
        return RelaxationParams([a[i] for a in self.alpha], self.lam[i], [t[i] for t in self.tau])


@dataclass
class VerificationResult:
    lower_bound: float
    best_params: RelaxationParams
    upper_bound: float = None
    status: str = "unknown"
    wall_time: float = 0.0
    history: list = field(default_factory=list, repr=False)


def _status(lower, upper):
    if lower >= 0:
        return "verified"
    if upper is not None and upper < 0:
        return "falsified"
    return "unknown"


def _min3_branches(a, b):
    """Selectors for which argument attains ``min(a, b, 0)``."""
    sel_a = (a <= b) & (a < 0)
    sel_b = (b < a) & (b < 0)
    return sel_a, sel_b


class BoundProblem:
    """Certified lower bound of ``C f(x)`` over ``input_set`` as a function of the relaxation parameters.

    ``objective="bound"`` minimises the linear bound over the input set;
    ``objective="offset"`` reports only its intercept ``h``.
    """

    def __init__(self, net, C, input_set, method="sdp-crown", intermediate="ibp",
                 spectral_tol=DEFAULT_TOL, seed=0, objective="bound"):
        if method not in METHODS:
            raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
        if objective not in ("bound", "offset"):
            raise ValueError("objective must be 'bound' or 'offset'")
        if isinstance(input_set, Box) and method != "lirpa-box":
            raise ValueError(f"{method} needs a ball or ellipsoid input set")
        if input_set.dim != net.input_dim:
            raise ValueError(f"input set has dimension {input_set.dim}, network expects {net.input_dim}")
        self.net = net
        self.C = np.atleast_2d(np.asarray(C, dtype=np.float64))
        if self.C.shape[1] != net.output_dim:
            raise ValueError("objective length does not match the network output")
        self.input_set = input_set
        if method == "sdp-crown-ext" and isinstance(input_set, Ball) and input_set.radius == 0:
            # A single point: the ball offsets are already exact there.
            method = "sdp-crown"
        self.method = method
        self.objective = objective

        enclosing = input_set.enclosing_box()
        if intermediate == "ibp":
            self.boxes = ibp(net, enclosing.center, enclosing.radius)
        else:
            self.boxes = intermediate_boxes_backward(net, enclosing)
        N = net.num_layers
        self.relax = relaxations_from_boxes(self.boxes, 0.0, num_hidden=N - 1)
        self.unstable = [r.status == UNSTABLE for r in self.relax]

        self.balls = self.ellipsoids = None
        if method == "sdp-crown":
            ball = input_set if isinstance(input_set, Ball) else input_set.enclosing_ball()
            self.balls = ball_propagate(net, ball.center, ball.radius, tol=spectral_tol, seed=seed)
        elif method == "sdp-crown-ext":
            if isinstance(input_set, Ball):
                axes = np.full(input_set.dim, input_set.radius)
            else:
                axes = input_set.axes
            self.ellipsoids = ellipsoid_bounds(net, input_set.center, axes, tol=spectral_tol, seed=seed)
        self.tau_mask = [u.copy() for u in self.unstable]

    @property
    def num_specs(self):
        return self.C.shape[0]

    # -- parameters --------------------------------------------------------

    def initial_params(self, alpha_init=0.5):
        m = self.num_specs
        alpha = [np.full((m, n), float(alpha_init)) for n in self.net.hidden_dims]
        lam = np.ones((m, self.net.num_layers - 1))
        tau = [np.zeros((m, n)) for n in self.net.hidden_dims]
        params = RelaxationParams(alpha, lam, tau)
        if self.method != "lirpa-box":
            self._init_lambda(params)
        return params

    def _init_lambda(self, params):
        """Per-layer multiplier at its maximiser for the initial slopes.

        Each layer offset is concave in its own multiplier and no other term
        depends on it, so this is a one-dimensional search; at zero centres
        the maximiser is available in closed form.
        """
        trace = self._forward(params)
        for k in range(self.net.num_layers - 1):
            Ck, Gk = trace["C"][k], trace["G"][k]
            for i in range(self.num_specs):
                params.lam[i, k] = self._best_lambda(k, Ck[i : i + 1], Gk[i : i + 1], params.tau[k][i : i + 1])

    def _best_lambda(self, k, Ck, Gk, tau_k):
        def off(lam):
            return self._offset(k, Ck, Gk, np.array([lam]), tau_k, grad=False)[0][0]

        if self.balls is not None:
            zc, r = self.balls.centers[k], self.balls.radii[k]
            if r == 0:
                return 1.0
            if not np.any(zc):
                p = np.minimum(np.minimum(Ck - Gk, Gk), 0.0)
                return max(float(np.linalg.norm(p)) / r, LAMBDA_MIN)
        else:
            zc, ax = self.ellipsoids.centers[k], self.ellipsoids.axes[k]
            if not np.any(zc) and not np.any(tau_k):
                p = ax * np.minimum(np.minimum(Ck - Gk, Gk), 0.0)
                return max(float(np.linalg.norm(p)), LAMBDA_MIN)
        res = minimize_scalar(
            lambda t: -off(math.exp(t)),
            bounds=(math.log(LAMBDA_MIN), math.log(LAMBDA_MAX)),
            method="bounded",
            options={"xatol": 1e-8},
        )
        return float(min(max(math.exp(res.x), LAMBDA_MIN), LAMBDA_MAX))

    def project(self, params):
        for k, a in enumerate(params.alpha):
            np.clip(a, 0.0, 1.0, out=a)
        np.maximum(params.lam, LAMBDA_MIN, out=params.lam)
        for k, t in enumerate(params.tau):
            np.maximum(t, 0.0, out=t)
            t[:, ~self.tau_mask[k]] = 0.0
        return params

    def check_feasible(self, params):
        for a in params.alpha:
            assert np.all((a >= 0) & (a <= 1)), "alpha left [0, 1]"
        assert np.all(params.lam >= LAMBDA_MIN), "lam below its floor"
        for k, t in enumerate(params.tau):
            assert np.all(t >= 0), "tau negative"
            assert not np.any(t[:, ~self.tau_mask[k]]), "tau on a stable neuron"

    # -- evaluation --------------------------------------------------------

    def _slopes(self, k, alpha_k):
        rel = self.relax[k]
        return np.where(self.unstable[k], alpha_k, rel.alpha)

    def _offset(self, k, Ck, Gk, lam_k, tau_k, grad=True):
        """Layer offset and its partials ``(dC, dG, dlam, dtau)``."""
        m = Ck.shape[0]
        if self.method == "lirpa-box":
            gamma = self.relax[k].gamma
            off = np.minimum(Ck, 0.0) @ gamma
            if not grad:
                return off, None
            return off, (np.where(Ck < 0, gamma, 0.0), np.zeros_like(Gk), np.zeros(m), np.zeros_like(Gk))

        if self.balls is not None:
            zc, r = self.balls.centers[k], self.balls.radii[k]
            if r == 0:
                off = Ck @ np.maximum(zc, 0.0) - Gk @ zc
                if not grad:
                    return off, None
                dC = np.broadcast_to(np.maximum(zc, 0.0), Ck.shape).copy()
                dG = np.broadcast_to(-zc, Gk.shape).copy()
                return off, (dC, dG, np.zeros(m), np.zeros_like(Gk))
            lam = lam_k[:, None]
            a = Ck - Gk - lam * zc
            b = Gk + lam * zc
            P = np.minimum(np.minimum(a, b), 0.0)
            const = r * r - zc @ zc
            sq = np.einsum("ij,ij->i", P, P)
            off = -0.5 * (lam_k * const + sq / lam_k)
            # lam = 0 is admissible when phi vanishes there, and then the offset is 0
            limit = ~np.any(np.minimum(Ck - Gk, Gk) < 0, axis=1) & (off < 0)
            off = np.where(limit, 0.0, off)
            if not grad:
                return off, None
            sel_a, sel_b = _min3_branches(a, b)
            dP = np.where(limit[:, None], 0.0, -P / lam)
            dC = dP * sel_a
            dG = dP * (sel_b.astype(float) - sel_a)
            dlam = -0.5 * const + 0.5 * sq / lam_k**2 + (dP * zc * (sel_b.astype(float) - sel_a)).sum(axis=1)
            dlam = np.where(limit, 0.0, dlam)
            return off, (dC, dG, dlam, np.zeros_like(Gk))

        zc, ax = self.ellipsoids.centers[k], self.ellipsoids.axes[k]
        xt, rt = self.boxes.centers[k], self.boxes.radii[k]
        mask = self.tau_mask[k]
        lam = lam_k[:, None]
        tau = np.where(mask, tau_k, 0.0)
        w = zc / ax**2
        a = Ck - Gk + tau * (rt - xt) - lam * w
        b = Gk + tau * (rt + xt) + lam * w
        Q = np.minimum(np.minimum(a, b), 0.0)
        P = ax * Q
        scaled = zc / ax
        const = 1.0 - scaled @ scaled
        box_term = rt * rt - xt * xt
        sq = np.einsum("ij,ij->i", P, P)
        off = -0.5 * (lam_k * const + 2.0 * tau @ box_term + sq / lam_k)
        if not grad:
            return off, None
        sel_a, sel_b = _min3_branches(a, b)
        dQ = -P / lam * ax
        dC = dQ * sel_a
        dG = dQ * (sel_b.astype(float) - sel_a)
        dlam = -0.5 * const + 0.5 * sq / lam_k**2 + (dQ * w * (sel_b.astype(float) - sel_a)).sum(axis=1)
        dtau = np.where(mask, -box_term + dQ * (sel_a * (rt - xt) + sel_b * (rt + xt)), 0.0)
        return off, (dC, dG, dlam, dtau)

    def _forward(self, params, grad=False):
        net = self.net
        N = net.num_layers
        G, H = self.C, np.zeros(self.num_specs)
        trace = {"C": [None] * (N - 1), "G": [None] * (N - 1), "slope": [None] * (N - 1),
                 "off": [None] * (N - 1), "doff": [None] * (N - 1)}
        for k in range(N - 2, -1, -1):
            nxt = net.layers[k + 1]
            Ck = G @ nxt.weight
            dk = H + G @ nxt.bias
            slope = self._slopes(k, params.alpha[k])
            beta = self.relax[k].beta
            G = np.maximum(Ck, 0.0) * slope + np.minimum(Ck, 0.0) * beta
            off, doff = self._offset(k, Ck, G, params.lam[:, k], params.tau[k], grad=grad)
            H = off + dk
            trace["C"][k], trace["G"][k], trace["slope"][k] = Ck, G, slope
            trace["off"][k], trace["doff"][k] = off, doff
        first = net.layers[0]
        trace["g_in"] = G @ first.weight
        trace["h"] = H + G @ first.bias
        trace["G0"] = G
        return trace

    def _close(self, g, h):
        if self.objective == "offset":
            return h.copy(), np.zeros_like(g)
        s = self.input_set
        if isinstance(s, Box):
            return s.min_linear(g, h), s.center - np.sign(g) * s.radius
        if isinstance(s, Ball):
            norm = np.linalg.norm(g, axis=1)
            safe = np.where(norm > 0, norm, 1.0)[:, None]
            return s.min_linear(g, h), s.center - s.radius * g / safe
        scaled = g * s.axes
        norm = np.linalg.norm(scaled, axis=1)
        safe = np.where(norm > 0, norm, 1.0)[:, None]
        return s.min_linear(g, h), s.center - s.axes * scaled / safe

    def value(self, params):
        t = self._forward(params)
        return self._close(t["g_in"], t["h"])[0]

    def value_and_grad(self, params):
        """Bound per objective row and its gradient as a :class:`RelaxationParams`."""
        net = self.net
        N = net.num_layers
        t = self._forward(params, grad=True)
        val, dg_in = self._close(t["g_in"], t["h"])

        grad = RelaxationParams(
            [np.zeros_like(a) for a in params.alpha], np.zeros_like(params.lam), [np.zeros_like(x) for x in params.tau]
        )
        # adjoint of the coefficient on z_1, through g_in = G0 W1 and h += G0 . b1
        first = net.layers[0]
        Gbar = dg_in @ first.weight.T + first.bias
        for k in range(N - 1):
            dC_off, dG_off, dlam, dtau = t["doff"][k]
            Gbar = Gbar + dG_off
            Ck, slope = t["C"][k], t["slope"][k]
            grad.alpha[k] = np.where(self.unstable[k], Gbar * np.maximum(Ck, 0.0), 0.0)
            grad.lam[:, k] = dlam
            grad.tau[k] = dtau
            dGdC = np.where(Ck > 0, slope, self.relax[k].beta)
            Cbar = Gbar * dGdC + dC_off
            nxt = net.layers[k + 1]
            Gbar = Cbar @ nxt.weight.T + nxt.bias
        return val, grad


def _adam_optimize(problem, cfg, params=None):
    """Projected Adam ascent; returns best value per row, best params, history of row-wise best."""
    params = problem.initial_params(cfg.alpha_init) if params is None else params.copy()
    problem.project(params)
    m = problem.num_specs
    best_val = np.full(m, -np.inf)
    best = params.copy()
    history = []

    def record(vals, p):
        better = vals > best_val
        if np.any(better):
            best_val[better] = vals[better]
            for dst, src in zip(best.arrays(), p.arrays()):
                dst[better] = src[better]
        history.append(best_val.copy())

    n_alpha = len(params.alpha)
    arrays = params.arrays()
    lrs = [cfg.lr_alpha] * n_alpha + [cfg.lr_lambda] * (len(arrays) - n_alpha)
    if problem.method == "lirpa-box":
        active = list(range(n_alpha))
    elif problem.method == "sdp-crown":
        active = list(range(n_alpha + 1))
    else:
        active = list(range(len(arrays)))
    m1 = [np.zeros_like(a) for a in arrays]
    m2 = [np.zeros_like(a) for a in arrays]
    b1, b2 = cfg.adam_beta1, cfg.adam_beta2

    for it in range(cfg.iterations):
        vals, grad = problem.value_and_grad(params)
        record(vals, params)
        garrays = grad.arrays()
        arrays = params.arrays()
        scale = cfg.decay**it
        for j in active:
            gj = garrays[j]
            m1[j] = b1 * m1[j] + (1 - b1) * gj
            m2[j] = b2 * m2[j] + (1 - b2) * gj * gj
            mhat = m1[j] / (1 - b1 ** (it + 1))
            vhat = m2[j] / (1 - b2 ** (it + 1))
            arrays[j] += lrs[j] * scale * mhat / (np.sqrt(vhat) + cfg.adam_eps)
        problem.project(params)
        if cfg.debug:
            problem.check_feasible(params)
    record(problem.value(params), params)
    return best_val, best, history


def as_input_set(center, radius=None, norm="l2"):
    if norm == "l2":
        return Ball(center, radius)
    if norm == "linf":
        return Box(center, radius)
    raise ValueError("norm must be 'l2' or 'linf'")


def optimize_lower_bound(net, c, input_set, method="sdp-crown", cfg=OptimizerConfig(), objective="bound"):
    """Maximise the certified lower bound of ``c . f(x)`` over ``input_set``."""
    start = time.perf_counter()
    problem = BoundProblem(net, c, input_set, method, intermediate=cfg.intermediate,
                           spectral_tol=cfg.spectral_tol, seed=cfg.seed, objective=objective)
    best_val, best, history = _adam_optimize(problem, cfg)
    lb = float(best_val[0])
    return VerificationResult(
        lower_bound=lb,
        best_params=best.row(0),
        status=_status(lb, None),
        wall_time=time.perf_counter() - start,
        history=[float(h[0]) for h in history],
    )


def margin_specs(num_outputs, label):
    """Objective rows ``e_label - e_j`` for ``j != label`` (a single ``[1]`` for scalar outputs)."""
    if num_outputs == 1:
        return np.ones((1, 1)), [0]
    if not 0 <= label < num_outputs:
        raise ValueError(f"label {label} out of range for {num_outputs} outputs")
    others = [j for j in range(num_outputs) if j != label]
    return np.array([margin_spec(num_outputs, label, j) for j in others]), others


def margin(net, center, label, input_set, method="sdp-crown", cfg=OptimizerConfig()):
    """Certified lower bounds ``d_j`` of ``(e_label - e_j) . f(x)`` for every ``j != label``.

    ``method`` may also be ``"lipnaive"`` (l2 balls only). For a scalar output
    network the single bound of ``f(x)`` itself is returned.
    """
    C, _ = margin_specs(net.output_dim, label)
    if method == "lipnaive":
        from .adversary import hidden_spectral_product, lip_naive_bound

        if not isinstance(input_set, Ball):
            raise ValueError("lipnaive needs an l2 ball")
        prod = hidden_spectral_product(net, tol=cfg.spectral_tol, seed=cfg.seed)
        return np.array([lip_naive_bound(net, c, input_set.center, input_set.radius, product=prod) for c in C])
    problem = BoundProblem(net, C, input_set, method, intermediate=cfg.intermediate,
                           spectral_tol=cfg.spectral_tol, seed=cfg.seed)
    return _adam_optimize(problem, cfg)[0]


def with_overrides(cfg, **kw):
    return replace(cfg, **{k: v for k, v in kw.items() if v is not None})
