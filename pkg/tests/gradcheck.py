"""Finite-difference checks of the bound gradient at smooth random points."""

import numpy as np

from l2verify.oracles import finite_difference

KINK = 1e-3


def random_params(problem, rng):
    params = problem.initial_params()
    for a in params.alpha:
        a[...] = rng.uniform(0.05, 0.95, size=a.shape)
    params.lam[...] = np.exp(rng.uniform(-1.5, 1.5, size=params.lam.shape))
    for k, t in enumerate(params.tau):
        t[...] = np.where(problem.tau_mask[k], rng.uniform(0.05, 1.0, size=t.shape), 0.0)
    return params


def kink_distance(problem, params):
    """Smallest distance of any min/max/abs/norm argument to its kink."""
    trace = problem._forward(params)
    dists = []
    for k in range(problem.net.num_layers - 1):
        Ck, Gk = trace["C"][k], trace["G"][k]
        unstable = problem.unstable[k]
        if np.any(unstable):
            dists.append(np.abs(Ck[:, unstable]).min())
        if problem.method == "sdp-crown" and problem.balls.radii[k] > 0:
            zc, lam = problem.balls.centers[k], params.lam[:, k : k + 1]
            a, b = Ck - Gk - lam * zc, Gk + lam * zc
        elif problem.method == "sdp-crown-ext":
            e = problem.ellipsoids
            zc, ax = e.centers[k], e.axes[k]
            xt, rt = problem.boxes.centers[k], problem.boxes.radii[k]
            lam = params.lam[:, k : k + 1]
            tau = np.where(problem.tau_mask[k], params.tau[k], 0.0)
            a = Ck - Gk + tau * (rt - xt) - lam * zc / ax**2
            b = Gk + tau * (rt + xt) + lam * zc / ax**2
        else:
            continue
        dists += [np.abs(a - b).min(), np.abs(np.minimum(a, b)).min()]
    g = trace["g_in"]
    if problem.objective == "bound":
        if type(problem.input_set).__name__ == "Box":
            dists.append(np.abs(g).min())
        else:
            dists.append(np.linalg.norm(g, axis=1).min())
    return float(min(dists)) if dists else np.inf


def flatten(params):
    return np.concatenate([a.ravel() for a in params.arrays()])


def unflatten(template, flat):
    out = template.copy()
    pos = 0
    for a in out.arrays():
        a[...] = flat[pos : pos + a.size].reshape(a.shape)
        pos += a.size
    return out


def free_mask(problem, params):
    """Coordinates the gradient is defined on (tau only on unstable neurons, lam only for sdp)."""
    parts = [np.ones(a.size, bool) for a in params.alpha]
    parts.append(np.full(params.lam.size, problem.method != "lirpa-box"))
    for k, t in enumerate(params.tau):
        on = problem.method == "sdp-crown-ext"
        parts.append((np.broadcast_to(problem.tau_mask[k], t.shape) & on).ravel())
    return np.concatenate(parts)


def compare(problem, params, step=1e-5):
    """Max relative error between the analytic and central-difference gradients (summed over specs)."""
    _, grad = problem.value_and_grad(params)
    analytic = flatten(grad)
    x0 = flatten(params)
    mask = free_mask(problem, params)

    def fn(flat):
        return float(np.sum(problem.value(unflatten(params, flat))))

    numeric = finite_difference(fn, x0, step=step)
    a, n = analytic[mask], numeric[mask]
    scale = max(np.linalg.norm(n), 1e-8)
    return float(np.linalg.norm(a - n) / scale)


def smooth_points(problem, rng, count, tries=2000):
    points = []
    for _ in range(tries):
        p = random_params(problem, rng)
        if kink_distance(problem, p) > KINK:
            points.append(p)
            if len(points) == count:
                break
    return points
