"""Triangle relaxation of ReLU over a known preactivation interval."""

from dataclasses import dataclass

import numpy as np

INACTIVE, UNSTABLE, ACTIVE = 0, 1, 2
STATUS_NAMES = {INACTIVE: "inactive", UNSTABLE: "unstable", ACTIVE: "active"}


@dataclass(frozen=True)
class NeuronRelaxation:
    """Per-neuron envelope ``alpha z <= relu(z) <= beta z + gamma``.

    Fields are arrays over the neurons of one layer (0-d for a single neuron).
    ``status`` holds ``ACTIVE``/``INACTIVE``/``UNSTABLE`` codes.
    """

    alpha: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray
    status: np.ndarray

    @property
    def unstable(self):
        return self.status == UNSTABLE

    def with_alpha(self, alpha_free):
        """Same interval, new lower slopes on the unstable neurons."""
        alpha = np.where(self.unstable, alpha_free, self.alpha)
        return NeuronRelaxation(alpha, self.beta, self.gamma, self.status)

    def status_name(self):
        return np.vectorize(STATUS_NAMES.get)(self.status)


def relax_relu(center, radius, alpha_free=0.5):
    """Triangle relaxation for preactivations in ``[center - radius, center + radius]``.

    Ties go to ``active`` first (``center - radius == 0``), then ``inactive``
    (``center + radius == 0``). The point interval ``{0}`` is the one exception
    and counts as inactive; either choice is exact there. Works elementwise
    on arrays.
    """
    z = np.asarray(center, dtype=np.float64)
    r = np.asarray(radius, dtype=np.float64)
    if np.any(r < 0):
        raise ValueError("relaxation radius must be nonnegative")
    alpha_free = np.broadcast_to(np.asarray(alpha_free, dtype=np.float64), np.broadcast(z, r).shape)
    if np.any((alpha_free < 0) | (alpha_free > 1)):
        raise ValueError("alpha_free must lie in [0, 1]")
    lo, hi = z - r, z + r
    point_zero = (z == 0) & (r == 0)
    status = np.where((lo >= 0) & ~point_zero, ACTIVE, np.where(hi <= 0, INACTIVE, UNSTABLE))
    unstable = status == UNSTABLE
    safe_r = np.where(unstable, r, 1.0)
    alpha = np.where(status == ACTIVE, 1.0, np.where(unstable, alpha_free, 0.0))
    beta = np.where(status == ACTIVE, 1.0, np.where(unstable, hi / (2 * safe_r), 0.0))
    gamma = np.where(unstable, -hi * lo / (2 * safe_r), 0.0)
    return NeuronRelaxation(alpha, beta, gamma, status)
