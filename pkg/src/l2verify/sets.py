"""Input perturbation sets: axis-aligned boxes, l2 balls and axis-aligned ellipsoids."""

from dataclasses import dataclass

import numpy as np

from .linalg import as_vector


@dataclass(frozen=True)
class Box:
    """``{x : |x_i - center_i| <= radius_i}``."""

    center: np.ndarray
    radius: np.ndarray

    def __post_init__(self):
        c = as_vector(self.center, "center")
        r = np.broadcast_to(as_vector(self.radius, "radius"), c.shape).astype(np.float64)
        if np.any(r < 0):
            raise ValueError("box radius must be nonnegative")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "radius", r)

    @property
    def dim(self):
        return self.center.shape[0]

    def enclosing_box(self):
        return self

    def contains(self, x, slack=0.0):
        return np.all(np.abs(np.asarray(x) - self.center) <= self.radius + slack, axis=-1)

    def project(self, x):
        return np.clip(x, self.center - self.radius, self.center + self.radius)

    def sample(self, n, rng):
        return self.center + self.radius * rng.uniform(-1.0, 1.0, size=(n, self.dim))

    def min_linear(self, g, h=0.0):
        """Exact ``min g.x + h`` over the box (``g`` may be a stack of rows)."""
        return g @ self.center - np.abs(g) @ self.radius + h


@dataclass(frozen=True)
class Ball:
    """``{x : ||x - center||_2 <= radius}``."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        c = as_vector(self.center, "center")
        if not np.isfinite(self.radius) or self.radius < 0:
            raise ValueError("ball radius must be a finite nonnegative scalar")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def dim(self):
        return self.center.shape[0]

    def enclosing_box(self):
        return Box(self.center, np.full(self.dim, self.radius))

    def contains(self, x, slack=0.0):
        return np.linalg.norm(np.asarray(x) - self.center, axis=-1) <= self.radius + slack

    def project(self, x):
        d = x - self.center
        norm = np.linalg.norm(d, axis=-1, keepdims=True)
        scale = np.where(norm > self.radius, self.radius / np.where(norm > 0, norm, 1.0), 1.0)
        return self.center + d * scale

    def sample(self, n, rng):
        return sample_ball(self.center, self.radius, n, rng)

    def min_linear(self, g, h=0.0):
        return g @ self.center - self.radius * np.linalg.norm(g, axis=-1) + h


@dataclass(frozen=True)
class Ellipsoid:
    """``{x : ||diag(axes)^-1 (x - center)||_2 <= 1}`` with positive axes."""

    center: np.ndarray
    axes: np.ndarray

    def __post_init__(self):
        c = as_vector(self.center, "center")
        a = np.broadcast_to(as_vector(self.axes, "axes"), c.shape).astype(np.float64)
        if np.any(a <= 0):
            raise ValueError("ellipsoid axes must be strictly positive")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "axes", a)

    @property
    def dim(self):
        return self.center.shape[0]

    def enclosing_box(self):
        return Box(self.center, self.axes)

    def enclosing_ball(self):
        return Ball(self.center, float(np.max(self.axes)))

    def contains(self, x, slack=0.0):
        return np.linalg.norm((np.asarray(x) - self.center) / self.axes, axis=-1) <= 1.0 + slack

    def sample(self, n, rng):
        return self.center + self.axes * sample_ball(np.zeros(self.dim), 1.0, n, rng)

    def min_linear(self, g, h=0.0):
        return g @ self.center - np.linalg.norm(g * self.axes, axis=-1) + h


def sample_ball(center, radius, n, rng):
    """``n`` points uniform in an l2 ball: Gaussian direction, radius ``r U^(1/d)``."""
    center = np.asarray(center, dtype=np.float64)
    d = center.shape[0]
    u = rng.standard_normal((n, d))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    r = radius * rng.uniform(size=(n, 1)) ** (1.0 / d)
    return center + r * u
