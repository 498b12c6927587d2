import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from l2verify.relaxation import ACTIVE, INACTIVE, UNSTABLE, relax_relu


def coeffs(r):
    return float(r.alpha), float(r.beta), float(r.gamma)


@pytest.mark.parametrize("alpha_free", [0.0, 0.3, 1.0])
def test_boundary_active(alpha_free):
    r = relax_relu(1.0, 1.0, alpha_free)
    assert coeffs(r) == (1.0, 1.0, 0.0)
    assert r.status == ACTIVE


def test_unstable_example():
    r = relax_relu(0.0, 2.0, 0.0)
    assert coeffs(r) == (0.0, 0.5, 1.0)
    assert r.status == UNSTABLE


def test_inactive_example():
    r = relax_relu(-3.0, 1.0, 0.7)
    assert coeffs(r) == (0.0, 0.0, 0.0)
    assert r.status == INACTIVE


def test_degenerate_ties():
    assert relax_relu(0.0, 0.0).status == INACTIVE
    assert relax_relu(2.0, 0.0).status == ACTIVE
    assert relax_relu(-1.0, 1.0).status == INACTIVE


def test_vectorized():
    r = relax_relu(np.array([1.0, 0.0, -3.0]), np.array([1.0, 2.0, 1.0]), 0.25)
    np.testing.assert_array_equal(r.status, [ACTIVE, UNSTABLE, INACTIVE])
    np.testing.assert_array_equal(r.alpha, [1.0, 0.25, 0.0])
    np.testing.assert_array_equal(r.with_alpha(0.75).alpha, [1.0, 0.75, 0.0])


def test_errors():
    with pytest.raises(ValueError):
        relax_relu(0.0, -1.0)
    with pytest.raises(ValueError):
        relax_relu(0.0, 1.0, 1.5)


@settings(max_examples=200, deadline=None)
@given(st.floats(-10, 10), st.floats(0, 10), st.floats(0, 1))
def test_pointwise_sandwich(center, radius, alpha_free):
    r = relax_relu(center, radius, alpha_free)
    assert 0.0 <= float(r.alpha) <= 1.0
    z = np.concatenate([[center - radius, center + radius], np.linspace(center - radius, center + radius, 1000)])
    relu = np.maximum(z, 0.0)
    assert np.all(r.alpha * z <= relu + 1e-12)
    assert np.all(relu <= r.beta * z + r.gamma + 1e-12)


@settings(max_examples=200, deadline=None)
@given(st.floats(-10, 10), st.floats(1e-3, 10))
def test_upper_line_tight_at_endpoints(center, radius):
    r = relax_relu(center, radius)
    if r.status != UNSTABLE:
        return
    for z in (center - radius, center + radius):
        assert float(r.beta * z + r.gamma) == pytest.approx(max(z, 0.0), abs=1e-12 * max(1.0, abs(z)))
