import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pfcsav.adaptive import (
    STABLE_RATIO,
    AdaptiveParams,
    energy_rate,
    next_step_size,
    ratio_root,
    stability_G,
    stability_g,
)


def test_stability_g_examples():
    for gam in (0.1, 1.0, 9.0):
        assert stability_g(gam, 0.5) == 0
    assert stability_g(1.0, 1.0) == 0.25
    assert np.isclose(stability_g(4.0, 1.0), 0.8)


def test_stability_G_examples():
    for s, z in ((0.3, 2.0), (1.0, 1.0), (7.0, 0.2)):
        assert np.isclose(stability_G(s, z, 0.5), 2.0)
    assert np.isclose(stability_G(1.0, 1.0, 1.0), 2.0)
    root = ratio_root(1.0)
    assert abs(stability_G(root, root, 1.0)) < 1e-3


def test_ratio_root_examples():
    assert abs(ratio_root(1.0) - 4.8645) < 1e-3
    assert ratio_root(0.5) == math.inf
    assert ratio_root(0.75) > ratio_root(1.0)
    # sigma = 1: G(z,z) = 0 <=> u^3 - 2u^2 - 1 = 0 with u = sqrt(z)
    u = np.roots([1, -2, 0, -1])
    u = max(v.real for v in u if abs(v.imag) < 1e-12 and v.real > 0)
    assert abs(ratio_root(1.0) - u**2) < 1e-9
    with pytest.raises(ValueError):
        ratio_root(0.4)


def test_literal_cap_is_inside_root():
    assert STABLE_RATIO <= ratio_root(1.0)
    assert stability_G(STABLE_RATIO, STABLE_RATIO, 1.0) > 0
    assert stability_g(STABLE_RATIO, 1.0) < 1


def test_ratio_root_monotone():
    sigmas = np.linspace(0.55, 1.0, 10)
    roots = [ratio_root(float(s)) for s in sigmas]
    assert all(a > b for a, b in zip(roots, roots[1:]))


@settings(max_examples=100, deadline=None)
@given(st.floats(0.51, 1.0), st.floats(0.0, 0.999))
def test_G_positive_below_root(sigma, frac):
    root = ratio_root(sigma)
    z = 1e-3 + frac * (root - 1e-3)
    assert stability_G(z, z, sigma) > 0


def test_energy_rate_examples():
    assert energy_rate(3.0, 3.0, 0.1) == 0
    assert energy_rate(10.0, 0.0, 2.0) == -5
    with pytest.raises(ZeroDivisionError):
        energy_rate(1.0, 2.0, 0.0)


def test_next_step_size_examples():
    p = AdaptiveParams(0.01, 5.0, 1e5)
    assert next_step_size(0.0, 0.1, p) == min(5.0, STABLE_RATIO * 0.1)
    assert next_step_size(0.0, 10.0, p) == 5.0
    expected = 5 / math.sqrt(1 + 1e5)
    assert np.isclose(next_step_size(1.0, 1.0, p), expected)
    assert 0.0158 < expected < 0.0159
    assert next_step_size(1.0, 0.001, p) == STABLE_RATIO * 0.001
    assert next_step_size(1e6, 0.5, p) == 0.01
    assert next_step_size(-1e6, 0.5, p) == 0.01
    free = AdaptiveParams(0.01, 5.0, 1e5, ratio_cap=None)
    assert next_step_size(0.0, 0.01, free) == 5.0
    with pytest.raises(ValueError):
        next_step_size(0.0, 0.0, p)


def test_adaptive_params_validation():
    with pytest.raises(ValueError):
        AdaptiveParams(1.0, 0.5, 1.0)
    with pytest.raises(ValueError):
        AdaptiveParams(0.1, 0.5, 0.0)
    with pytest.raises(ValueError):
        AdaptiveParams(0.1, 0.5, 1.0, ratio_cap=0.5)


@settings(max_examples=200, deadline=None)
@given(st.floats(-1e4, 1e4), st.floats(1e-4, 10.0), st.floats(1e-3, 0.1), st.floats(1.0, 100.0),
       st.floats(1e-2, 1e6))
def test_next_step_bounds(rate, tau_n, tau_min, span, gamma_ada):
    p = AdaptiveParams(tau_min, tau_min * span, gamma_ada)
    tau = next_step_size(rate, tau_n, p)
    assert min(tau_min, STABLE_RATIO * tau_n) <= tau <= p.tau_max
    assert tau / tau_n <= STABLE_RATIO + 1e-12
