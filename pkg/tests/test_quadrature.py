import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fracbvp.quadrature import (QuadratureError, QuadratureFailure, QuadratureRule,
                                integrate, refine_until, segment_edges)


def test_three_halves_power_closed_form():
    assert integrate(lambda s: (1 - s) ** 1.5, 0, 1, order=8) == pytest.approx(0.4, abs=1e-10)


def test_zero_integrand():
    assert integrate(lambda s: 0.0, 0, 1) == 0.0


def test_difference_of_powers():
    assert integrate(lambda s: s - s ** 1.5, 0, 1) == pytest.approx(0.1, abs=1e-10)


def test_reversed_limits_rejected():
    with pytest.raises(QuadratureError, match="exceeds"):
        integrate(lambda s: s, 1.0, 0.0)


def test_non_finite_sample_names_node():
    with pytest.raises(QuadratureError, match="not finite at node s="):
        integrate(lambda s: np.where(s > 0.5, np.nan, s), 0, 1)


def test_breakpoint_outside_interval():
    with pytest.raises(QuadratureError, match="outside"):
        integrate(lambda s: s, 0, 1, breakpoints=[1.5])


def test_refine_until_endpoint_singularity():
    b = 4 / 7
    value, err = refine_until(lambda s: (b - s) ** 1.5, 0, b, target_rel_tol=1e-9)
    assert value == pytest.approx(0.4 * b ** 2.5, rel=1e-9)
    assert value == pytest.approx(0.0987336, abs=1e-7)
    assert err < 1e-9 * value


def test_refine_until_constant_first_refinement():
    value, err = refine_until(lambda s: np.ones_like(s), 0, 1, target_rel_tol=1e-12, start_panels=1)
    assert value == pytest.approx(1.0, abs=1e-15)
    assert err < 1e-15


def test_refine_until_exponential():
    value, _ = refine_until(np.exp, 0, 1, target_rel_tol=1e-12)
    assert value == pytest.approx(math.e - 1, rel=1e-12)


def test_refine_until_failure_carries_best_value():
    # oscillation too fast for a one-point rule within the tiny budget
    with pytest.raises(QuadratureFailure) as info:
        refine_until(lambda s: np.sin(200 * s), 0, 1, target_rel_tol=1e-14, order=1,
                     start_panels=1, max_panels=8)
    assert math.isfinite(info.value.value)
    assert info.value.error > 0


def test_rule_tiles_interval_and_weights_positive():
    rule = QuadratureRule.build(0, 1, [0.3, 0.7], order=5, panels_per_segment=6)
    assert rule.edges[0] == 0 and rule.edges[-1] == 1
    assert np.all(np.diff(rule.edges) > 0)
    assert {0.3, 0.7} <= set(rule.edges)
    w = rule.weights.reshape(-1, 5)
    assert np.all(w > 0)
    np.testing.assert_allclose(w.sum(axis=1), np.diff(rule.edges), rtol=1e-13)


def test_uniform_grading():
    np.testing.assert_allclose(segment_edges(0, 1, 4, grading=1), [0, .25, .5, .75, 1])


@settings(max_examples=60, deadline=None)
@given(order=st.integers(1, 12), panels=st.integers(1, 7),
       seed=st.integers(0, 2**31), n_bps=st.integers(0, 3))
def test_polynomial_exactness(order, panels, seed, n_bps):
    rng = np.random.default_rng(seed)
    p = np.polynomial.Polynomial(rng.normal(size=2 * order))
    bps = rng.random(n_bps)
    exact = p.integ()(1.0) - p.integ()(0.0)
    got = integrate(p, 0, 1, bps, order, panels)
    assert abs(got - exact) <= 1e-12 * (1 + abs(exact))


def test_error_decays_under_panel_doubling():
    f = lambda s: np.exp(np.sin(3 * s))
    ref = integrate(f, 0, 1, order=12, panels_per_segment=256)
    errs = [abs(integrate(f, 0, 1, order=2, panels_per_segment=p) - ref) for p in (2, 4, 8, 16, 32)]
    assert all(b <= a for a, b in zip(errs, errs[1:]))


def test_splitting_smooth_integrand_is_harmless():
    f = lambda s: np.cos(2 * s) + s ** 3
    a = integrate(f, 0, 1)
    b = integrate(f, 0, 1, breakpoints=[0.37, 0.81])
    assert abs(a - b) < 1e-12
