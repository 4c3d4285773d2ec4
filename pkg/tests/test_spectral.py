import math

import numpy as np
import pytest
from scipy import integrate as sci

from fracbvp.kernel import KernelContext, ProblemSpec
from fracbvp.measures import LEBESGUE, SignedMeasure, rs_integral
from fracbvp.selftest import random_admissible_spec
from fracbvp.spectral import (PowerIterationError, gelfand_check, nystrom_matrix,
                              nystrom_rule, power_iteration, scale_radius, spectral_bounds,
                              tau1, tau2)


@pytest.fixture(scope="module")
def example_bounds(example_ctx):
    return spectral_bounds(example_ctx, n=256)


def tau2_dual(ctx):
    """tau2 via int_0^1 G(t, s) ds = (t - t^alpha)/Gamma(alpha + 1), no g_A needed."""
    spec, a = ctx.spec, ctx.alpha
    ga1 = math.gamma(a + 1)
    g_int = rs_integral(lambda t: (t - t ** a) / ga1, spec.measure)
    return (spec.beta * g_int + (spec.mu - ctx.lam + 1) / ga1) / (1 - ctx.lam)


def test_example_taus(example_ctx):
    assert 1 / tau2(example_ctx) == pytest.approx(0.523515, rel=5e-4)
    assert 1 / tau1(example_ctx) == pytest.approx(57.3423, rel=1e-3)


def test_tau2_dual_route(example_ctx, rng):
    assert tau2(example_ctx) == pytest.approx(tau2_dual(example_ctx), rel=1e-12)
    for _ in range(8):
        ctx = KernelContext(random_admissible_spec(rng))
        assert tau2(ctx) == pytest.approx(tau2_dual(ctx), rel=1e-9)


def test_tau_dirichlet(dirichlet_ctx):
    assert tau2(dirichlet_ctx) == pytest.approx(1 / 6, abs=1e-14)
    assert tau1(dirichlet_ctx) == pytest.approx(1 / 160, abs=1e-14)


@pytest.mark.parametrize("spec", [
    ProblemSpec(2.3, 0.1, 0.6, 0.0),
    ProblemSpec(2.8, 0.0, 0.35, 0.4, LEBESGUE),
    ProblemSpec(2.5, 2.0, 1 / 7, 1.0, SignedMeasure(atoms=[(3 / 7, 2.0), (4 / 7, -1.0)])),
])
def test_tau1_is_integral_of_rho_phi(spec):
    ctx = KernelContext(spec)
    pts = [b for b in ctx.breakpoints if 0 < b < 1]
    direct, _ = sci.quad(lambda s: float(ctx.rho(s) * ctx.phi(s)), 0, 1,
                         points=pts or None, epsabs=1e-14, epsrel=1e-12, limit=200)
    # rho is a function of t; the identity uses rho(s) Phi(s) as integrand
    assert tau1(ctx) == pytest.approx(direct, rel=1e-9)


def test_taus_require_h1():
    ctx = KernelContext(ProblemSpec(2.5, 2.4, 0.5, 0.0))
    with pytest.raises(ValueError, match="H1"):
        tau1(ctx)
    with pytest.raises(ValueError, match="H1"):
        tau2(ctx)


def test_nystrom_rule_shape(example_ctx):
    rule = nystrom_rule(example_ctx, 256)
    assert len(rule.nodes) == 256
    for k in example_ctx.kinks:
        assert k in rule.edges
    with pytest.raises(ValueError):
        nystrom_rule(example_ctx, 4)


def test_nystrom_entries_and_row_sums(example_ctx):
    rule = nystrom_rule(example_ctx, 256)
    M = nystrom_matrix(example_ctx, rule=rule)
    assert M.shape == (256, 256)
    assert np.all(M >= 0)
    for i in (0, 57, 128, 255):
        t = rule.nodes[i]
        pts = sorted(set([t] + [k for k in example_ctx.kinks if 0 < k < 1]))
        direct, _ = sci.quad(lambda s: float(example_ctx.H(t, s)), 0, 1, points=pts,
                             epsabs=1e-13, limit=200)
        assert M[i].sum() == pytest.approx(direct, abs=1e-6)


def test_nystrom_zero_row_at_t0(dirichlet_ctx):
    M = dirichlet_ctx.H(0.0, nystrom_rule(dirichlet_ctx, 64).nodes)
    assert np.all(M == 0)


def test_power_iteration_trivial():
    r, v, res = power_iteration(np.eye(4))
    assert r == 1.0 and res == 0.0
    np.testing.assert_array_equal(v, np.ones(4))
    r, v, _ = power_iteration(np.diag([1.0, 2.0, 3.0]))
    assert r == pytest.approx(3.0, rel=1e-11)
    assert np.argmax(v) == 2


def test_power_iteration_zero_matrix():
    r, v, res = power_iteration(np.zeros((5, 5)))
    assert r == 0.0 and res == 0.0 and np.all(v == 1)


def test_power_iteration_rejects_negative():
    with pytest.raises(ValueError):
        power_iteration(np.array([[1.0, -1.0], [0.0, 1.0]]))


def test_power_iteration_failure_carries_estimate():
    M = np.diag([1.0, 0.999999])
    with pytest.raises(PowerIterationError) as info:
        power_iteration(M, tol=1e-15, max_iter=5)
    assert info.value.r == pytest.approx(1.0)


def test_power_iteration_matches_eigvals(rng):
    for _ in range(10):
        M = rng.random((12, 12))
        r, v, res = power_iteration(M)
        assert r == pytest.approx(max(abs(np.linalg.eigvals(M))), rel=1e-10)
        assert np.all(v >= 0) and np.max(v) == 1.0
        assert res <= 1e-12 * r


def test_example_sandwich_and_mesh(example_bounds):
    b = example_bounds
    assert b.tau1 <= b.r_estimate <= b.tau2
    assert b.sandwich_ok()
    assert b.mesh_error < 1e-6
    assert b.residual <= b.tolerance
    assert b.r_estimate == pytest.approx(0.190958817, abs=1e-8)


def test_eigenfunction_is_nonnegative(example_bounds):
    ef = example_bounds.eigenfunction
    assert ef.nodes[0] == 0.0 and ef.nodes[-1] == 1.0
    assert np.all(ef.values >= 0) and np.max(ef.values) == pytest.approx(1.0)
    assert ef.values[0] == 0.0


def test_gelfand_properties(example_ctx, example_bounds):
    M = nystrom_matrix(example_ctx, 256)
    seq = gelfand_check(M, 64)
    assert len(seq) == 64
    assert seq[0] == pytest.approx(M.sum(axis=1).max(), rel=1e-14)
    r = example_bounds.r_estimate
    assert min(seq) >= r - 1e-6
    assert abs(seq[-1] - r) / r < 0.05


def test_gelfand_handles_overflow():
    M = np.full((3, 3), 1e200)
    seq = gelfand_check(M, 10)
    assert all(math.isfinite(x) for x in seq)
    assert seq[-1] == pytest.approx(3e200, rel=1e-12)


def test_gelfand_nilpotent():
    assert gelfand_check(np.array([[0.0, 1.0], [0.0, 0.0]]), 4) == [1.0, 0.0, 0.0, 0.0]


def test_scale_radius(example_bounds, rng):
    same = scale_radius(1.0, example_bounds)
    assert same.r_estimate == example_bounds.r_estimate and same.tau1 == example_bounds.tau1
    assert scale_radius(2.0, example_bounds).r_estimate == 2 * example_bounds.r_estimate
    for a in rng.uniform(0.01, 100, 10):
        b = scale_radius(a, example_bounds)
        assert b.tau1 <= b.r_estimate <= b.tau2
        assert b.eigenfunction is example_bounds.eigenfunction
    with pytest.raises(ValueError):
        scale_radius(0.0, example_bounds)


def test_scaling_matrix_scales_radius(example_ctx):
    M = nystrom_matrix(example_ctx, 64)
    r, v, _ = power_iteration(M)
    r3, v3, _ = power_iteration(3.0 * M)
    assert r3 == pytest.approx(3 * r, rel=1e-14)
    np.testing.assert_allclose(v3, v, atol=1e-10)
