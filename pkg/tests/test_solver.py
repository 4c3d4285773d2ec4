import math

import numpy as np
import pytest

from fracbvp.kernel import HypothesisError, KernelContext, ProblemSpec
from fracbvp.measures import rs_integral
from fracbvp.selftest import random_admissible_spec
from fracbvp.solver import (GridFunction, OperatorError, OperatorPlan, apply_operator,
                            fractional_integral, picard_solve, solution_grid, solve_linear,
                            verify_solution)


def linear_oracle(ctx, t):
    """u = t - t^a + C t solves the problem with h = Gamma(a + 1)."""
    spec, a = ctx.spec, ctx.alpha
    g_t = rs_integral(lambda x: x, spec.measure)
    g_ta = rs_integral(lambda x: x ** a, spec.measure)
    C = (spec.mu * (spec.eta - spec.eta ** a) + spec.beta * (g_t - g_ta)) / (1 - ctx.lam)
    return t - t ** a + C * t


def zero(s, x):
    return np.zeros_like(s)


def test_grid_function_basics():
    u = GridFunction([0, 0.3, 0.6, 1], [0, 1, 2, 3])
    assert u(0.3) == 1.0 and len(u) == 4
    assert u.sup_norm() == 3.0
    with pytest.raises(ValueError):
        GridFunction([0.1, 1], [0, 0])
    with pytest.raises(ValueError):
        GridFunction([0, 0.5, 0.5, 1], [0, 0, 0, 0])


def test_solution_grid_contains_kinks(example_ctx):
    nodes = solution_grid(example_ctx, 257)
    for k in [0.0, 1 / 7, 3 / 7, 4 / 7, 1.0]:
        assert k in nodes
    assert np.all(np.diff(nodes) > 0)


def test_apply_operator_trivial(example_ctx):
    grid = solution_grid(example_ctx, 33)
    u = GridFunction(grid, np.sin(grid))
    assert np.all(apply_operator(example_ctx, zero, u).values == 0)
    u0 = GridFunction(grid, np.zeros_like(grid))
    assert np.all(apply_operator(example_ctx, lambda s, x: x, u0).values == 0)


@pytest.mark.parametrize("alpha", [2.2, 2.5, 3.0])
def test_apply_operator_dirichlet_oracle(alpha):
    ctx = KernelContext(ProblemSpec(alpha, 0.0, 0.5, 0.0))
    grid = solution_grid(ctx, 65)
    c = math.gamma(alpha + 1)
    Au = apply_operator(ctx, lambda s, x: np.full_like(s, c), GridFunction(grid, grid))
    np.testing.assert_allclose(Au.values, grid - grid ** alpha, atol=1e-10)


def test_apply_operator_names_failure(example_ctx):
    grid = solution_grid(example_ctx, 17)
    u = GridFunction(grid, grid - 0.5)

    def f(s, x):
        return np.sqrt(np.where(x < 0, np.nan, x))
    with pytest.raises(OperatorError, match=r"\(s, u\(s\)\)"):
        apply_operator(example_ctx, f, u)


def test_solve_linear_zero(example_ctx):
    assert np.all(solve_linear(example_ctx, 0.0).values == 0)


def test_solve_linear_example_oracle(example_ctx):
    u = solve_linear(example_ctx, math.gamma(3.5))
    assert np.max(np.abs(u.values - linear_oracle(example_ctx, u.nodes))) < 1e-10


def test_solve_linear_random_oracle(rng):
    for _ in range(6):
        ctx = KernelContext(random_admissible_spec(rng))
        u = solve_linear(ctx, math.gamma(ctx.alpha + 1))
        assert np.max(np.abs(u.values - linear_oracle(ctx, u.nodes))) < 1e-8


def test_solve_linear_accepts_expressions(example_ctx):
    a = solve_linear(example_ctx, "1 + s^2")
    b = solve_linear(example_ctx, lambda s: 1 + s ** 2)
    np.testing.assert_allclose(a.values, b.values, rtol=0, atol=1e-15)


def test_solve_linear_is_linear(example_ctx, rng):
    grid = solution_grid(example_ctx, 65)
    plan = OperatorPlan(example_ctx, grid)
    p = np.polynomial.Polynomial(rng.normal(size=4))
    q = np.polynomial.Polynomial(rng.normal(size=4))
    both = solve_linear(example_ctx, lambda s: p(s) + q(s), plan=plan)
    sep = solve_linear(example_ctx, p, plan=plan).values + solve_linear(example_ctx, q, plan=plan).values
    assert np.max(np.abs(both.values - sep)) < 1e-10


def test_solve_linear_needs_h1():
    ctx = KernelContext(ProblemSpec(2.5, 2.4, 0.5, 0.0))
    with pytest.raises(HypothesisError):
        solve_linear(ctx, 1.0)


def test_positivity_preserved(rng):
    for _ in range(5):
        ctx = KernelContext(random_admissible_spec(rng))
        grid = solution_grid(ctx, 65)
        u = GridFunction(grid, rng.random(len(grid)), degree=1)
        Au = apply_operator(ctx, lambda s, x: x + np.cos(s) ** 2, u)
        assert Au.values.min() >= -1e-12


def test_fractional_integral_power():
    # I^a [1](t) = t^a / Gamma(a + 1)
    t = np.linspace(0, 1, 9)
    got = fractional_integral(lambda s: np.ones_like(s), t, 2.5)
    np.testing.assert_allclose(got, t ** 2.5 / math.gamma(3.5), atol=1e-13)


def test_verify_zero_solution(example_ctx):
    grid = solution_grid(example_ctx, 33)
    rep = verify_solution(example_ctx, zero, GridFunction(grid, np.zeros_like(grid)))
    assert rep.fixed_point_residual == 0 and rep.bc_residual == 0
    assert rep.eq13_residual == 0 and rep.min_value == 0


def test_verify_linear_solution(example_ctx):
    c = math.gamma(3.5)
    u = solve_linear(example_ctx, c)
    rep = verify_solution(example_ctx, lambda s, x: np.full_like(s, c), u)
    assert rep.fixed_point_residual < 1e-6
    assert rep.bc_residual < 1e-6
    assert rep.eq13_residual < 1e-6


def test_picard_zero_forcing(example_ctx):
    u, rep = picard_solve(example_ctx, zero)
    assert rep.converged and rep.iterations == 1
    assert np.all(u.values == 0)


def test_picard_constant_matches_linear(example_ctx):
    c = math.gamma(3.5)
    u, rep = picard_solve(example_ctx, lambda s, x: np.full_like(s, c), tol=1e-12)
    assert rep.converged
    np.testing.assert_allclose(u.values, solve_linear(example_ctx, c).values, atol=1e-12)


@pytest.fixture(scope="module")
def example_solution(example_ctx, example_config):
    return picard_solve(example_ctx, example_config.f)


def test_picard_example(example_solution, example_ctx):
    u, rep = example_solution
    assert rep.converged and rep.fixed_point_residual < 1e-8
    assert rep.min_value >= 0
    assert rep.eq13_residual < 1e-6
    bc = u(1.0) - 2 * u(1 / 7) - 2 * u(3 / 7) + u(4 / 7)
    assert abs(bc) < 1e-6


def test_picard_lower_bound_inheritance(example_solution, example_ctx, example_config):
    u, _ = example_solution
    f = example_config.f
    s = np.linspace(0, 1, 4001)
    w = np.full_like(s, 1 / 4000)
    w[[0, -1]] /= 2
    # trapezoid slightly overestimates a concave-ish integrand; allow slack
    integral = np.sum(w * example_ctx.phi(s) * f(s, u(s)))
    t = u.nodes
    assert np.all(u.values >= example_ctx.rho(t) * integral - 1e-6)


def test_picard_nonconvergence_is_reported(example_ctx, example_config):
    u, rep = picard_solve(example_ctx, example_config.f, max_iter=2, tol=1e-14)
    assert not rep.converged
    assert any("no convergence" in n for n in rep.notes)
    assert len(u) > 0


def test_picard_argument_checks(example_ctx):
    with pytest.raises(ValueError):
        picard_solve(example_ctx, zero, tol=0)
    with pytest.raises(ValueError):
        picard_solve(example_ctx, zero, damping=1.5)
