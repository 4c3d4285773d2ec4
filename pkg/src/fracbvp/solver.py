"""Linear solve, damped Picard iteration and residual checks.

Solutions live on a :class:`GridFunction`.  The operator

    (A u)(t) = int_0^1 H(t, s) f(s, u(s)) ds

is applied through an :class:`OperatorPlan` that fixes, for every grid node
t_i, a composite rule in s cut at t_i, eta and the measure breakpoints, with
the kernel values H(t_i, s) folded into the weights.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from . import expr
from .kernel import chebyshev_nodes
from .measures import rs_integral
from .quadrature import QuadratureRule, gauss_legendre, segment_edges

log = logging.getLogger(__name__)

DEFAULT_GRID = 257
DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 500
DEFAULT_DAMPING = 0.5
MIN_DAMPING = 1.0 / 16.0
OSCILLATION_WINDOW = 5
_MERGE_TOL = 1e-9


class OperatorError(ValueError):
    pass


class GridFunction:
    """Values on strictly increasing nodes of [0, 1] with 0 and 1 present.

    Between nodes the function is a cubic spline (``degree=3``) or linear
    (``degree=1``); at a node the stored value is returned exactly.
    """

    def __init__(self, nodes, values, degree=3):
        nodes = np.array(nodes, dtype=float)
        values = np.array(values, dtype=float)
        if nodes.ndim != 1 or nodes.shape != values.shape:
            raise ValueError("nodes and values must be 1-D arrays of equal length")
        if len(nodes) < 2 or nodes[0] != 0.0 or nodes[-1] != 1.0:
            raise ValueError("grid must start at 0 and end at 1")
        if np.any(np.diff(nodes) <= 0):
            raise ValueError("grid nodes must be strictly increasing")
        if degree not in (1, 3):
            raise ValueError(f"interpolation degree must be 1 or 3, got {degree}")
        if degree == 3 and len(nodes) < 4:
            degree = 1
        nodes.setflags(write=False)
        values.setflags(write=False)
        self.nodes = nodes
        self.values = values
        self.degree = degree
        self._spline = CubicSpline(nodes, values) if degree == 3 else None

    def __len__(self):
        return len(self.nodes)

    def __repr__(self):
        return f"GridFunction(n={len(self.nodes)}, degree={self.degree})"

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self._spline is not None:
            out = self._spline(x)
        else:
            out = np.interp(x, self.nodes, self.values)
        idx = np.clip(np.searchsorted(self.nodes, x), 0, len(self.nodes) - 1)
        hit = self.nodes[idx] == x
        out = np.where(hit, self.values[idx], out)
        return float(out) if out.ndim == 0 else out

    def with_values(self, values):
        return GridFunction(self.nodes, values, self.degree)

    def sup_norm(self):
        return float(np.max(np.abs(self.values)))


def solution_grid(ctx, n=DEFAULT_GRID):
    """Clustered nodes plus eta, 0, 1 and every measure breakpoint.

    A clustered node closer than ~1e-9 to a mandatory point is dropped.
    """
    base = chebyshev_nodes(n)
    required = np.array(sorted(set(ctx.kinks) | {0.0, 1.0}))
    near = np.min(np.abs(base[:, None] - required[None, :]), axis=1) < _MERGE_TOL
    return np.union1d(base[~near], required)


class OperatorPlan:
    """Quadrature points and kernel-weighted weights for every grid node."""

    def __init__(self, ctx, nodes, order=None, panels=None):
        ctx.require_h1()
        self.ctx = ctx
        self.nodes = np.asarray(nodes, dtype=float)
        order = order or ctx.quad_order
        panels = panels or ctx.quad_panels
        x_ref, w_ref = gauss_legendre(order)
        kinks = [k for k in ctx.kinks if 0.0 < k < 1.0]
        pts, wts, rows = [], [], []
        for i, t in enumerate(self.nodes):
            cuts = sorted(set(kinks) | {0.0, 1.0} | ({t} if 0.0 < t < 1.0 else set()))
            edges = np.unique(np.concatenate([
                segment_edges(lo, hi, panels) for lo, hi in zip(cuts[:-1], cuts[1:])]))
            lo, hi = edges[:-1, None], edges[1:, None]
            pts.append((0.5 * (lo + hi) + 0.5 * (hi - lo) * x_ref).ravel())
            wts.append((0.5 * (hi - lo) * w_ref).ravel())
            rows.append(np.full(pts[-1].size, t))
        self.points = np.concatenate(pts)
        self.starts = np.concatenate([[0], np.cumsum([p.size for p in pts])[:-1]])
        t_rep = np.concatenate(rows)
        self.weights = np.concatenate(wts)
        self.kernel_weights = self.weights * ctx.H(t_rep, self.points)

    def integrate_rows(self, values_at_points):
        """Row integrals int H(t_i, s) v(s) ds given v at the plan points."""
        return np.add.reduceat(self.kernel_weights * values_at_points, self.starts)


def _as_callable_h(h):
    """Normalise a forcing term h(s) to a vectorised callable."""
    if isinstance(h, GridFunction):
        return h
    if isinstance(h, str):
        h = expr.parse(h, allowed_vars={"t", "s"})
    if isinstance(h, expr.Expression):
        return expr.as_function(h, [("t", "s")])
    if callable(h):
        return h
    if isinstance(h, (int, float)):
        value = float(h)
        return lambda s: np.full(np.shape(s), value)
    raise TypeError(f"cannot interpret {h!r} as a function of s")


def _eval_f(f, s, u_s):
    try:
        vals = np.broadcast_to(np.asarray(f(s, u_s), dtype=float), s.shape)
    except (ArithmeticError, ValueError) as exc:
        # locate the first offending sample for the message
        for si, ui in zip(s.ravel(), u_s.ravel()):
            try:
                f(np.float64(si), np.float64(ui))
            except (ArithmeticError, ValueError):
                raise OperatorError(
                    f"f failed at (s, u(s)) = ({float(si)!r}, {float(ui)!r}): {exc}") from exc
        raise OperatorError(f"f evaluation failed: {exc}") from exc
    bad = ~np.isfinite(vals)
    if bad.any():
        k = int(np.argmax(bad))
        raise OperatorError(f"f is not finite at (s, u(s)) = ({s[k]!r}, {u_s[k]!r})")
    return vals


def apply_operator(ctx, f, u, plan=None, clamp=False):
    """(A u)(t_i) at the nodes of ``u``.

    With ``clamp=True`` negative interpolated values of u are replaced by 0
    before f is evaluated (projection onto the cone of nonnegative functions).
    """
    if plan is None:
        plan = OperatorPlan(ctx, u.nodes)
    u_s = np.asarray(u(plan.points))
    if clamp:
        u_s = np.maximum(u_s, 0.0)
    return u.with_values(plan.integrate_rows(_eval_f(f, plan.points, u_s)))


def solve_linear(ctx, h, nodes=None, plan=None):
    """Solve D^alpha u + h = 0 with the nonlocal boundary conditions.

    ``h`` may be a number, an expression in ``s`` (or ``t``), a vectorised
    callable or a GridFunction.  Returns u on ``nodes`` (default grid).
    """
    ctx.require_h1()
    if plan is None:
        plan = OperatorPlan(ctx, solution_grid(ctx) if nodes is None else nodes)
    h = _as_callable_h(h)
    vals = np.broadcast_to(np.asarray(h(plan.points), dtype=float), plan.points.shape)
    return GridFunction(plan.nodes, plan.integrate_rows(vals))


@dataclass(frozen=True)
class SolveReport:
    iterations: int
    fixed_point_residual: float
    bc_residual: float
    eq13_residual: float
    min_value: float
    converged: bool
    damping_used: float
    sup_norm: float = 0.0
    notes: tuple = field(default=())

    def to_dict(self):
        return {
            "converged": self.converged,
            "iterations": self.iterations,
            "fixed_point_residual": self.fixed_point_residual,
            "bc_residual": self.bc_residual,
            "eq13_residual": self.eq13_residual,
            "min_value": self.min_value,
            "sup_norm": self.sup_norm,
            "damping_used": self.damping_used,
            "notes": list(self.notes),
        }


def picard_solve(ctx, f, u0=None, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER,
                 damping=DEFAULT_DAMPING, nodes=None, min_damping=MIN_DAMPING):
    """Damped fixed-point iteration u <- (1 - w) u + w A u.

    Starts from ``A(0)`` unless ``u0`` is given.  The damping w is halved
    (down to ``min_damping``) whenever the residual grew over the last
    five steps.  Non-convergence is reported, not raised.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    if not (0.0 < damping <= 1.0):
        raise ValueError("damping must lie in (0, 1]")
    ctx.require_h1()
    if u0 is None:
        grid = solution_grid(ctx) if nodes is None else np.asarray(nodes, dtype=float)
        plan = OperatorPlan(ctx, grid)
        u = apply_operator(ctx, f, GridFunction(grid, np.zeros(len(grid))), plan, clamp=True)
    else:
        plan = OperatorPlan(ctx, u0.nodes)
        u = u0
    u = u.with_values(np.maximum(u.values, 0.0))

    history = []
    best_u, best_res = u, np.inf
    converged = False
    it = 0
    res = np.inf
    while it < max_iter:
        it += 1
        Au = apply_operator(ctx, f, u, plan, clamp=True)
        res = float(np.max(np.abs(u.values - Au.values)))
        if res < best_res:
            best_u, best_res = u, res
        if res <= tol:
            converged = True
            break
        history.append(res)
        if (len(history) > OSCILLATION_WINDOW
                and history[-1] > history[-1 - OSCILLATION_WINDOW]
                and damping > min_damping):
            damping = max(damping / 2.0, min_damping)
            log.debug("iteration %d: residual rose to %.3e, damping -> %g", it, res, damping)
            history.clear()
        new = (1.0 - damping) * u.values + damping * Au.values
        u = u.with_values(np.maximum(new, 0.0))
    if not converged:
        u = best_u
    report = verify_solution(ctx, f, u, plan=plan)
    report = SolveReport(
        iterations=it,
        fixed_point_residual=report.fixed_point_residual,
        bc_residual=report.bc_residual,
        eq13_residual=report.eq13_residual,
        min_value=report.min_value,
        converged=converged,
        damping_used=damping,
        sup_norm=report.sup_norm,
        notes=report.notes if converged else report.notes + (
            f"no convergence in {max_iter} iterations; best residual {best_res:.3e}",),
    )
    return u, report


def fractional_integral(g, t_points, alpha, order=8, panels=16):
    """Riemann-Liouville integral I^alpha g at each t (vectorised g)."""
    t_points = np.asarray(t_points, dtype=float)
    ref = QuadratureRule.build(0.0, 1.0, (), order, panels)
    s = t_points[:, None] * ref.nodes[None, :]
    w = t_points[:, None] * ref.weights[None, :]
    kern = (t_points[:, None] - s) ** (alpha - 1.0) / math.gamma(alpha)
    vals = np.asarray(g(s.ravel()), dtype=float).reshape(s.shape)
    return np.sum(w * kern * vals, axis=1)


def verify_solution(ctx, f, u, plan=None):
    """Residual checks on a candidate solution; never raises on bad data.

    * fixed point: ``max |u - A u|`` at the nodes;
    * boundary: ``max(|u(0)|, |u(1) - mu u(eta) - beta gamma[u]|)``;
    * integral form: ``max_t |u(t) + I^a g(t) - t (u(1) + I^a g(1))|`` with
      ``g(s) = f(s, u(s))``.
    """
    spec = ctx.spec
    if plan is None:
        plan = OperatorPlan(ctx, u.nodes)
    Au = apply_operator(ctx, f, u, plan)
    fp = float(np.max(np.abs(u.values - Au.values)))

    gamma_u = rs_integral(u, ctx.measure, ctx.quad_order, ctx.quad_panels)
    bc = max(abs(u(0.0)), abs(u(1.0) - spec.mu * u(spec.eta) - spec.beta * gamma_u))

    def g(s):
        return _eval_f(f, s, np.asarray(u(s)))

    t = u.nodes
    frac = fractional_integral(g, t, ctx.alpha, ctx.quad_order, ctx.quad_panels)
    frac1 = frac[-1] if t[-1] == 1.0 else fractional_integral(g, [1.0], ctx.alpha)[0]
    eq13 = float(np.max(np.abs(u.values + frac - t * (u(1.0) + frac1))))

    notes = ()
    if np.min(u.values) < 0:
        notes = (f"solution takes negative values (min {np.min(u.values):.3e})",)
    return SolveReport(
        iterations=0,
        fixed_point_residual=fp,
        bc_residual=float(bc),
        eq13_residual=eq13,
        min_value=float(np.min(u.values)),
        converged=True,
        damping_used=0.0,
        sup_norm=u.sup_norm(),
        notes=notes,
    )
