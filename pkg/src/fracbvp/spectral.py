"""Spectral radius of (K u)(t) = int_0^1 H(t, s) u(s) ds.

``tau1`` and ``tau2`` are the closed-form lower and upper bounds on r(K);
``nystrom_matrix`` and ``power_iteration`` give a direct numerical estimate
with its Perron eigenvector, and ``gelfand_check`` tabulates
``||M^k||^(1/k)``, each term of which bounds the discrete radius from above.
"""

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np

from .quadrature import QuadratureFailure, QuadratureRule, refine_until
from .solver import GridFunction

DEFAULT_N = 256
DEFAULT_QUAD_TOL = 1e-10
POWER_TOL = 1e-12
POWER_MAX_ITER = 20000


class PowerIterationError(RuntimeError):
    def __init__(self, message, r, v, residual):
        super().__init__(message)
        self.r = r
        self.v = v
        self.residual = residual


def _refine(ctx, f, quad_tol):
    bps = [b for b in ctx.breakpoints if 0.0 < b < 1.0]
    try:
        return refine_until(f, 0.0, 1.0, bps, quad_tol, order=ctx.quad_order,
                            start_panels=max(1, ctx.quad_panels // 4), abs_tol=1e-16)
    except QuadratureFailure as exc:
        # spline-tabulated g_A limits attainable agreement; keep the best value
        return exc.value, exc.error


def tau1_with_error(ctx, quad_tol=DEFAULT_QUAD_TOL):
    ctx.require_h1()
    spec, a1 = ctx.spec, ctx.alpha - 1.0
    coef = spec.mu - ctx.lam + 1.0

    def integrand(s):
        inner = coef * (1.0 - s) ** a1 / ctx.gamma_alpha
        if spec.beta:
            inner = inner + spec.beta * ctx.g(s)
        return (s - s ** a1) * inner

    value, err = _refine(ctx, integrand, quad_tol)
    scale = ctx.eta_factor / (1.0 - ctx.lam)
    return scale * value, scale * err


def tau2_with_error(ctx, quad_tol=DEFAULT_QUAD_TOL):
    ctx.require_h1()
    spec = ctx.spec
    g_int, err = (0.0, 0.0)
    if spec.beta:
        g_int, err = _refine(ctx, ctx.g, quad_tol)
    tail = (spec.mu - ctx.lam + 1.0) / math.gamma(ctx.alpha + 1.0)
    inv = 1.0 / (1.0 - ctx.lam)
    return inv * (spec.beta * g_int + tail), inv * spec.beta * err


def tau1(ctx, quad_tol=DEFAULT_QUAD_TOL):
    """Lower bound tau1 = (eta - eta^(a-1))/(1-Lambda) int (s - s^(a-1)) (beta g_A + (mu-Lambda+1) Psi) ds."""
    return tau1_with_error(ctx, quad_tol)[0]


def tau2(ctx, quad_tol=DEFAULT_QUAD_TOL):
    """Upper bound tau2 = (beta int g_A + (mu-Lambda+1)/Gamma(a+1)) / (1-Lambda)."""
    return tau2_with_error(ctx, quad_tol)[0]


def _largest_divisor(n, cap):
    for q in range(min(cap, n), 0, -1):
        if n % q == 0:
            return q
    return 1


def nystrom_rule(ctx, n):
    """n-point composite rule with uniform panels cut at eta and the measure breakpoints."""
    if n < 8:
        raise ValueError(f"Nystrom size must be at least 8, got {n}")
    order = _largest_divisor(n, ctx.quad_order)
    n_panels = n // order
    cuts = np.array([k for k in ctx.kinks if 0.0 < k < 1.0])
    cuts = np.concatenate([[0.0], cuts, [1.0]])
    lengths = np.diff(cuts)
    if n_panels < len(lengths):
        cuts, lengths = np.array([0.0, 1.0]), np.array([1.0])
    alloc = np.maximum(1, np.floor(n_panels * lengths).astype(int))
    while alloc.sum() > n_panels:
        alloc[np.argmax(alloc)] -= 1
    while alloc.sum() < n_panels:
        alloc[np.argmax(lengths / alloc)] += 1
    edges = np.unique(np.concatenate([
        np.linspace(lo, hi, m + 1) for lo, hi, m in zip(cuts[:-1], cuts[1:], alloc)]))
    return QuadratureRule.from_edges(edges, order)


def nystrom_matrix(ctx, n=DEFAULT_N, rule=None):
    """M[i, j] = H(s_i, s_j) w_j on the nodes of :func:`nystrom_rule`."""
    ctx.require_h1()
    rule = rule or nystrom_rule(ctx, n)
    s = rule.nodes
    return ctx.H(s[:, None], s[None, :]) * rule.weights[None, :]


def power_iteration(M, tol=POWER_TOL, max_iter=POWER_MAX_ITER):
    """Dominant eigenpair of a nonnegative matrix.

    Starts from the all-ones vector and normalises to max-norm 1.  Stops
    when ``||M v - r v||_inf <= tol * r``; the returned residual is the
    absolute one.  A zero image gives ``r = 0`` with the ones vector.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("power iteration needs a square matrix")
    if np.any(M < 0):
        raise ValueError("power iteration expects a nonnegative matrix")
    v = np.ones(M.shape[0])
    r, residual = 0.0, np.inf
    for _ in range(max_iter):
        w = M @ v
        r = float(np.max(np.abs(w)))
        if r == 0.0:
            return 0.0, np.ones(M.shape[0]), 0.0
        residual = float(np.max(np.abs(w - r * v)))
        if residual <= tol * r:
            return r, v, residual
        v = w / r
    raise PowerIterationError(
        f"power iteration did not converge in {max_iter} steps "
        f"(r ~ {r:.12g}, residual {residual:.3e})", r, v, residual)


def gelfand_check(M, n_max=64):
    """``(||M^k||_inf)^(1/k)`` for k = 1..n_max.

    For a nonnegative M the induced max-norm of M^k is the largest entry of
    ``M^k 1``, so only a vector is propagated.  It is renormalised every
    step and the accumulated log-scale is added back before taking the
    k-th root, which avoids overflow and underflow.
    """
    M = np.asarray(M, dtype=float)
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    nonneg = not np.any(M < 0)
    out = []
    log_scale = 0.0
    x = np.ones(M.shape[0]) if nonneg else np.eye(M.shape[0])
    for k in range(1, n_max + 1):
        x = M @ x
        norm = float(np.max(x)) if nonneg else float(np.max(np.sum(np.abs(x), axis=1)))
        if norm == 0.0:
            out.extend([0.0] * (n_max - k + 1))
            break
        log_scale += math.log(norm)
        x = x / norm
        out.append(math.exp(log_scale / k))
    return out


@dataclass(frozen=True)
class SpectralBounds:
    tau1: float
    tau2: float
    r_estimate: float
    eigenfunction: GridFunction = field(repr=False)
    n_nodes: int
    residual: float
    tolerance: float = POWER_TOL
    degenerate: bool = False
    mesh_error: float = float("nan")
    tau1_error: float = 0.0
    tau2_error: float = 0.0

    @property
    def tau1_inv(self):
        return 1.0 / self.tau1 if self.tau1 > 0 else math.inf

    @property
    def tau2_inv(self):
        return 1.0 / self.tau2 if self.tau2 > 0 else math.inf

    def sandwich_ok(self, eps=None):
        if eps is None:
            eps = max(1e-6, 0.0 if math.isnan(self.mesh_error) else self.mesh_error)
        return self.tau1 - eps <= self.r_estimate <= self.tau2 + eps


def _eigenfunction(ctx, rule, r, v):
    """Extend the Nystrom eigenvector to t = 0 and t = 1 by the Nystrom formula."""
    nodes = rule.nodes
    ends = np.array([0.0, 1.0])
    if r > 0:
        end_vals = (ctx.H(ends[:, None], nodes[None, :]) * rule.weights) @ v / r
    else:
        end_vals = np.zeros(2)
    t = np.concatenate([[0.0], nodes, [1.0]])
    vals = np.concatenate([[end_vals[0]], v, [end_vals[1]]])
    peak = np.max(np.abs(vals))
    if peak > 0:
        vals = vals / peak
    return GridFunction(t, vals)


def spectral_bounds(ctx, n=DEFAULT_N, tol=POWER_TOL, quad_tol=DEFAULT_QUAD_TOL,
                    mesh_check=True):
    """tau1, tau2 and the Nystrom/power-iteration estimate of r(K).

    With ``mesh_check`` the radius is recomputed at 2n nodes and the
    difference is stored as ``mesh_error``.
    """
    t1, e1 = tau1_with_error(ctx, quad_tol)
    t2, e2 = tau2_with_error(ctx, quad_tol)
    rule = nystrom_rule(ctx, n)
    M = nystrom_matrix(ctx, rule=rule)
    r, v, residual = power_iteration(M, tol)
    mesh_error = float("nan")
    if mesh_check:
        r2, _, _ = power_iteration(nystrom_matrix(ctx, 2 * n), tol)
        mesh_error = abs(r2 - r)
    return SpectralBounds(
        tau1=t1, tau2=t2, r_estimate=r,
        eigenfunction=_eigenfunction(ctx, rule, r, v),
        n_nodes=len(rule.nodes), residual=residual, tolerance=tol * max(r, 0.0),
        degenerate=(r == 0.0), mesh_error=mesh_error,
        tau1_error=e1, tau2_error=e2,
    )


def scale_radius(a, bounds):
    """Bounds for K_a = a K: tau1, tau2 and r scale by a; eigenfunction unchanged."""
    if not a > 0:
        raise ValueError(f"scale factor must be positive, got {a!r}")
    return dataclasses.replace(
        bounds, tau1=a * bounds.tau1, tau2=a * bounds.tau2,
        r_estimate=a * bounds.r_estimate, residual=a * bounds.residual,
        tolerance=a * bounds.tolerance, mesh_error=a * bounds.mesh_error,
        tau1_error=a * bounds.tau1_error, tau2_error=a * bounds.tau2_error)
