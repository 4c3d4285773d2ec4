"""Green's function, composite kernel and bounding functions.

Problem data: ``D^alpha u + f(t, u) = 0`` on (0, 1) with ``u(0) = u''(0) = 0``
and ``u(1) = mu*u(eta) + beta*gamma[u]``, ``gamma[u] = int u dA``.

    G(t, s) = [t(1-s)^(alpha-1) - (t-s)_+^(alpha-1)] / Gamma(alpha)
    Lambda  = mu*eta + beta*gamma[t]
    g_A(s)  = int G(t, s) dA(t)
    H(t, s) = beta*t/(1-Lambda) g_A(s) + mu*t/(1-Lambda) G(eta, s) + G(t, s)
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from . import expr
from .measures import EMPTY, SignedMeasure, breakpoints, rs_integral
from .quadrature import DEFAULT_ORDER, DEFAULT_PANELS, QuadratureRule

H2_TOL = 1e-12


class SpecError(ValueError):
    """Invalid problem data."""


class HypothesisError(ValueError):
    """A kernel quantity was requested while (H1) fails."""


def _unit(name, x):
    x = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(x)) or np.any(x < 0.0) or np.any(x > 1.0):
        raise ValueError(f"{name} must lie in [0, 1]")
    return x


def _check_alpha(alpha):
    if not (2.0 < alpha <= 3.0):
        raise SpecError(f"alpha must lie in (2,3], got {alpha!r}")


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def _green(t, s, alpha, gamma_alpha):
    # no domain checks; callers guarantee t, s in [0, 1]
    a1 = alpha - 1.0
    lag = np.clip(t - s, 0.0, None)
    return (t * (1.0 - s) ** a1 - lag ** a1) / gamma_alpha


def green_g(t, s, alpha):
    """Green's function G(t, s); broadcasts over array arguments."""
    _check_alpha(alpha)
    t = _unit("t", t)
    s = _unit("s", s)
    return _out(_green(t, s, alpha, math.gamma(alpha)))


def psi(s, alpha):
    """Upper envelope (1 - s)^(alpha-1) / Gamma(alpha) of G(., s)."""
    _check_alpha(alpha)
    s = _unit("s", s)
    return _out((1.0 - s) ** (alpha - 1.0) / math.gamma(alpha))


def shape_factor(t, alpha):
    """t - t^(alpha-1), the lower-bound profile of G(t, .) / Psi."""
    t = np.asarray(t, dtype=float)
    return _out(t - t ** (alpha - 1.0))


def rho_max(alpha):
    """Maximum of t - t^(alpha-1) over [0, 1], attained at (alpha-1)^(-1/(alpha-2))."""
    if alpha == 2.0:
        raise SpecError("rho_max is undefined at alpha = 2 (singular exponent)")
    _check_alpha(alpha)
    return (alpha - 2.0) * math.exp(-(alpha - 1.0) / (alpha - 2.0) * math.log(alpha - 1.0))


def rho_argmax(alpha):
    _check_alpha(alpha)
    return math.exp(-math.log(alpha - 1.0) / (alpha - 2.0))


@dataclass(frozen=True)
class ProblemSpec:
    """Boundary data (alpha, mu, eta, beta, A) and the nonlinearity f(t, u).

    ``nonlinearity`` may be an expression string in ``t`` and ``u``, a
    parsed :class:`~fracbvp.expr.Expression`, or a vectorised callable
    ``f(t, u)``.
    """

    alpha: float
    mu: float = 0.0
    eta: float = 0.5
    beta: float = 0.0
    measure: SignedMeasure = EMPTY
    nonlinearity: object = None
    f_source: str = field(default=None, compare=False)

    def __post_init__(self):
        for name in ("alpha", "mu", "eta", "beta"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
                raise SpecError(f"{name} must be a finite real number, got {value!r}")
            object.__setattr__(self, name, float(value))
        _check_alpha(self.alpha)
        if not (0.0 < self.eta < 1.0):
            raise SpecError(f"eta must lie in (0,1), got {self.eta!r}")
        if self.mu < 0.0:
            raise SpecError(f"mu must be nonnegative, got {self.mu!r}")
        if self.beta < 0.0:
            raise SpecError(f"beta must be nonnegative, got {self.beta!r}")
        if not isinstance(self.measure, SignedMeasure):
            raise SpecError("measure must be a SignedMeasure")
        f = self.nonlinearity
        if isinstance(f, str):
            f = expr.parse(f, allowed_vars={"t", "u"})
        if isinstance(f, expr.Expression):
            object.__setattr__(self, "f_source", f.source)
            f = expr.as_function(f, [("t",), ("u",)])
        elif f is not None and not callable(f):
            raise SpecError("nonlinearity must be an expression or a callable f(t, u)")
        object.__setattr__(self, "nonlinearity", f)
        object.__setattr__(self, "_lambda", lambda_const(self))

    @property
    def lam(self):
        return self._lambda

    @property
    def admissible(self):
        return 0.0 <= self._lambda < 1.0


def lambda_const(spec, quad_order=DEFAULT_ORDER, panels=DEFAULT_PANELS):
    """Lambda = mu*eta + beta*gamma[t]."""
    gamma_t = rs_integral(lambda t: t, spec.measure, quad_order, panels)
    return spec.mu * spec.eta + spec.beta * gamma_t


def chebyshev_nodes(n):
    """n nodes on [0, 1] clustered toward both ends, 0 and 1 included."""
    k = np.arange(n)
    x = 0.5 * (1.0 - np.cos(np.pi * k / (n - 1)))
    x[0], x[-1] = 0.0, 1.0
    return x


class KernelContext:
    """Cached evaluation of g_A, H, Phi and rho for one problem.

    g_A is exact (finite sum) for the atoms.  For the density part
    ``g_d(s) = [(1-s)^(alpha-1) m1 - J(s)] / Gamma(alpha)`` with
    ``m1 = int t d(t) dt`` and ``J(s) = int_s^1 (t-s)^(alpha-1) d(t) dt``;
    J is tabulated on clustered nodes and spline-interpolated.
    """

    def __init__(self, spec, quad_order=DEFAULT_ORDER, quad_panels=DEFAULT_PANELS,
                 g_nodes=1025):
        self.spec = spec
        self.alpha = spec.alpha
        self.quad_order = quad_order
        self.quad_panels = quad_panels
        self.gamma_alpha = math.gamma(spec.alpha)
        self.lam = lambda_const(spec, quad_order, quad_panels)
        self.measure = spec.measure
        self.breakpoints = breakpoints(spec.measure)
        # s-locations where H(t, .) can lose smoothness, besides s = t
        kinks = set(self.breakpoints) | {spec.eta}
        self.kinks = sorted(kinks)
        self._atom_t = self.measure.locations
        self._atom_w = self.measure.weights
        self._g_table = None
        if self.measure.has_density:
            self._m1 = rs_integral(lambda t: t, SignedMeasure(
                density=self.measure.density,
                density_breakpoints=self.measure.density_breakpoints),
                quad_order, quad_panels)
            nodes = np.union1d(chebyshev_nodes(g_nodes), self.breakpoints)
            self._g_table = CubicSpline(nodes, self._weyl_exact(nodes))

    # -- hypothesis (H1) -------------------------------------------------
    @property
    def h1(self):
        return 0.0 <= self.lam < 1.0

    def require_h1(self):
        if not self.h1:
            raise HypothesisError(
                f"hypothesis H1 violated: Lambda = {self.lam!r} is not in [0, 1)")

    # -- g_A ---------------------------------------------------------------
    def _weyl_exact(self, s_values):
        a1 = self.alpha - 1.0
        dens_bps = self.measure.density_breakpoints
        out = np.empty(len(s_values))
        for k, s in enumerate(s_values):
            if s >= 1.0:
                out[k] = 0.0
                continue
            inner = [p for p in dens_bps if s < p < 1.0]
            rule = QuadratureRule.build(s, 1.0, inner, self.quad_order, self.quad_panels)
            t = rule.nodes
            out[k] = np.dot(rule.weights, (t - s) ** a1 * self.measure.density_values(t))
        return out

    def _g_atoms(self, s):
        if len(self._atom_t) == 0:
            return np.zeros_like(s)
        vals = _green(self._atom_t[:, None], s.ravel()[None, :], self.alpha, self.gamma_alpha)
        return (self._atom_w @ vals).reshape(s.shape)

    def _g(self, s, exact=False):
        g = self._g_atoms(s)
        if self.measure.has_density:
            a1 = self.alpha - 1.0
            if exact:
                weyl = self._weyl_exact(s.ravel()).reshape(s.shape)
            else:
                weyl = self._g_table(s)
            g = g + ((1.0 - s) ** a1 * self._m1 - weyl) / self.gamma_alpha
        return g

    def g(self, s):
        """g_A(s) = int_0^1 G(t, s) dA(t)."""
        return _out(self._g(_unit("s", s)))

    def g_exact(self, s):
        """g_A by direct quadrature at each s (no interpolation table)."""
        return _out(self._g(_unit("s", s), exact=True))

    # -- kernel and bounds -------------------------------------------------
    def G(self, t, s):
        return _out(_green(_unit("t", t), _unit("s", s), self.alpha, self.gamma_alpha))

    def psi(self, s):
        s = _unit("s", s)
        return _out((1.0 - s) ** (self.alpha - 1.0) / self.gamma_alpha)

    def H(self, t, s):
        self.require_h1()
        t = _unit("t", t)
        s = _unit("s", s)
        spec = self.spec
        inv = 1.0 / (1.0 - self.lam)
        h = _green(t, s, self.alpha, self.gamma_alpha)
        if spec.mu:
            h = h + spec.mu * inv * t * _green(spec.eta, s, self.alpha, self.gamma_alpha)
        if spec.beta:
            h = h + spec.beta * inv * t * self._g(s)
        return _out(h)

    def phi(self, s):
        self.require_h1()
        s = _unit("s", s)
        spec = self.spec
        inv = 1.0 / (1.0 - self.lam)
        psi_s = (1.0 - s) ** (self.alpha - 1.0) / self.gamma_alpha
        out = (spec.mu - self.lam + 1.0) * inv * psi_s
        if spec.beta:
            out = out + spec.beta * inv * self._g(s)
        return _out(out)

    def rho(self, t):
        self.require_h1()
        t = _unit("t", t)
        eta, a1 = self.spec.eta, self.alpha - 1.0
        return _out((eta - eta ** a1) * (t - t ** a1))

    @property
    def eta_factor(self):
        eta = self.spec.eta
        return eta - eta ** (self.alpha - 1.0)


def kernel_h(ctx, t, s):
    return ctx.H(t, s)


def g_weight(ctx, s):
    return ctx.g(s)


def bound_phi(ctx, s):
    return ctx.phi(s)


def bound_rho(ctx, t):
    return ctx.rho(t)


@dataclass(frozen=True)
class HypothesisReport:
    lam: float
    h1: bool
    h2: str  # "sampled-pass" or "fail"
    grid_size: int
    min_g: float
    argmin_g: float
    violations: tuple = ()

    @property
    def h2_ok(self):
        return self.h2 != "fail"

    def to_dict(self):
        return {
            "lambda": self.lam,
            "h1": "pass" if self.h1 else "fail",
            "h2": self.h2,
            "h2_grid": self.grid_size,
            "min_g": self.min_g,
            "argmin_g": self.argmin_g,
            "h2_violations": list(self.violations),
        }


def check_hypotheses(ctx, grid_size=2001, tol=H2_TOL, max_reported=20):
    """(H1) exactly, (H2) on a sample grid that includes every breakpoint."""
    grid = np.union1d(np.linspace(0.0, 1.0, grid_size), ctx.breakpoints)
    g = np.asarray(ctx._g(grid))
    bad = np.flatnonzero(g < -tol)
    k = int(np.argmin(g))
    return HypothesisReport(
        lam=ctx.lam,
        h1=ctx.h1,
        h2="fail" if len(bad) else "sampled-pass",
        grid_size=len(grid),
        min_g=float(g[k]),
        argmin_g=float(grid[k]),
        violations=tuple(float(grid[i]) for i in bad[:max_reported]),
    )
