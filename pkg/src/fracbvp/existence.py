"""Existence certificate: (H1), (H2) and the growth conditions (C1), (C2).

(C1)  f(t, x) <= a x + c on [0,1] x [0,inf) for some a in (0, 1/tau2), c > 0
(C2)  f(t, x) >= b x     on [0,1] x [0,delta] for some b >= 1/tau1, delta > 0

The pointwise inequalities can only be sampled, so a passing check is
reported as ``sampled-pass`` unless the caller vouches for it
analytically (``c1_global=True``).
"""

from dataclasses import dataclass, field

import numpy as np

from .kernel import check_hypotheses
from .spectral import DEFAULT_QUAD_TOL, tau1, tau2

PASS = "pass"
SAMPLED = "sampled-pass"
FAIL = "fail"
MARGIN_TOL = 1e-12
DEFAULT_GRID = 200


@dataclass(frozen=True)
class GrowthEnvelope:
    a: float
    c: float
    b: float
    delta: float

    def __post_init__(self):
        for name in ("a", "c", "b", "delta"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and np.isfinite(value) and value > 0):
                raise ValueError(f"envelope field {name!r} must be a positive number, got {value!r}")


@dataclass(frozen=True)
class CheckResult:
    status: str
    evidence: dict = field(default_factory=dict)

    @property
    def ok(self):
        return self.status in (PASS, SAMPLED)

    def to_dict(self):
        return {"status": self.status, **self.evidence}


@dataclass(frozen=True)
class ExistenceCertificate:
    h1: CheckResult
    h2: CheckResult
    c1: CheckResult
    c2: CheckResult
    notes: tuple = ()

    @property
    def verdict(self):
        return all(r.ok for r in (self.h1, self.h2, self.c1, self.c2))

    def to_dict(self):
        return {
            "verdict": self.verdict,
            "h1": self.h1.to_dict(),
            "h2": self.h2.to_dict(),
            "c1": self.c1.to_dict(),
            "c2": self.c2.to_dict(),
            "notes": list(self.notes),
        }


def _sample(f, t_max, x_lo, x_hi, grid):
    t = np.linspace(0.0, t_max, grid)
    x = np.linspace(x_lo, x_hi, grid)
    T, X = np.meshgrid(t, x, indexing="ij")
    F = np.broadcast_to(np.asarray(f(T.ravel(), X.ravel()), dtype=float), (T.size,))
    return T.ravel(), X.ravel(), F


def check_c1(ctx, f, env, x_max, grid=DEFAULT_GRID, tau2_value=None,
             c1_global=False, tol=MARGIN_TOL):
    """a < 1/tau2 (strict) and f <= a x + c on a grid over [0,1] x [0, x_max]."""
    if not x_max > 0:
        raise ValueError("x_max must be positive")
    t2 = tau2(ctx) if tau2_value is None else tau2_value
    threshold = 1.0 / t2
    T, X, F = _sample(f, 1.0, 0.0, x_max, grid)
    margin = env.a * X + env.c - F
    k = int(np.argmin(margin))
    threshold_ok = env.a < threshold
    sampled_ok = bool(margin[k] >= -tol)
    if threshold_ok and sampled_ok:
        status = PASS if c1_global else SAMPLED
    else:
        status = FAIL
    return CheckResult(status, {
        "a": env.a, "c": env.c, "tau2_inv": threshold,
        "threshold_ok": threshold_ok,
        "grid": [grid, grid], "x_max": x_max,
        "worst_margin": float(margin[k]),
        "worst_point": [float(T[k]), float(X[k])],
        "analytic_declaration": bool(c1_global),
    })


def check_c2(ctx, f, env, grid=DEFAULT_GRID, tau1_value=None, tol=MARGIN_TOL):
    """b >= 1/tau1 and f >= b x on a grid over [0,1] x [0, delta]."""
    t1 = tau1(ctx) if tau1_value is None else tau1_value
    threshold = 1.0 / t1
    T, X, F = _sample(f, 1.0, 0.0, env.delta, grid)
    margin = F - env.b * X
    k = int(np.argmin(margin))
    threshold_ok = env.b >= threshold
    sampled_ok = bool(margin[k] >= -tol)
    return CheckResult(SAMPLED if threshold_ok and sampled_ok else FAIL, {
        "b": env.b, "delta": env.delta, "tau1_inv": threshold,
        "threshold_ok": threshold_ok,
        "grid": [grid, grid],
        "worst_margin": float(margin[k]),
        "worst_point": [float(T[k]), float(X[k])],
    })


def certify(ctx, f, env, x_max, grid=DEFAULT_GRID, h2_grid=2001, c1_global=False,
            taus=None, quad_tol=DEFAULT_QUAD_TOL):
    """Aggregate (H1), (H2), (C1), (C2) into an :class:`ExistenceCertificate`.

    ``taus`` may carry precomputed ``(tau1, tau2)`` so that the thresholds
    are exactly those reported elsewhere.
    """
    hyp = check_hypotheses(ctx, h2_grid)
    h1 = CheckResult(PASS if hyp.h1 else FAIL, {"lambda": hyp.lam})
    h2 = CheckResult(hyp.h2, {
        "grid": hyp.grid_size, "min_g": hyp.min_g, "argmin_g": hyp.argmin_g,
        "violations": list(hyp.violations)})
    notes = []
    if not hyp.h1:
        skipped = {"reason": "not evaluated: hypothesis H1 violated"}
        notes.append("tau bounds undefined because Lambda is outside [0, 1)")
        return ExistenceCertificate(h1, h2, CheckResult(FAIL, skipped),
                                    CheckResult(FAIL, skipped), tuple(notes))
    if taus is None:
        taus = (tau1(ctx, quad_tol), tau2(ctx, quad_tol))
    c1 = check_c1(ctx, f, env, x_max, grid, tau2_value=taus[1], c1_global=c1_global)
    c2 = check_c2(ctx, f, env, grid, tau1_value=taus[0])
    if c1.status == SAMPLED:
        notes.append(f"C1 inequality sampled on [0, {x_max:g}] only")
    if h2.status == SAMPLED:
        notes.append("H2 sampled on a finite grid")
    return ExistenceCertificate(h1, h2, c1, c2, tuple(notes))
