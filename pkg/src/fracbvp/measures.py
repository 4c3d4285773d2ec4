"""Signed measures dA on [0, 1] and Riemann-Stieltjes integration against them.

A bounded-variation integrator A is stored by its jump part (atoms) and
its absolutely continuous part (a density).  A step function such as::

    A(t) = 0 on [0, 3/7),  2 on [3/7, 4/7),  1 on [4/7, 1]

becomes ``SignedMeasure(atoms=[(3/7, 2), (4/7, -1)])``.
"""

from dataclasses import dataclass, field

import numpy as np

from . import expr
from .quadrature import DEFAULT_ORDER, DEFAULT_PANELS, QuadratureRule


class MeasureError(ValueError):
    pass


@dataclass(frozen=True)
class SignedMeasure:
    """Atoms ``(location, weight)`` plus an optional density.

    ``density`` is a vectorised callable of one variable or an expression
    string in ``t`` (or ``s``).  ``density_breakpoints`` lists interior
    points where the density may be discontinuous or non-smooth.
    """

    atoms: tuple = ()
    density: object = None
    density_breakpoints: tuple = ()
    density_source: str = field(default=None, compare=False)

    def __post_init__(self):
        atoms = []
        for k, atom in enumerate(self.atoms):
            try:
                loc, weight = (float(v) for v in atom)
            except (TypeError, ValueError):
                raise MeasureError(f"atom #{k} must be a (location, weight) pair, got {atom!r}") from None
            if not (np.isfinite(loc) and 0.0 <= loc <= 1.0):
                raise MeasureError(f"atom #{k} at t={loc!r} lies outside [0, 1]")
            if not np.isfinite(weight) or weight == 0.0:
                raise MeasureError(f"atom #{k} at t={loc!r} has invalid weight {weight!r} (must be finite and nonzero)")
            if atoms and loc <= atoms[-1][0]:
                what = "coincides with" if loc == atoms[-1][0] else "precedes"
                raise MeasureError(
                    f"atom #{k} at t={loc!r} {what} atom #{k - 1} at t={atoms[-1][0]!r}; "
                    "locations must be strictly increasing")
            atoms.append((loc, weight))
        object.__setattr__(self, "atoms", tuple(atoms))

        bps = []
        for p in self.density_breakpoints:
            p = float(p)
            if not (0.0 <= p <= 1.0):
                raise MeasureError(f"density breakpoint {p!r} lies outside [0, 1]")
            bps.append(p)
        object.__setattr__(self, "density_breakpoints", tuple(sorted(set(bps))))

        dens = self.density
        if isinstance(dens, str):
            source = dens
            e = expr.parse(dens, allowed_vars={"t", "s"})
            dens = expr.as_function(e, [("t", "s")])
            object.__setattr__(self, "density", dens)
            object.__setattr__(self, "density_source", source)
        elif dens is not None and not callable(dens):
            raise MeasureError("density must be callable, an expression string or None")

    @property
    def locations(self):
        return np.array([a[0] for a in self.atoms], dtype=float)

    @property
    def weights(self):
        return np.array([a[1] for a in self.atoms], dtype=float)

    @property
    def has_density(self):
        return self.density is not None

    @property
    def is_atomic(self):
        return self.density is None

    def density_values(self, t):
        t = np.asarray(t, dtype=float)
        if self.density is None:
            return np.zeros_like(t)
        return np.broadcast_to(np.asarray(self.density(t), dtype=float), t.shape)

    def to_dict(self):
        return {
            "atoms": [[loc, w] for loc, w in self.atoms],
            "density": self.density_source,
            "density_breakpoints": list(self.density_breakpoints),
        }


def breakpoints(A):
    """Sorted union of {0, 1}, atom locations and density breakpoints."""
    pts = {0.0, 1.0}
    pts.update(loc for loc, _ in A.atoms)
    pts.update(A.density_breakpoints)
    return sorted(pts)


def density_rule(A, order=DEFAULT_ORDER, panels=DEFAULT_PANELS):
    return QuadratureRule.build(0.0, 1.0, breakpoints(A)[1:-1], order, panels)


def rs_integral(phi, A, quad_order=DEFAULT_ORDER, panels=DEFAULT_PANELS):
    """Integrate ``phi`` against dA.

    The atom part is an exact finite sum; the density part uses the
    composite rule cut at the measure's breakpoints.  ``phi`` must be
    vectorised over numpy arrays.
    """
    total = 0.0
    if A.atoms:
        locs = A.locations
        vals = np.broadcast_to(np.asarray(phi(locs), dtype=float), locs.shape)
        total += float(np.dot(A.weights, vals))
    if A.density is not None:
        rule = density_rule(A, quad_order, panels)
        vals = np.broadcast_to(np.asarray(phi(rule.nodes), dtype=float), rule.nodes.shape)
        total += float(np.dot(rule.weights, vals * A.density_values(rule.nodes)))
    return total


def total_variation(A, quad_order=DEFAULT_ORDER, panels=DEFAULT_PANELS):
    tv = float(np.sum(np.abs(A.weights))) if A.atoms else 0.0
    if A.density is not None:
        rule = density_rule(A, quad_order, panels)
        tv += float(np.dot(rule.weights, np.abs(A.density_values(rule.nodes))))
    return tv


def mass(A, quad_order=DEFAULT_ORDER, panels=DEFAULT_PANELS):
    return rs_integral(lambda t: np.ones_like(t), A, quad_order, panels)


LEBESGUE = SignedMeasure(density=lambda t: np.ones_like(np.asarray(t, dtype=float)),
                         density_source="1")
EMPTY = SignedMeasure()
