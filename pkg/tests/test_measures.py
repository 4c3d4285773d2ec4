import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fracbvp.measures import (LEBESGUE, MeasureError, SignedMeasure, breakpoints, mass,
                              rs_integral, total_variation)

EXAMPLE = SignedMeasure(atoms=[(3 / 7, 2.0), (4 / 7, -1.0)])


def test_example_first_moment():
    assert rs_integral(lambda t: t, EXAMPLE) == pytest.approx(2 / 7, abs=1e-16)


def test_zero_integrand():
    assert rs_integral(lambda t: 0 * t, EXAMPLE) == 0.0
    assert rs_integral(lambda t: 0 * t, LEBESGUE) == 0.0


def test_lebesgue_second_moment():
    assert rs_integral(lambda t: t ** 2, LEBESGUE) == pytest.approx(1 / 3, abs=1e-14)


def test_total_variation():
    assert total_variation(EXAMPLE) == 3.0
    assert total_variation(SignedMeasure()) == 0.0
    assert total_variation(LEBESGUE) == pytest.approx(1.0, abs=1e-14)


def test_breakpoints():
    assert breakpoints(EXAMPLE) == [0.0, 3 / 7, 4 / 7, 1.0]
    assert breakpoints(SignedMeasure()) == [0.0, 1.0]
    m = SignedMeasure(atoms=[(0.5, 1.0)], density="1", density_breakpoints=[0.25])
    assert breakpoints(m) == [0.0, 0.25, 0.5, 1.0]


def test_unsorted_atoms_named():
    with pytest.raises(MeasureError, match="atom #1 at t=0.2"):
        SignedMeasure(atoms=[(0.5, 1.0), (0.2, 1.0)])


def test_coincident_atoms_rejected():
    with pytest.raises(MeasureError, match="coincides"):
        SignedMeasure(atoms=[(0.5, 1.0), (0.5, 2.0)])


@pytest.mark.parametrize("atom", [(1.5, 1.0), (-0.1, 1.0), (0.5, 0.0), (0.5, float("nan"))])
def test_invalid_atoms(atom):
    with pytest.raises(MeasureError):
        SignedMeasure(atoms=[atom])


def test_boundary_atoms_allowed():
    m = SignedMeasure(atoms=[(0.0, 1.0), (1.0, 2.0)])
    assert rs_integral(lambda t: t + 1, m) == 1.0 + 4.0


def test_density_expression_with_breakpoint():
    m = SignedMeasure(density="abs(s - 0.3)", density_breakpoints=[0.3])
    # int_0^1 |s - 0.3| ds = 0.045 + 0.245
    assert rs_integral(lambda t: np.ones_like(t), m) == pytest.approx(0.29, abs=1e-14)
    assert m.to_dict()["density"] == "abs(s - 0.3)"


def test_atom_only_is_exact_for_any_continuous_phi():
    m = SignedMeasure(atoms=[(0.1, 0.7), (0.9, -0.2)])
    assert rs_integral(np.cos, m) == 0.7 * np.cos(0.1) - 0.2 * np.cos(0.9)


_measures = st.builds(
    lambda locs, ws, dens: SignedMeasure(
        atoms=list(zip(sorted(set(locs)), ws)), density=dens),
    st.lists(st.floats(0, 1), max_size=4),
    st.lists(st.floats(-3, 3).filter(lambda w: abs(w) > 1e-3), min_size=4, max_size=4),
    st.sampled_from([None, "1", "2*s - 1", "exp(-s)"]),
)


@settings(max_examples=60, deadline=None)
@given(A=_measures, seed=st.integers(0, 2**31))
def test_linearity_and_variation_bound(A, seed):
    rng = np.random.default_rng(seed)
    p = np.polynomial.Polynomial(rng.normal(size=5))
    q = np.polynomial.Polynomial(rng.normal(size=5))
    a, b = rng.normal(size=2)
    lhs = rs_integral(lambda x: a * p(x) + b * q(x), A)
    rhs = a * rs_integral(p, A) + b * rs_integral(q, A)
    assert abs(lhs - rhs) <= 1e-10 * (1 + abs(lhs))
    grid = np.linspace(0, 1, 4001)
    assert abs(rs_integral(p, A)) <= np.max(np.abs(p(grid))) * total_variation(A) + 1e-10


@settings(max_examples=30, deadline=None)
@given(A=_measures)
def test_mass(A):
    dens = 0.0
    if A.density_source == "1":
        dens = 1.0
    elif A.density_source == "2*s - 1":
        dens = 0.0
    elif A.density_source == "exp(-s)":
        dens = 1 - np.exp(-1)
    assert mass(A) == pytest.approx(float(np.sum(A.weights)) + dens, abs=1e-13)
