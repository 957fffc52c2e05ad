import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mlcircle.circle import (DiophantineParams, MapSpec, PiecewiseGrid, TrigPoly, branch_index, circle_dist,
                             circle_eq, continued_fraction, diophantine_check, fn_antiderivative, fn_derivative,
                             fn_eval, fn_mean, periodic_from_json, periodic_to_json, reduce, rotation_number)

GOLDEN = (math.sqrt(5) - 1) / 2
reals = st.floats(-50, 50, allow_nan=False)
unit = st.floats(0, 1, exclude_max=True)


def trig_polys(nmax=4):
    coef = st.floats(-2, 2, allow_nan=False)
    return st.lists(st.tuples(coef, coef), min_size=nmax, max_size=nmax).flatmap(
        lambda ab: st.floats(-1, 1).map(
            lambda c0: sum((TrigPoly.cos_mode(n + 1, a) + TrigPoly.sin_mode(n + 1, b)
                            for n, (a, b) in enumerate(ab)), TrigPoly.constant(c0))))


@given(reals)
def test_reduce_lands_in_unit_interval(z):
    r = reduce(z)
    assert 0.0 <= r < 1.0
    assert circle_eq(r, z)


@given(reals, reals)
def test_circle_dist_symmetric_and_bounded(a, b):
    d = circle_dist(a, b)
    assert d == pytest.approx(circle_dist(b, a), abs=1e-12)
    assert 0 <= d <= 0.5 + 1e-12


def test_cos_mode_values():
    p = TrigPoly.cos_mode(1)
    assert p(0.0) == pytest.approx(1.0)
    assert p(0.25) == pytest.approx(0.0, abs=1e-15)
    assert p(0.5) == pytest.approx(-1.0)


def test_sin_mode_derivative():
    p = TrigPoly.sin_mode(1, 1 / (2 * math.pi))
    z = np.linspace(0, 1, 33)
    assert np.allclose(p.derivative(z), np.cos(2 * math.pi * z), atol=1e-14)


def test_conjugate_symmetry_enforced():
    with pytest.raises(ValueError):
        TrigPoly({1: 1.0, -1: 2.0})


@given(trig_polys())
def test_trigpoly_json_roundtrip(p):
    q = TrigPoly.from_json(json.loads(json.dumps(p.to_json())))
    assert q == p


@given(trig_polys(), trig_polys())
def test_trigpoly_linear(p, q):
    z = np.linspace(0, 1, 17)
    assert np.allclose((p + q)(z), p(z) + q(z), atol=1e-12)
    assert np.allclose((p - q)(z), p(z) - q(z), atol=1e-12)


@given(trig_polys())
def test_antiderivative_differentiates_back(p):
    z = np.linspace(-0.7, 1.3, 9)
    h = 1e-5
    fd = (p.antiderivative(z + h) - p.antiderivative(z - h)) / (2 * h)
    assert np.allclose(fd, p(z), atol=1e-6 * (1 + p.coeff_l1()))
    assert p.antiderivative(0.0) == 0.0


@given(trig_polys())
def test_periodic_primitive(p):
    P = p.periodic_primitive()
    assert P(0.0) == pytest.approx(0.0, abs=1e-12)
    z = np.linspace(0, 1, 13)
    assert np.allclose(P.derivative(z), p(z) - p.mean(), atol=1e-10)


def test_piecewise_onesided_derivatives():
    g = PiecewiseGrid.from_function(lambda z: np.abs(z - 0.5), 512, breakpoints=(0.5,))
    assert g.derivative(0.5, side="left") == pytest.approx(-1.0, abs=1e-6)
    assert g.derivative(0.5, side="right") == pytest.approx(1.0, abs=1e-6)
    with pytest.raises(ValueError):
        g.derivative(0.5)


def test_piecewise_smooth_accuracy():
    f = lambda z: np.sin(2 * np.pi * z) + 0.3 * np.cos(6 * np.pi * z)
    g = PiecewiseGrid.from_function(f, 256)
    z = np.random.default_rng(0).random(200)
    assert np.max(np.abs(g(z) - f(z))) < 1e-7
    assert g.integral() == pytest.approx(0.0, abs=1e-12)


def test_piecewise_requires_samples():
    with pytest.raises(ValueError):
        PiecewiseGrid(np.zeros(8))


def test_piecewise_json_roundtrip():
    g = PiecewiseGrid.from_function(lambda z: np.abs(z - 0.5), 64, breakpoints=(0.5,))
    h = periodic_from_json(json.loads(json.dumps(periodic_to_json(g))))
    assert np.array_equal(h.samples, g.samples) and h.breakpoints == g.breakpoints


def test_functional_api_matches_methods():
    p = TrigPoly.cos_mode(2, 0.5) + TrigPoly.constant(0.25)
    assert fn_eval(p, 0.1) == p(0.1)
    assert fn_derivative(p, 0.1) == pytest.approx(p.derivative(0.1))
    assert fn_mean(p) == pytest.approx(0.25)
    assert fn_antiderivative(p, 1.0) == pytest.approx(0.25)


def test_doubling_and_preimages():
    m = MapSpec.doubling()
    assert m(0.6) == pytest.approx(0.2)
    assert m.preimages(0.6) == pytest.approx([0.3, 0.8])
    assert m.max_derivative() == 2.0


@given(unit)
def test_perturbed_preimage_inverts(x):
    m = MapSpec.perturbed(GOLDEN, 0.1, TrigPoly.sin_mode(1))
    (y,) = m.preimages(x)
    assert circle_dist(m(y), x) < 1e-12


def test_perturbed_rejects_non_monotone():
    with pytest.raises(ValueError):
        MapSpec.perturbed(0.3, 0.5, TrigPoly.sin_mode(1))


def test_perturbed_derivative_matches_fd():
    m = MapSpec.perturbed(GOLDEN, 0.1, TrigPoly.sin_mode(1))
    h = 1e-6
    assert m.derivative(0.0) == pytest.approx((m.lift(h) - m.lift(-h)) / (2 * h), abs=1e-8)
    assert m.derivative(0.0) == pytest.approx(1 + 0.1 * 2 * math.pi)


@pytest.mark.parametrize("m", [MapSpec.doubling(), MapSpec.rotation(0.3),
                               MapSpec.perturbed(0.3, 0.05, TrigPoly.cos_mode(2))])
def test_mapspec_json_roundtrip(m):
    assert MapSpec.from_json(json.loads(json.dumps(m.to_json()))) == m


def test_branch_index():
    assert branch_index(0.2) == 1
    assert branch_index(0.5) == 2
    assert branch_index(0.99) == 2


def test_rotation_number_pure_rotation():
    assert rotation_number(MapSpec.rotation(0.3), 1000) == pytest.approx(0.3, abs=1e-12)
    with pytest.raises(ValueError):
        rotation_number(MapSpec.doubling(), 1000)
    with pytest.raises(ValueError):
        rotation_number(MapSpec.rotation(0.3), 10)


def test_continued_fraction_golden():
    qs, convs, term = continued_fraction(GOLDEN, 10**4)
    assert not term
    assert qs[0] == 0 and all(a == 1 for a in qs[1:])
    assert [c.denominator for c in convs][:6] == [1, 1, 2, 3, 5, 8]


def test_continued_fraction_rational_terminates():
    qs, convs, term = continued_fraction(1 / 3, 10**4)
    assert term and convs[-1] == Fraction(1, 3)


def test_diophantine_verdicts():
    ok = diophantine_check(GOLDEN, DiophantineParams(K=0.2))
    bad = diophantine_check(GOLDEN, DiophantineParams(K=0.5))
    assert ok["satisfied"] and not bad["satisfied"]
    # worst ratio is attained at q = 1 for the golden mean: |alpha - 1| = 1 - alpha
    assert ok["worst_q"] == 1
    assert ok["margin"] == pytest.approx(1 - GOLDEN - 0.2, abs=1e-12)
    rat = diophantine_check(1 / 3, DiophantineParams(K=0.1))
    assert not rat["satisfied"] and rat["margin"] == -0.1


@given(st.integers(1, 40), st.integers(1, 40))
def test_diophantine_rationals_fail(p, q):
    if p >= q:
        p, q = q, p + q
    r = diophantine_check(p / q, DiophantineParams(K=1e-3))
    assert not r["satisfied"]
