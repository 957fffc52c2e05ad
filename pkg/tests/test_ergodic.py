import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mlcircle.circle import MapSpec, PiecewiseGrid, TrigPoly
from mlcircle.ergodic import (SkewSpec, SymbolSequence, bellman_gaps, coboundary_residual, involution_kernel,
                              skew_forward, skew_inverse_branches, solve_subaction, sup_over_sequences,
                              tail_bound, tsujii_series, twist_check)

TAU = TrigPoly.sin_mode(1, 1 / (2 * math.pi))  # A = -cos(2 pi z)/2
SPEC = SkewSpec.from_tau(TAU)
unit = st.floats(0, 1, exclude_max=True)
words = st.lists(st.integers(1, 2), min_size=1, max_size=12).map(lambda d: SymbolSequence(tuple(d)))


@pytest.fixture(scope="module")
def sol():
    return solve_subaction(SPEC, M=1024)


def test_skewspec_validation():
    with pytest.raises(ValueError):
        SkewSpec(MapSpec.doubling(), 0.0, TAU)
    with pytest.raises(ValueError):
        skew_inverse_branches(SkewSpec(MapSpec.rotation(0.3), 0.5, TAU), 0.1, 0.0)


def test_from_tau_gives_minus_half_derivative():
    z = np.linspace(0, 1, 9)
    assert np.allclose(SPEC.A(z), -0.5 * np.cos(2 * np.pi * z), atol=1e-14)
    assert SPEC.sup_A() == pytest.approx(0.5)


@given(unit, st.floats(-5, 5))
def test_inverse_branches_invert_forward(y, r):
    for z, s in skew_inverse_branches(SPEC, y, r):
        fz, fs = skew_forward(SPEC, z, s)
        assert math.isclose(float(fz), y, abs_tol=1e-12) or abs(abs(float(fz) - y) - 1) < 1e-12
        assert float(fs) == pytest.approx(r, abs=1e-12)


def test_symbol_sequence_rules():
    with pytest.raises(ValueError):
        SymbolSequence((1, 3))
    with pytest.raises(ValueError):
        SymbolSequence(())
    a = SymbolSequence((1, 2, 2))
    assert a.prepend(2).digits == (2, 1, 2)
    assert SymbolSequence((1, 2)) < SymbolSequence((2, 1))
    rng = np.random.default_rng(1)
    assert SymbolSequence.random(rng, 50).K == 50


def test_series_constant_A_is_geometric():
    spec = SkewSpec(MapSpec.doubling(), 0.5, TrigPoly.constant(1.0))
    assert tsujii_series(spec, 0.3, SymbolSequence.constant(2, 20)) == pytest.approx(2 * (1 - 0.5**20))
    assert tail_bound(spec, 20) == pytest.approx(0.5**20 * 2)


@given(unit, words, st.integers(1, 2))
def test_series_cocycle(x, a, i):
    # s(x, a) = A(tau_{a_0} x) + lam s(tau_{a_0} x, a_1...) for the prefix; check on exact-depth words
    if a.K < 2:
        return
    y = x / 2 + (0.5 if a.digits[0] == 2 else 0.0)
    rest = SymbolSequence(a.digits[1:])
    lhs = tsujii_series(SPEC, x, a)
    rhs = float(SPEC.A(y)) + SPEC.lam * tsujii_series(SPEC, y, rest)
    assert lhs == pytest.approx(rhs, abs=1e-12)


def test_series_depth_converges():
    a30 = SymbolSequence.constant(1, 30)
    a40 = SymbolSequence.constant(1, 40)
    s30, tb = tsujii_series(SPEC, 0.25, a30, with_tail=True)
    assert abs(tsujii_series(SPEC, 0.25, a40) - s30) <= tb


@given(unit, unit, unit, words)
def test_involution_kernel_antisymmetric_and_additive(x, y, xbar, a):
    assert involution_kernel(SPEC, x, a, xbar) == pytest.approx(-involution_kernel(SPEC, xbar, a, x), abs=1e-12)
    assert involution_kernel(SPEC, x, a, y) == pytest.approx(
        involution_kernel(SPEC, x, a, xbar) + involution_kernel(SPEC, xbar, a, y), abs=1e-12)


def test_sup_tree_vs_grid():
    t = sup_over_sequences(SPEC, 0.3, 20, mode="tree")
    g = sup_over_sequences(SPEC, 0.3, 20, mode="grid", M=2048)
    assert t == pytest.approx(g, abs=1e-4)
    with pytest.raises(ValueError):
        sup_over_sequences(SPEC, 0.3, 40, mode="tree")


def test_sup_dominates_random_sequences():
    rng = np.random.default_rng(7)
    sup = sup_over_sequences(SPEC, 0.4, 16)
    for _ in range(50):
        assert tsujii_series(SPEC, 0.4, SymbolSequence.random(rng, 16)) <= sup + 1e-12


def test_subaction_converges(sol):
    assert sol.converged
    assert sol.bellman_residual <= 1e-8
    assert sol.contraction_ratio() == pytest.approx(0.5, abs=0.02)
    assert sol.b.breakpoints == (0.0, 0.5)


def test_subaction_vs_sup(sol):
    for x in (0.1, 0.25, 0.7):
        assert sol(x) == pytest.approx(sup_over_sequences(SPEC, x, 18), abs=1e-5)


def test_subaction_lookahead_consistent(sol):
    x = np.array([0.13, 0.61])
    assert np.allclose(sol(x, depth=3), sol(x), atol=1e-8)


def test_bellman_gaps_one_side_zero(sol):
    zz = (np.arange(256) + 0.5) / 256
    g = bellman_gaps(SPEC, sol, zz)
    assert np.all(g >= -1e-8)
    assert np.max(np.min(np.abs(g), axis=1)) <= 1e-8


def test_subaction_csv(sol):
    lines = sol.to_csv().splitlines()
    assert lines[0] == "z,b,branch"
    assert len(lines) == 1 + sol.b.M


def test_subaction_validation():
    with pytest.raises(ValueError):
        solve_subaction(SkewSpec(MapSpec.doubling(), 1.0, TAU))
    with pytest.raises(ValueError):
        solve_subaction(SPEC, M=32)
    with pytest.raises(ValueError):
        solve_subaction(SkewSpec(MapSpec.rotation(0.3), 0.5, TAU))


def test_subaction_constant_A():
    spec = SkewSpec(MapSpec.doubling(), 0.5, TrigPoly.constant(0.3))
    s = solve_subaction(spec, M=128)
    assert np.allclose(s.b.samples, 0.6, atol=1e-9)


def test_twist_holds_for_zero_A():
    spec = SkewSpec(MapSpec.doubling(), 0.5, TrigPoly.sin_mode(1, 1e-3))
    r = twist_check(spec, np.linspace(0.05, 0.95, 10), [((1,), (2,))], K=20)
    assert r["skipped"] == []
    assert isinstance(r["holds"], bool)


def test_twist_fails_for_cosine():
    r = twist_check(SPEC, np.linspace(0.01, 0.49, 25), [((1,), (2,)), ((1, 1), (1, 2))], K=30)
    assert not r["holds"]
    assert r["min_margin"] < 0 and r["witness"] is not None


def test_twist_validation():
    with pytest.raises(ValueError):
        twist_check(SPEC, [0.5], [((1,), (2,))])
    with pytest.raises(ValueError):
        twist_check(SPEC, [0.3], [((2,), (1,))])
    with pytest.raises(ValueError):
        twist_check(SPEC, [0.3], [((1,), (1, 2))])
    r = twist_check(SPEC, [1e-7, 0.3], [((1,), (2,))])
    assert r["skipped"] == [1e-7]


def test_coboundary_residual_rotation_exact():
    from mlcircle.cohomology import solve_rotation_coboundary
    s = solve_rotation_coboundary(TAU, 0.3819660112501051)
    r = coboundary_residual(s.u, TAU, MapSpec.rotation(0.3819660112501051))
    assert r["max_residual_se"] < 1e-12 and r["bellman_gap_stats"] is None


def test_coboundary_residual_subaction(sol):
    r = coboundary_residual(sol.b, TAU, MapSpec.doubling(), b=sol)
    assert r["bellman_gap_stats"]["max_min_gap"] <= 1e-8
    assert r["bellman_gap_stats"]["max_gap_nonmax_branch"] > 0.1
