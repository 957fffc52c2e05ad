import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mlcircle.circle import MapSpec, TrigPoly
from mlcircle.cohomology import (CoboundarySolution, ObstructionError, ResonanceError, divisor_bound_check,
                                 graph_invariance_residual, solve_rotation_coboundary, verify_coboundary)

GOLDEN = (math.sqrt(5) - 1) / 2
coef = st.floats(-1, 1, allow_nan=False)


def mean_zero_polys(nmax=5):
    return st.lists(st.tuples(coef, coef), min_size=nmax, max_size=nmax).map(
        lambda ab: sum((TrigPoly.cos_mode(n + 1, a) + TrigPoly.sin_mode(n + 1, b)
                        for n, (a, b) in enumerate(ab)), TrigPoly()))


def test_golden_cosine():
    s = solve_rotation_coboundary(TrigPoly.cos_mode(1), GOLDEN)
    assert s.residual < 1e-14
    assert s.smallest_divisor == pytest.approx(abs(np.expm1(2j * np.pi * GOLDEN)))
    z = np.linspace(0, 1, 33)
    assert np.allclose(s.w(z + GOLDEN) - s.w(z), -np.cos(2 * np.pi * z), atol=1e-14)


def test_obstruction_and_resonance():
    with pytest.raises(ObstructionError):
        solve_rotation_coboundary(TrigPoly.constant(0.1), GOLDEN)
    with pytest.raises(ResonanceError):
        solve_rotation_coboundary(TrigPoly.cos_mode(2), 0.5)
    # resonance only matters for modes actually present
    solve_rotation_coboundary(TrigPoly.cos_mode(1), 0.5)


@given(mean_zero_polys(), st.floats(0.05, 0.95))
def test_solution_has_zero_mean_and_small_residual(tau, alpha):
    try:
        s = solve_rotation_coboundary(tau, alpha)
    except ResonanceError:
        return
    assert abs(s.w.mean()) < 1e-15
    assert s.residual <= 1e-10 * (1 + tau.coeff_l1() / s.smallest_divisor) if math.isfinite(s.smallest_divisor) \
        else s.residual == 0.0


@given(mean_zero_polys(3), mean_zero_polys(3), st.floats(-2, 2))
def test_linearity(t1, t2, c):
    a = solve_rotation_coboundary(t1, GOLDEN).w
    b = solve_rotation_coboundary(t2, GOLDEN).w
    ab = solve_rotation_coboundary(t1 + t2 * c, GOLDEN).w
    z = np.linspace(0, 1, 17)
    assert np.allclose(ab(z), a(z) + c * b(z), atol=1e-10)


@given(mean_zero_polys(6))
def test_divisor_bound_golden(tau):
    # golden mean is (K=0.2, beta=0)-Diophantine, so |w_n| <= |tau_n| n / (4K)
    assert divisor_bound_check(tau, GOLDEN, 0.2, 0.0)["holds"]


def test_graph_invariance():
    tau = TrigPoly.sin_mode(1, 1 / (2 * math.pi)) + TrigPoly.cos_mode(3, 0.2)
    s = solve_rotation_coboundary(tau, GOLDEN)
    assert graph_invariance_residual(s.u, MapSpec.rotation(GOLDEN), tau) < 1e-12
    assert graph_invariance_residual(s.u * 1.1, MapSpec.rotation(GOLDEN), tau) > 1e-3


def test_verify_detects_perturbation():
    tau = TrigPoly.cos_mode(1)
    s = solve_rotation_coboundary(tau, GOLDEN)
    rot = MapSpec.rotation(GOLDEN)
    assert verify_coboundary(s.w, tau, rot) < 1e-14
    assert verify_coboundary(s.w + TrigPoly.cos_mode(2, 1e-3), tau, rot) > 1e-4


def test_json_roundtrip():
    s = solve_rotation_coboundary(TrigPoly.cos_mode(1) + TrigPoly.sin_mode(2, 0.3), GOLDEN)
    t = CoboundarySolution.from_json(json.loads(json.dumps(s.to_json())))
    assert t.w == s.w and t.u == s.u and t.alpha == s.alpha
