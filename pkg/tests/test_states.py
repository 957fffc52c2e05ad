import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mlcircle.circle import MapSpec, TrigPoly
from mlcircle.oracles import gaussian_sum_direct
from mlcircle.states import (SEMICLASSICAL, EvolutionSpec, LagrangianState, PhaseFunction, Wavepacket, ZeroState,
                             check_hbar, evolve, k_range, state_from_json, wavepacket_norm)

hbars = st.floats(1e-3, 0.05)
unit = st.floats(0, 1, exclude_max=True)


def test_check_hbar_bounds():
    with pytest.raises(ValueError):
        check_hbar(0.0)
    with pytest.raises(ValueError):
        check_hbar(0.2)
    assert check_hbar(0.1) == 0.1


def test_k_range_grows_with_hbar():
    assert len(k_range(0.1)) >= len(k_range(0.001))
    assert 0 in k_range(0.01)


@given(unit, st.floats(-3, 3), hbars, st.lists(unit, min_size=1, max_size=8))
def test_wavepacket_matches_direct_sum(x, xi, h, zs):
    z = np.array(zs)
    assert np.allclose(Wavepacket(x, xi, h)(z), gaussian_sum_direct(z, x, xi, h), atol=1e-12)


@given(unit, st.floats(-3, 3), hbars)
def test_wavepacket_periodic(x, xi, h):
    z = np.linspace(0, 1, 7)
    w = Wavepacket(x, xi, h)
    assert np.allclose(w(z), w(z + 1.0), atol=1e-9)


def test_wavepacket_center_value():
    assert abs(Wavepacket(0.5, 0.0, 0.01)(np.array([0.5]))[0]) >= 1.0


def test_wavepacket_equidistant_images():
    # z - x = 1/2: images k=0 and k=1 tie, so the modulus is 2|cos(xi/(2h))| e^{-1/16h}
    v = abs(Wavepacket(0.2, 1.0, 0.005)(np.array([0.7]))[0])
    assert v == pytest.approx(2 * abs(math.cos(100.0)) * math.exp(-12.5), rel=1e-9)


@given(st.floats(-3, 3), st.floats(2e-3, 0.05))
def test_wavepacket_norm_closed_form(xi, h):
    n = 8192
    z = np.arange(n) / n
    v = Wavepacket(0.3, xi, h)(z)
    assert math.sqrt(np.vdot(v, v).real / n) == pytest.approx(wavepacket_norm(xi, h), rel=1e-9)


def test_truncation_vs_wide_sum():
    # |k| <= 2 and |k| <= 50 agree on [0, 1) for x = 1/2, hbar <= 0.01
    z = np.linspace(0, 1, 2001, endpoint=False)
    for h in (0.01, 0.005, 0.001):
        assert np.max(np.abs(gaussian_sum_direct(z, 0.5, 0.0, h, kmax=2)
                             - gaussian_sum_direct(z, 0.5, 0.0, h, kmax=50))) <= 1e-12


def test_lagrangian_quadratic_phase():
    S = PhaseFunction(lambda z: 0.5 * np.asarray(z) ** 2, lambda z: np.asarray(z, float))
    v = LagrangianState(S, 0.5, 0.01)(np.array([0.5]))[0]
    ref = gaussian_sum_direct(0.5, 0.5, 0.0, 0.01, S=lambda t: 0.5 * t * t)[0]
    assert abs(v - ref) <= 1e-12


def test_lagrangian_linear_equals_wavepacket():
    z = np.linspace(0, 1, 50)
    lag = LagrangianState(PhaseFunction.linear(0.7), 0.4, 0.01)
    assert np.allclose(lag(z), Wavepacket(0.4, 0.7, 0.01)(z), atol=1e-13)


def test_lagrangian_drift_periodic_phase():
    S = PhaseFunction.from_periodic(0.5, TrigPoly.sin_mode(1, 0.1))
    z = np.linspace(0, 1, 9)
    st_ = LagrangianState(S, 0.3, 0.01)
    assert np.allclose(st_(z), st_(z + 1), atol=1e-9)


@given(st.floats(0, 1, exclude_max=True), st.floats(-2, 2))
def test_evolved_modulus_preserved(x, xi):
    w = Wavepacket(x, xi, 0.01)
    ev = evolve(w, EvolutionSpec(MapSpec.doubling(), TrigPoly.cos_mode(1), SEMICLASSICAL))
    z = (np.arange(128) + 0.5) / 128
    assert np.max(np.abs(np.abs(ev(z)) - np.abs(w(np.mod(2 * z, 1))))) <= 1e-14


def test_coupling_values():
    spec = EvolutionSpec(MapSpec.doubling(), TrigPoly.cos_mode(1), SEMICLASSICAL)
    assert spec.nu(0.01) == pytest.approx(100.0)
    assert EvolutionSpec(MapSpec.doubling(), TrigPoly(), 3.0).nu(0.01) == 3.0


def test_momentum_bound_evolved():
    w = Wavepacket(0.3, 1.0, 0.01)
    ev = evolve(w, EvolutionSpec(MapSpec.doubling(), TrigPoly.sin_mode(1, 1 / (2 * math.pi)), SEMICLASSICAL))
    assert ev.momentum_bound() == pytest.approx(2 * w.momentum_bound() + 1.0, rel=1e-6)


@pytest.mark.parametrize("state", [
    Wavepacket(0.3, 0.5, 0.01),
    LagrangianState(PhaseFunction.from_periodic(0.2, TrigPoly.cos_mode(1, 0.1)), 0.4, 0.01),
    evolve(Wavepacket(0.1, 0.0, 0.02), EvolutionSpec(MapSpec.rotation(0.3), TrigPoly.cos_mode(1), SEMICLASSICAL)),
    ZeroState(0.01),
])
def test_state_json_roundtrip(state):
    d = json.loads(json.dumps(state.to_json()))
    again = state_from_json(d)
    z = np.linspace(0, 1, 23)
    assert np.allclose(again(z), state(z), atol=1e-14)
    assert again.to_json() == d
