"""Periodic Gaussian wavepackets, Lagrangian states and the evolution operator."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from .circle import MapSpec, PiecewiseGrid, TrigPoly, periodic_from_json, periodic_to_json, reduce

EPS_TRUNC = 1e-18
HBAR_MAX = 0.1


def truncation_radius(hbar: float, eps: float = EPS_TRUNC) -> float:
    """Distance beyond which a Gaussian copy exp(-d^2 / 4 hbar) is below eps."""
    return math.sqrt(4.0 * hbar * math.log(1.0 / eps))


def k_range(hbar: float) -> np.ndarray:
    """Shifts k needed for x, z in [0, 1): |z - k - x| >= |k| - 1 must exceed the radius."""
    kmax = math.ceil(truncation_radius(hbar)) + 1
    return np.arange(-kmax, kmax + 1)


def check_hbar(hbar: float) -> float:
    hbar = float(hbar)
    if not 0.0 < hbar <= HBAR_MAX:
        raise ValueError(f"hbar must lie in (0, {HBAR_MAX}], got {hbar}")
    return hbar


class PhaseFunction:
    """A lift S: R -> R with derivative; usually S(z) = rho z + P(z), P periodic."""

    def __init__(self, value: Callable, derivative: Callable, *, drift: Optional[float] = None,
                 periodic=None, descriptor: Optional[dict] = None):
        self._value = value
        self._derivative = derivative
        self.drift = drift
        self.periodic = periodic
        self.descriptor = descriptor or {"kind": "callable"}

    @classmethod
    def linear(cls, xi: float) -> "PhaseFunction":
        xi = float(xi)
        return cls(lambda z: xi * np.asarray(z, float), lambda z: np.full(np.shape(z), xi),
                   drift=xi, periodic=TrigPoly(), descriptor={"kind": "linear", "xi": xi})

    @classmethod
    def from_periodic(cls, drift: float, periodic) -> "PhaseFunction":
        """S(z) = drift * z + P(z) with P a periodic function (TrigPoly or primitive of a grid)."""
        drift = float(drift)

        def value(z):
            z = np.asarray(z, float)
            return drift * z + np.asarray(periodic(reduce(z)))

        def derivative(z):
            return drift + np.asarray(periodic.derivative(reduce(np.asarray(z, float))))

        desc = {"kind": "drift+periodic", "drift": drift}
        if hasattr(periodic, "to_json"):
            desc["periodic"] = periodic.to_json()
        return cls(value, derivative, drift=drift, periodic=periodic, descriptor=desc)

    def __call__(self, z):
        return self._value(z)

    def derivative(self, z):
        return self._derivative(z)

    def shifted_values(self, z: np.ndarray, ks: np.ndarray) -> np.ndarray:
        """S(z - k) on the outer grid (len(z), len(ks))."""
        z = np.asarray(z, float)
        if self.periodic is not None and self.drift is not None:
            base = np.asarray(self.periodic(reduce(z))) if not (
                isinstance(self.periodic, TrigPoly) and self.periodic.is_zero()) else np.zeros(z.shape)
            return self.drift * np.subtract.outer(z, ks) + base[..., None]
        return np.asarray(self._value(np.subtract.outer(z, ks)))

    def max_abs_derivative(self, grid: int = 2048) -> float:
        zz = (np.arange(grid) + 0.5) / grid
        return float(np.max(np.abs(self.derivative(zz))))

    def to_json(self) -> dict:
        return self.descriptor


class PiecewisePrimitive:
    """P(z) = int_0^z (u - rho) for a PiecewiseGrid u, periodic when rho is the exact mean."""

    def __init__(self, u: PiecewiseGrid, rho: float):
        self.u = u
        self.rho = float(rho)

    def __call__(self, z):
        z = np.asarray(z, float)
        return self.u.antiderivative(z) - self.rho * z

    def derivative(self, z, side: Optional[str] = "right"):
        # breakpoints are evaluated by their right limit
        return np.asarray(self.u(z)) - self.rho

    def to_json(self) -> dict:
        return {"primitive_of": self.u.to_json(), "rho": self.rho}


# ---------------------------------------------------------------------------
# states


class QuantumState:
    """Evaluable complex function on [0, 1) carrying its hbar."""

    hbar: float
    kind = "state"

    def __call__(self, z) -> np.ndarray:
        raise NotImplementedError

    def momentum_bound(self) -> float:
        """Bound on |d phase / dz| in momentum units (phase / hbar scaled by hbar)."""
        return 0.0

    def envelope_scale(self) -> float:
        """Factor by which the Gaussian envelope is compressed (max |f'| along evolutions)."""
        return 1.0

    def to_json(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class WavepacketParams:
    x: float
    xi: float
    hbar: float

    def __post_init__(self):
        check_hbar(self.hbar)
        object.__setattr__(self, "x", float(reduce(self.x)))


@dataclass(frozen=True)
class LagrangianParams:
    S: PhaseFunction
    x: float
    hbar: float

    def __post_init__(self):
        check_hbar(self.hbar)
        object.__setattr__(self, "x", float(reduce(self.x)))


def _gauss_sum(z, x: float, hbar: float, phase_fn) -> np.ndarray:
    z = np.asarray(z, float)
    ks = k_range(hbar)
    t = np.subtract.outer(z, ks)  # z - k
    expo = -((t - x) ** 2) / (4.0 * hbar) + 1j * phase_fn(z, ks, t) / hbar
    return np.exp(expo).sum(axis=-1)


def eval_wavepacket(p: WavepacketParams, z):
    out = _gauss_sum(z, p.x, p.hbar, lambda z, ks, t: p.xi * t)
    return out if np.ndim(z) else complex(out)


def eval_lagrangian(p: LagrangianParams, z):
    out = _gauss_sum(z, p.x, p.hbar, lambda z, ks, t: p.S.shifted_values(z, ks))
    return out if np.ndim(z) else complex(out)


def wavepacket_norm(xi: float, hbar: float) -> float:
    """L2 norm of the periodic wavepacket, in closed form.

    |phi|^2 = sqrt(2 pi hbar) * sum_k cos(xi k / hbar) exp(-k^2 / 8 hbar); independent of x.
    """
    kmax = math.ceil(math.sqrt(8.0 * hbar * math.log(1e20))) + 1
    k = np.arange(1, kmax + 1)
    s = 1.0 + 2.0 * np.sum(np.cos(xi * k / hbar) * np.exp(-k**2 / (8.0 * hbar)))
    return math.sqrt(math.sqrt(2.0 * math.pi * hbar) * s)


class Wavepacket(QuantumState):
    kind = "wavepacket"

    def __init__(self, x: float, xi: float, hbar: float):
        self.params = WavepacketParams(x, xi, hbar)
        self.hbar = self.params.hbar

    @property
    def x(self):
        return self.params.x

    @property
    def xi(self):
        return self.params.xi

    def __call__(self, z):
        return eval_wavepacket(self.params, z)

    def momentum_bound(self) -> float:
        return abs(self.params.xi)

    def norm(self) -> float:
        return wavepacket_norm(self.params.xi, self.hbar)

    def to_json(self) -> dict:
        return {"kind": "wavepacket", "x": self.x, "xi": self.xi, "hbar": self.hbar}


class LagrangianState(QuantumState):
    kind = "lagrangian"

    def __init__(self, S: PhaseFunction, x: float, hbar: float):
        self.params = LagrangianParams(S, x, hbar)
        self.hbar = self.params.hbar
        self._bound = None

    @property
    def S(self):
        return self.params.S

    @property
    def x(self):
        return self.params.x

    def __call__(self, z):
        return eval_lagrangian(self.params, z)

    def momentum_bound(self) -> float:
        if self._bound is None:
            self._bound = self.S.max_abs_derivative()
        return self._bound

    def to_json(self) -> dict:
        return {"kind": "lagrangian", "S": self.S.to_json(), "x": self.x, "hbar": self.hbar}


class FunctionState(QuantumState):
    """Wraps a plain vectorized callable, e.g. a trigonometric test function."""

    kind = "function"

    def __init__(self, fn: Callable, hbar: float, momentum_bound: float = 0.0, name: str = "function"):
        self.fn = fn
        self.hbar = check_hbar(hbar)
        self._bound = float(momentum_bound)
        self.name = name

    def __call__(self, z):
        return np.asarray(self.fn(np.asarray(z, float)), dtype=complex)

    def momentum_bound(self) -> float:
        return self._bound

    def to_json(self) -> dict:
        return {"kind": "function", "name": self.name, "hbar": self.hbar}


class ZeroState(FunctionState):
    def __init__(self, hbar: float):
        super().__init__(lambda z: np.zeros(np.shape(z)), hbar, 0.0, "zero")


# ---------------------------------------------------------------------------
# evolution

SEMICLASSICAL = "semiclassical"


@dataclass(frozen=True)
class EvolutionSpec:
    """F_nu phi(z) = phi(f(z)) exp(i nu tau(z)); coupling is a fixed nu or 'semiclassical' (nu = 1/hbar)."""

    f: MapSpec
    tau: TrigPoly
    coupling: Union[float, str] = SEMICLASSICAL

    def __post_init__(self):
        if isinstance(self.coupling, str) and self.coupling != SEMICLASSICAL:
            raise ValueError(f"coupling must be a number or {SEMICLASSICAL!r}")

    @property
    def semiclassical(self) -> bool:
        return self.coupling == SEMICLASSICAL

    def nu(self, hbar: float) -> float:
        return 1.0 / hbar if self.semiclassical else float(self.coupling)

    def to_json(self) -> dict:
        return {"map": self.f.to_json(), "tau": self.tau.to_json(),
                "coupling": self.coupling if self.semiclassical else float(self.coupling)}

    @classmethod
    def from_json(cls, d: dict) -> "EvolutionSpec":
        c = d.get("coupling", SEMICLASSICAL)
        return cls(MapSpec.from_json(d["map"]), TrigPoly.from_json(d.get("tau", [])),
                   c if c == SEMICLASSICAL else float(c))


class EvolvedState(QuantumState):
    kind = "evolved"

    def __init__(self, parent: QuantumState, spec: EvolutionSpec):
        self.parent = parent
        self.spec = spec
        self.hbar = parent.hbar
        self.nu = spec.nu(self.hbar)
        self._dtau = spec.tau.differentiate()

    def __call__(self, z):
        z = np.asarray(z, float)
        out = self.parent(self.spec.f(z))
        if not self.spec.tau.is_zero():
            out = out * np.exp(1j * self.nu * self.spec.tau(z))
        return out

    def momentum_bound(self) -> float:
        return (self.parent.momentum_bound() * self.spec.f.max_derivative()
                + self.hbar * abs(self.nu) * self._dtau.max_abs())

    def envelope_scale(self) -> float:
        return self.parent.envelope_scale() * self.spec.f.max_derivative()

    def to_json(self) -> dict:
        d = self.spec.to_json()
        return {"kind": "evolved", "parent": self.parent.to_json(), "map": d["map"],
                "tau": d["tau"], "coupling": d["coupling"]}


def evolve(state: QuantumState, spec: EvolutionSpec) -> EvolvedState:
    return EvolvedState(state, spec)


def state_from_json(d: dict) -> QuantumState:
    kind = d["kind"]
    if kind == "wavepacket":
        return Wavepacket(d["x"], d["xi"], d["hbar"])
    if kind == "lagrangian":
        return LagrangianState(phase_from_json(d["S"]), d["x"], d["hbar"])
    if kind == "function" and d.get("name") == "zero":
        return ZeroState(d["hbar"])
    if kind == "evolved":
        spec = EvolutionSpec.from_json(d)
        return EvolvedState(state_from_json(d["parent"]), spec)
    raise ValueError(f"cannot rebuild state of kind {kind!r}")


def phase_from_json(d: dict) -> PhaseFunction:
    kind = d.get("kind")
    if kind == "linear":
        return PhaseFunction.linear(d["xi"])
    if kind == "drift+periodic":
        per = d["periodic"]
        if isinstance(per, dict) and "primitive_of" in per:
            periodic = PiecewisePrimitive(PiecewiseGrid.from_json(per["primitive_of"]), per["rho"])
        else:
            periodic = periodic_from_json(per)
        return PhaseFunction.from_periodic(d["drift"], periodic)
    raise ValueError(f"phase descriptor {kind!r} is not serializable")


__all__ = [
    "PhaseFunction", "PiecewisePrimitive", "QuantumState", "Wavepacket", "LagrangianState",
    "FunctionState", "ZeroState", "EvolutionSpec", "EvolvedState", "WavepacketParams",
    "LagrangianParams", "eval_wavepacket", "eval_lagrangian", "evolve", "wavepacket_norm",
    "state_from_json", "phase_from_json", "k_range", "truncation_radius", "SEMICLASSICAL",
    "periodic_to_json",
]
