"""Cohomological equation over circle rotations and invariance of the graph of u."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .circle import MapSpec, TrigPoly

MEAN_TOL = 1e-12
RESONANCE_TOL = 1e-13
RESIDUAL_GRID = 4096


class ObstructionError(ValueError):
    """tau has nonzero mean: constants are not coboundaries."""


class ResonanceError(ValueError):
    """A retained mode n has |exp(2 pi i n alpha) - 1| below the resonance threshold."""


@dataclass
class CoboundarySolution:
    alpha: float
    w: TrigPoly
    u: TrigPoly
    residual: float
    smallest_divisor: float

    def to_json(self) -> dict:
        return {"alpha": self.alpha, "w_coeffs": self.w.to_json(), "u_coeffs": self.u.to_json(),
                "residual": self.residual, "smallest_divisor": self.smallest_divisor}

    @classmethod
    def from_json(cls, d: dict) -> "CoboundarySolution":
        return cls(float(d["alpha"]), TrigPoly.from_json(d["w_coeffs"]), TrigPoly.from_json(d["u_coeffs"]),
                   float(d["residual"]), float(d["smallest_divisor"]))


def divisors(alpha: float, nmax: int) -> np.ndarray:
    """exp(2 pi i n alpha) - 1 for n = -nmax..nmax."""
    n = np.arange(-nmax, nmax + 1)
    return np.expm1(2j * np.pi * n * alpha)


def solve_rotation_coboundary(tau: TrigPoly, alpha: float) -> CoboundarySolution:
    """w with w(z + alpha) - w(z) = -tau(z), mean zero; u = w'."""
    mean = tau.mean()
    if abs(mean) > MEAN_TOL:
        raise ObstructionError(f"tau has mean {mean:.3e}; only mean-zero functions are coboundaries")
    N = tau.nmax
    c = np.zeros(2 * N + 1, complex)
    smallest = math.inf
    if N > 0:
        d = divisors(alpha, N)
        for j, n in enumerate(range(-N, N + 1)):
            if n == 0 or tau.c[j] == 0:
                continue
            if abs(d[j]) < RESONANCE_TOL:
                raise ResonanceError(f"mode n={n} is resonant: |exp(2 pi i n alpha) - 1| = {abs(d[j]):.3e}")
            smallest = min(smallest, abs(d[j]))
            c[j] = -tau.c[j] / d[j]
    w = TrigPoly.from_array(c)
    rot = MapSpec.rotation(alpha)
    res = verify_coboundary(w, tau, rot, RESIDUAL_GRID)
    return CoboundarySolution(float(alpha), w, w.differentiate(), res, float(smallest))


def verify_coboundary(w, tau: TrigPoly, f: MapSpec, M: int = RESIDUAL_GRID) -> float:
    """max over the M-grid of |w(f z) - w(z) + tau(z)|."""
    zz = np.arange(M) / M
    return float(np.max(np.abs(np.asarray(w(f(zz))) - np.asarray(w(zz)) + tau(zz))))


def graph_invariance_residual(u, f: MapSpec, tau: TrigPoly, M: int = RESIDUAL_GRID) -> float:
    """max over the grid of |u(f z) - (u(z) - tau'(z)) / f'(z)|."""
    zz = np.arange(M) / M
    fp = np.asarray(f.derivative(zz), float)
    if np.any(fp <= 0):
        raise ValueError("f' must be positive on the grid")
    dtau = tau.differentiate()
    return float(np.max(np.abs(np.asarray(u(f(zz))) - (np.asarray(u(zz)) - dtau(zz)) / fp)))


def divisor_bound_check(tau: TrigPoly, alpha: float, K: float, beta: float = 0.0) -> dict:
    """Check |w_n| <= |tau_n| n^(1+beta) / (4K) over retained modes."""
    sol = solve_rotation_coboundary(tau, alpha)
    worst = -math.inf
    for n in range(-tau.nmax, tau.nmax + 1):
        tn = tau.coeff(n)
        if n == 0 or tn == 0:
            continue
        bound = abs(tn) * abs(n) ** (1 + beta) / (4 * K)
        worst = max(worst, abs(sol.w.coeff(n)) - bound)
    return {"holds": bool(worst <= 0), "worst_excess": worst}
