"""Quadrature for circle inner products and windowed oscillatory integrals."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from numpy.polynomial import hermite as H

N_CAP = 2**22


class QuadratureError(RuntimeError):
    """Node budget exceeded: hbar too small for the requested policy."""


@dataclass(frozen=True)
class QuadPolicy:
    n_min: int = 512
    points_per_wavelength: int = 8
    phase_scale_bound: Optional[float] = None  # None: derive from the integrand
    n_cap: int = N_CAP

    def __post_init__(self):
        if self.points_per_wavelength < 8:
            raise ValueError("points_per_wavelength must be >= 8")
        if self.n_min < 64:
            raise ValueError("n_min must be >= 64")

    def nodes(self, hbar: float, bound: Optional[float] = None) -> int:
        b = self.phase_scale_bound if self.phase_scale_bound is not None else (bound or 0.0)
        n = max(self.n_min, math.ceil(self.points_per_wavelength * b / (2 * math.pi * hbar)))
        if not math.isfinite(n) or n > self.n_cap:
            raise QuadratureError(f"hbar={hbar:g} too small for requested policy: "
                                  f"{n} nodes exceeds cap {self.n_cap}")
        return int(n)

    def to_json(self) -> dict:
        return {"n_min": self.n_min, "points_per_wavelength": self.points_per_wavelength,
                "phase_scale_bound": self.phase_scale_bound}


def pair_bound(psi, phi) -> float:
    """Union bound on the phase speed of conj(psi) * phi in momentum units."""
    return psi.momentum_bound() + phi.momentum_bound()


def inner_product(psi, phi, policy: QuadPolicy = QuadPolicy(), n: Optional[int] = None) -> complex:
    """<psi, phi> = int_0^1 conj(psi) phi dz by the composite trapezoid rule on uniform nodes."""
    if not math.isclose(psi.hbar, phi.hbar, rel_tol=1e-12):
        raise ValueError(f"hbar mismatch: {psi.hbar} vs {phi.hbar}")
    if n is None:
        n = policy.nodes(phi.hbar, pair_bound(psi, phi))
    z = np.arange(n) / n
    return complex(np.vdot(psi(z), phi(z)) / n)


def l2_norm(state, policy: QuadPolicy = QuadPolicy(), n: Optional[int] = None) -> float:
    if n is None:
        n = policy.nodes(state.hbar, 2 * state.momentum_bound())
    z = np.arange(n) / n
    v = state(z)
    return float(np.sqrt(np.vdot(v, v).real / n))


# ---------------------------------------------------------------------------
# windowed oscillatory integrals

_GL_ORDER = 16
_GL_X, _GL_W = np.polynomial.legendre.leggauss(_GL_ORDER)


def _gl_panels(fn: Callable, a: float, b: float, panels: int) -> tuple[complex, float]:
    edges = np.linspace(a, b, panels + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * (edges[1:] - edges[:-1])
    z = (mid[:, None] + half[:, None] * _GL_X[None, :]).ravel()
    w = (half[:, None] * _GL_W[None, :]).ravel()
    f = fn(z)
    return complex(np.sum(w * f)), float(np.sum(w * np.abs(f)))


def oscillatory_integral(y: float, a: float, phase: Callable, hbar: float,
                         policy: QuadPolicy = QuadPolicy(), rtol: float = 1e-9,
                         info: bool = False):
    """int_{y-a}^{y+a} exp(-(z-y)^2 / 4 hbar) exp(i phase(z) / hbar) dz.

    Composite Gauss-Legendre panels at the policy's node density, refined by
    doubling until successive values agree to rtol, or to the roundoff floor
    eps * int |integrand| when the integral itself is that small.
    """
    if not 0.0 < a < 0.5:
        raise ValueError("window half-width a must lie in (0, 1/2)")
    bound = policy.phase_scale_bound
    if bound is None:
        zz = np.linspace(y - a, y + a, 2049)
        ph = np.asarray(phase(zz), float)
        bound = float(np.max(np.abs(np.gradient(ph, zz)))) + 1.0
    n_nodes = max(policy.nodes(hbar, bound) * 2 * a, 4 * 2 * a / math.sqrt(hbar) * _GL_ORDER)
    panels = max(4, math.ceil(n_nodes / _GL_ORDER))

    def fn(z):
        return np.exp(-((z - y) ** 2) / (4 * hbar) + 1j * np.asarray(phase(z), float) / hbar)

    val, absint = _gl_panels(fn, y - a, y + a, panels)
    while True:
        if 2 * panels * _GL_ORDER > policy.n_cap:
            raise QuadratureError(f"oscillatory integral did not converge within {policy.n_cap} nodes")
        new, absint = _gl_panels(fn, y - a, y + a, 2 * panels)
        panels *= 2
        floor = 64 * np.finfo(float).eps * absint
        diff = abs(new - val)
        val = new
        if diff <= rtol * abs(new) or diff <= floor:
            break
    if info:
        return val, {"panels": panels, "nodes": panels * _GL_ORDER, "abs_integral": absint,
                     "roundoff_floor": 64 * np.finfo(float).eps * absint}
    return val


# ---------------------------------------------------------------------------
# L1 norms of Gaussian derivatives

MAX_GAUSS_DERIV = 8


def gaussian_derivative(n: int, t, hbar: float):
    """d^n/dz^n exp(-(z-y)^2 / 4 hbar) at z - y = t, via physicists' Hermite polynomials.

    With s = t / (2 sqrt(hbar)): G^(n)(t) = (-1)^n (2 sqrt hbar)^(-n) H_n(s) exp(-s^2).
    """
    t = np.asarray(t, float)
    c = 2.0 * math.sqrt(hbar)
    s = t / c
    coef = np.zeros(n + 1)
    coef[n] = 1.0
    return (-1) ** n * c ** (-n) * H.hermval(s, coef) * np.exp(-s * s)


def gaussian_derivative_l1(n: int, a: float, hbar: float) -> float:
    """int_{y-a}^{y+a} |d^n/dz^n exp(-(z-y)^2 / 4 hbar)| dz, exactly.

    The n-th derivative changes sign only at the Hermite roots, so on each
    sign-definite piece the integral is a difference of (n-1)-th derivatives.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if n > MAX_GAUSS_DERIV:
        raise ValueError(f"n={n} exceeds the Hermite table (n <= {MAX_GAUSS_DERIV})")
    if not 0.0 < a < 0.5:
        raise ValueError("a must lie in (0, 1/2)")
    coef = np.zeros(n + 1)
    coef[n] = 1.0
    roots = np.sort(H.hermroots(coef).real) * 2.0 * math.sqrt(hbar)
    pts = np.r_[-a, roots[(roots > -a) & (roots < a)], a]
    prim = gaussian_derivative(n - 1, pts, hbar)
    return float(np.sum(np.abs(np.diff(prim))))
