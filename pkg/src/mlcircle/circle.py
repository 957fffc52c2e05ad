"""Circle arithmetic, the three map families and periodic function representations."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

TWO_PI = 2.0 * np.pi
CIRCLE_TOL = 1e-12


def reduce(z):
    """Fractional part z - floor(z), vectorized."""
    z = np.asarray(z, dtype=float)
    r = z - np.floor(z)
    # z slightly below an integer can round to exactly 1.0
    r = np.where(r >= 1.0, 0.0, r)
    return r if r.ndim else float(r)


def circle_dist(a, b):
    d = np.abs(reduce(np.asarray(a, dtype=float) - np.asarray(b, dtype=float)))
    d = np.minimum(d, 1.0 - d)
    return d if np.ndim(d) else float(d)


def circle_eq(a, b, tol: float = CIRCLE_TOL) -> bool:
    return bool(np.all(circle_dist(a, b) <= tol))


# ---------------------------------------------------------------------------
# periodic functions


class TrigPoly:
    """Real-valued trigonometric polynomial z -> sum_n c_n exp(2 pi i n z)."""

    def __init__(self, coeffs: dict[int, complex] | None = None, *, check: bool = True):
        coeffs = dict(coeffs or {})
        nmax = max((abs(int(n)) for n in coeffs), default=0)
        c = np.zeros(2 * nmax + 1, dtype=complex)
        for n, v in coeffs.items():
            c[int(n) + nmax] += complex(v)
        if check and not np.allclose(c, np.conj(c[::-1]), atol=1e-13, rtol=0):
            raise ValueError("TrigPoly coefficients must satisfy c_{-n} = conj(c_n)")
        self.nmax = nmax
        self.c = c

    @classmethod
    def from_array(cls, c: np.ndarray) -> "TrigPoly":
        c = np.asarray(c, dtype=complex)
        if c.size % 2 != 1:
            raise ValueError("coefficient array must have odd length 2N+1")
        nmax = c.size // 2
        return cls({n - nmax: v for n, v in enumerate(c) if v != 0})

    @classmethod
    def constant(cls, value: float) -> "TrigPoly":
        return cls({0: value})

    @classmethod
    def cos_mode(cls, n: int, amp: float = 1.0) -> "TrigPoly":
        """amp * cos(2 pi n z)."""
        if n == 0:
            return cls({0: amp})
        return cls({n: amp / 2, -n: amp / 2})

    @classmethod
    def sin_mode(cls, n: int, amp: float = 1.0) -> "TrigPoly":
        """amp * sin(2 pi n z)."""
        if n == 0:
            return cls()
        return cls({n: amp / 2j, -n: -amp / 2j})

    @property
    def modes(self) -> np.ndarray:
        return np.arange(-self.nmax, self.nmax + 1)

    def coeff(self, n: int) -> complex:
        if abs(n) > self.nmax:
            return 0j
        return complex(self.c[n + self.nmax])

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        if self.nmax == 0:
            out = np.full(z.shape, self.c[0].real)
        else:
            ph = np.exp(TWO_PI * 1j * np.multiply.outer(z, self.modes))
            out = (ph @ self.c).real
        return out if out.ndim else float(out)

    def derivative(self, z=None, order: int = 1):
        d = self.differentiate(order)
        return d if z is None else d(z)

    def differentiate(self, order: int = 1) -> "TrigPoly":
        out = TrigPoly.__new__(TrigPoly)
        out.nmax = self.nmax
        out.c = self.c * (TWO_PI * 1j * self.modes) ** order
        return out

    def mean(self) -> float:
        return float(self.c[self.nmax].real) if self.nmax or self.c.size else 0.0

    def antiderivative(self, z):
        """Lift primitive F with F(0) = 0 and F' = self, evaluated at real z."""
        z = np.asarray(z, dtype=float)
        out = self.mean() * z
        if self.nmax:
            n = self.modes
            nz = n != 0
            cn = self.c[nz] / (TWO_PI * 1j * n[nz])
            ph = np.exp(TWO_PI * 1j * np.multiply.outer(z, n[nz])) - 1.0
            out = out + (ph @ cn).real
        return out if out.ndim else float(out)

    def periodic_primitive(self) -> "TrigPoly":
        """Primitive of self - mean, normalized to vanish at z = 0."""
        c = np.zeros_like(self.c)
        n = self.modes
        nz = n != 0
        c[nz] = self.c[nz] / (TWO_PI * 1j * n[nz])
        c[self.nmax] = -c[nz].sum().real
        out = TrigPoly.__new__(TrigPoly)
        out.nmax, out.c = self.nmax, c
        return out

    def max_abs(self, grid: int = 4096) -> float:
        if self.nmax == 0:
            return abs(self.c[0].real)
        return float(np.max(np.abs(self(np.arange(grid) / grid))))

    def coeff_l1(self) -> float:
        return float(np.sum(np.abs(self.c)))

    def __add__(self, other: "TrigPoly") -> "TrigPoly":
        n = max(self.nmax, other.nmax)
        c = np.zeros(2 * n + 1, dtype=complex)
        c[n - self.nmax:n + self.nmax + 1] += self.c
        c[n - other.nmax:n + other.nmax + 1] += other.c
        out = TrigPoly.__new__(TrigPoly)
        out.nmax, out.c = n, c
        return out

    def __neg__(self) -> "TrigPoly":
        return self * -1.0

    def __sub__(self, other: "TrigPoly") -> "TrigPoly":
        return self + (-other)

    def __mul__(self, s: float) -> "TrigPoly":
        out = TrigPoly.__new__(TrigPoly)
        out.nmax, out.c = self.nmax, self.c * float(s)
        return out

    __rmul__ = __mul__

    def is_zero(self) -> bool:
        return not np.any(self.c)

    def to_json(self) -> list:
        return [[int(n), float(v.real), float(v.imag)]
                for n, v in zip(self.modes, self.c) if v != 0]

    @classmethod
    def from_json(cls, triples: Sequence) -> "TrigPoly":
        return cls({int(n): complex(re, im) for n, re, im in triples})

    def __eq__(self, other) -> bool:
        if not isinstance(other, TrigPoly):
            return NotImplemented
        a, b = (self, other) if self.nmax >= other.nmax else (other, self)
        pad = a.nmax - b.nmax
        return np.array_equal(a.c[pad:a.c.size - pad], b.c) and not np.any(
            np.r_[a.c[:pad], a.c[a.c.size - pad:]])

    def __repr__(self) -> str:
        return f"TrigPoly({self.to_json()})"


_STENCIL = np.arange(5)
_DENOM = np.array([np.prod([m - l for l in range(5) if l != m]) for m in range(5)], float)


def _lagrange_weights(s: np.ndarray, deriv: bool = False) -> np.ndarray:
    """Weights of the degree-4 Lagrange basis on nodes 0..4 at local coordinates s."""
    d = s[:, None] - _STENCIL[None, :]
    w = np.empty((s.size, 5))
    for m in range(5):
        others = [l for l in range(5) if l != m]
        if not deriv:
            w[:, m] = np.prod(d[:, others], axis=1)
        else:
            acc = np.zeros(s.size)
            for skip in others:
                rest = [l for l in others if l != skip]
                acc += np.prod(d[:, rest], axis=1)
            w[:, m] = acc
    return w / _DENOM


@dataclass(frozen=True, eq=False)
class PiecewiseGrid:
    """Samples at z_j = j/M, interpolated piecewise between breakpoints.

    Each arc between consecutive breakpoints is interpolated with local
    degree-4 Lagrange polynomials on samples from that arc only. Samples sitting
    exactly on a breakpoint are shared by both neighbouring arcs, so the
    represented function is assumed continuous.
    """

    samples: np.ndarray
    breakpoints: tuple = ()

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        if s.ndim != 1 or s.size < 16:
            raise ValueError("PiecewiseGrid needs at least 16 samples")
        bps = sorted({round(float(reduce(b)), 15) for b in self.breakpoints})
        object.__setattr__(self, "samples", s)
        object.__setattr__(self, "breakpoints", tuple(bps))
        M = s.size
        arcs = []
        if bps:
            for i, b in enumerate(bps):
                e = bps[i + 1] if i + 1 < len(bps) else bps[0] + 1.0
                lo = math.ceil(b * M - 1e-9)
                hi = math.floor(e * M + 1e-9)
                if hi - lo < 4:
                    raise ValueError(f"arc [{b}, {e}) holds fewer than 5 samples")
                arcs.append((b, e, lo, hi))
        object.__setattr__(self, "_arcs", arcs)
        object.__setattr__(self, "_cum", None)

    @property
    def M(self) -> int:
        return self.samples.size

    @classmethod
    def from_function(cls, fn, M: int, breakpoints: Sequence[float] = ()) -> "PiecewiseGrid":
        return cls(np.asarray(fn(np.arange(M) / M), dtype=float), tuple(breakpoints))

    def _locate(self, z: np.ndarray, side: Optional[str]):
        """Return (start index, local coordinate s in [0, 4]) for each z in [0, 1)."""
        M = self.M
        t = z * M
        if not self._arcs:
            start = np.floor(t).astype(int) - 2
            return start, t - start
        starts = np.empty(z.size, dtype=int)
        for b, e, lo, hi in self._arcs:
            # membership on the unwrapped arc [b, e); side flags pick the arc at b
            for shift in (0.0, 1.0):
                tt = z + shift
                if side == "left":
                    inside = (tt > b) & (tt <= e)
                else:
                    inside = (tt >= b) & (tt < e)
                if not np.any(inside):
                    continue
                st = np.clip(np.floor(tt[inside] * M).astype(int) - 2, lo, hi - 4)
                starts[inside] = st
                t[inside] = tt[inside] * M
        return starts, t - starts

    def _interp(self, z, side: Optional[str], deriv: bool):
        z = np.atleast_1d(np.asarray(z, dtype=float))
        zr = reduce(z)
        zr = np.atleast_1d(zr)
        if deriv and side is None and self.breakpoints:
            bp = np.asarray(self.breakpoints)
            if np.any(circle_dist(zr[:, None], bp[None, :]) < 1e-13):
                raise ValueError("derivative requested exactly at a breakpoint; pass side='left' or 'right'")
        if side == "left":
            # left limit at z = 0 belongs to the arc ending at 1
            zr = np.where(zr == 0.0, 1.0, zr) if self.breakpoints else zr
        start, s = self._locate(zr.copy(), side)
        w = _lagrange_weights(s, deriv)
        idx = (start[:, None] + _STENCIL[None, :]) % self.M
        out = np.sum(w * self.samples[idx], axis=1)
        if deriv:
            out *= self.M
        return out

    def __call__(self, z, side: Optional[str] = None):
        out = self._interp(z, side, False)
        return out if np.ndim(z) else float(out[0])

    def derivative(self, z, side: Optional[str] = None):
        out = self._interp(z, side, True)
        return out if np.ndim(z) else float(out[0])

    def mean(self) -> float:
        return float(np.mean(self.samples))

    def _knots(self):
        if self._cum is None:
            M = self.M
            knots = np.union1d(np.arange(M + 1) / M, np.asarray(self.breakpoints, float))
            a, b = knots[:-1], knots[1:]
            x, wq = np.polynomial.legendre.leggauss(3)
            mid, half = (a + b) / 2, (b - a) / 2
            pts = mid[:, None] + half[:, None] * x[None, :]
            # Gauss points are interior to a knot interval: stencil choice is unambiguous
            vals = self._interp(pts.ravel(), None, False).reshape(pts.shape)
            seg = (vals * wq[None, :]).sum(axis=1) * half
            cum = np.r_[0.0, np.cumsum(seg)]
            object.__setattr__(self, "_cum", (knots, cum))
        return self._cum

    def integral(self) -> float:
        return float(self._knots()[1][-1])

    def antiderivative(self, z):
        """Lift primitive with value 0 at z = 0 (exact for the interpolant)."""
        knots, cum = self._knots()
        z = np.asarray(z, dtype=float)
        zf = np.floor(z)
        zr = np.atleast_1d(z - zf)
        k = np.clip(np.searchsorted(knots, zr, side="right") - 1, 0, knots.size - 2)
        a = knots[k]
        x, wq = np.polynomial.legendre.leggauss(3)
        half = (zr - a) / 2
        pts = (a + half)[:, None] + half[:, None] * x[None, :]
        vals = self._interp(pts.ravel(), None, False).reshape(pts.shape)
        part = cum[k] + (vals * wq[None, :]).sum(axis=1) * half
        out = np.atleast_1d(zf) * cum[-1] + part
        return out.reshape(z.shape) if z.ndim else float(out[0])

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.samples)))

    def to_json(self) -> dict:
        return {"M": self.M, "samples": self.samples.tolist(), "breakpoints": list(self.breakpoints)}

    @classmethod
    def from_json(cls, d: dict) -> "PiecewiseGrid":
        if len(d["samples"]) != d["M"]:
            raise ValueError("PiecewiseGrid JSON: len(samples) != M")
        return cls(np.asarray(d["samples"], float), tuple(d.get("breakpoints", ())))


PeriodicFunction = TrigPoly | PiecewiseGrid  # type: ignore[operator]


def periodic_to_json(g) -> dict:
    if isinstance(g, TrigPoly):
        return {"trig": g.to_json()}
    return {"grid": g.to_json()}


def periodic_from_json(d) -> "TrigPoly | PiecewiseGrid":
    if isinstance(d, list):
        return TrigPoly.from_json(d)
    if "trig" in d:
        return TrigPoly.from_json(d["trig"])
    if "grid" in d:
        return PiecewiseGrid.from_json(d["grid"])
    return PiecewiseGrid.from_json(d)


def fn_eval(g, z, side: Optional[str] = None):
    return g(z) if isinstance(g, TrigPoly) else g(z, side)


def fn_derivative(g, z, side: Optional[str] = None):
    if isinstance(g, TrigPoly):
        return g.derivative(z)
    return g.derivative(z, side)


def fn_antiderivative(g, z):
    return g.antiderivative(z)


def fn_mean(g) -> float:
    return g.mean()


# ---------------------------------------------------------------------------
# maps


@dataclass(frozen=True)
class MapSpec:
    """f(z) = 2z, z + alpha, or z + alpha + eps * p(z) (mod 1)."""

    kind: str
    alpha: float = 0.0
    eps: float = 0.0
    p: TrigPoly = field(default_factory=TrigPoly)

    def __post_init__(self):
        if self.kind not in ("doubling", "rotation", "perturbed"):
            raise ValueError(f"unknown map kind {self.kind!r}")
        if self.kind == "perturbed":
            zz = np.arange(4096) / 4096
            if np.min(1.0 + self.eps * self.p.derivative(zz)) <= 0:
                raise ValueError("perturbed rotation is not orientation preserving (f' <= 0 somewhere)")

    @classmethod
    def doubling(cls) -> "MapSpec":
        return cls("doubling")

    @classmethod
    def rotation(cls, alpha: float) -> "MapSpec":
        return cls("rotation", float(alpha))

    @classmethod
    def perturbed(cls, alpha: float, eps: float, p: TrigPoly) -> "MapSpec":
        return cls("perturbed", float(alpha), float(eps), p)

    @property
    def is_diffeo(self) -> bool:
        return self.kind != "doubling"

    def lift(self, z):
        z = np.asarray(z, dtype=float)
        if self.kind == "doubling":
            out = 2.0 * z
        elif self.kind == "rotation":
            out = z + self.alpha
        else:
            out = z + self.alpha + self.eps * np.asarray(self.p(z))
        return out if out.ndim else float(out)

    def __call__(self, z):
        return reduce(self.lift(z))

    def derivative(self, z):
        z = np.asarray(z, dtype=float)
        if self.kind == "doubling":
            out = np.full(z.shape, 2.0)
        elif self.kind == "rotation":
            out = np.ones(z.shape)
        else:
            out = 1.0 + self.eps * np.asarray(self.p.derivative(z))
        return out if out.ndim else float(out)

    def max_derivative(self) -> float:
        if self.kind == "perturbed":
            return float(np.max(self.derivative(np.arange(4096) / 4096)))
        return 2.0 if self.kind == "doubling" else 1.0

    def preimages(self, x) -> list:
        x = float(reduce(x))
        if self.kind == "doubling":
            return [x / 2, x / 2 + 0.5]
        if self.kind == "rotation":
            return [reduce(x - self.alpha)]
        return [float(reduce(self._invert_lift(np.array([x]))[0]))]

    def _invert_lift(self, x: np.ndarray, tol: float = 1e-14) -> np.ndarray:
        """Solve lift(y) = x by bisection on the monotone lift."""
        spread = abs(self.eps) * self.p.coeff_l1() + 1e-12
        lo = x - self.alpha - spread
        hi = x - self.alpha + spread
        if np.any(self.lift(lo) > x) or np.any(self.lift(hi) < x):
            raise ValueError("bisection bracket failed: lift is not monotone (invalid MapSpec)")
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            below = self.lift(mid) < x
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
            if np.max(hi - lo) <= tol:
                break
        return 0.5 * (lo + hi)

    def to_json(self) -> dict:
        if self.kind == "doubling":
            return {"kind": "doubling"}
        if self.kind == "rotation":
            return {"kind": "rotation", "alpha": self.alpha}
        return {"kind": "perturbed", "alpha": self.alpha, "eps": self.eps, "p": self.p.to_json()}

    @classmethod
    def from_json(cls, d: dict) -> "MapSpec":
        kind = d.get("kind") or d.get("type")
        if kind == "doubling":
            return cls.doubling()
        if kind == "rotation":
            return cls.rotation(d["alpha"])
        if kind == "perturbed":
            return cls.perturbed(d["alpha"], d["eps"], TrigPoly.from_json(d["p"]))
        raise ValueError(f"unknown map kind {kind!r}")


def eval_map(m: MapSpec, z):
    return m(z)


def map_derivative(m: MapSpec, z):
    return m.derivative(z)


def preimages(m: MapSpec, x) -> list:
    return m.preimages(x)


def branch_index(x) -> int:
    """pi(x): 1 if x lies in tau_1(S^1) = [0, 1/2), else 2 (x = 1/2 goes to branch 2)."""
    return 1 if reduce(x) < 0.5 else 2


def rotation_number(m: MapSpec, n_iter: int, z0: float = 0.0) -> float:
    """Birkhoff average (F^n(z0) - z0) / n of the lift."""
    if m.kind == "doubling":
        raise ValueError("rotation number is not defined for the doubling map "
                         "(not a homeomorphism-compatible query)")
    if n_iter < 1000:
        raise ValueError("n_iter must be at least 1000")
    # scalar loop with a cos/sin table of the perturbation: much faster than numpy per step
    p = m.p if m.kind == "perturbed" else TrigPoly()
    modes = [(int(n), complex(c)) for n, c in zip(p.modes, p.c) if n > 0 and c != 0]
    c0 = p.mean()
    alpha, eps = m.alpha, m.eps
    z = float(z0)
    for _ in range(n_iter):
        frac = z - math.floor(z)
        pz = c0
        for n, c in modes:
            ang = 2 * math.pi * n * frac
            pz += 2.0 * (c.real * math.cos(ang) - c.imag * math.sin(ang))
        z = z + alpha + eps * pz
    return (z - z0) / n_iter


# ---------------------------------------------------------------------------
# Diophantine classification


@dataclass(frozen=True)
class DiophantineParams:
    K: float
    beta: float = 0.0
    q_max: int = 10_000

    def __post_init__(self):
        if self.K <= 0 or self.q_max <= 0 or self.beta < 0:
            raise ValueError("need K > 0, q_max > 0, beta >= 0")


def continued_fraction(alpha: float, q_max: int) -> tuple[list[int], list[Fraction], bool]:
    """Partial quotients and convergents p/q of alpha with q <= q_max.

    Runs on the exact binary value of the float, so a terminating expansion
    within q_max means alpha is rational at that resolution.
    """
    x = Fraction(alpha)
    quotients: list[int] = []
    convergents: list[Fraction] = []
    p_prev, p = 0, 1
    q_prev, q = 1, 0
    terminated = False
    while True:
        a = math.floor(x)
        quotients.append(a)
        p_prev, p = p, a * p + p_prev
        q_prev, q = q, a * q + q_prev
        if q > q_max:
            quotients.pop()
            break
        convergents.append(Fraction(p, q))
        frac = x - a
        # float-resolution rational: remainder below a few ulps of alpha
        if frac == 0 or abs(float(Fraction(alpha) - convergents[-1])) <= 4 * math.ulp(max(abs(alpha), 1.0)):
            terminated = True
            break
        x = 1 / frac
    return quotients, convergents, terminated


def diophantine_check(alpha: float, params: DiophantineParams) -> dict:
    """Check |alpha - p/q| > K / q^(2+beta) for all q <= q_max via convergents and mediants."""
    K, beta, q_max = params.K, params.beta, params.q_max
    quotients, convs, terminated = continued_fraction(alpha, q_max)
    if terminated:
        r = convs[-1]
        return {"satisfied": False, "worst_q": r.denominator, "margin": -K}
    cands = set(convs)
    # intermediate fractions (p_{k-1} + j p_k) / (q_{k-1} + j q_k)
    for k in range(1, len(convs)):
        a, b = convs[k - 1], convs[k]
        for j in range(1, quotients[k + 1] if k + 1 < len(quotients) else 1):
            m = Fraction(a.numerator + j * b.numerator, a.denominator + j * b.denominator)
            if m.denominator <= q_max:
                cands.add(m)
    worst_q, worst = 0, math.inf
    xa = Fraction(alpha)
    for r in cands:
        q = r.denominator
        val = float(abs(xa - r)) * q ** (2 + beta)
        if val < worst or (val == worst and q < worst_q):
            worst, worst_q = val, q
    margin = worst - K
    return {"satisfied": margin > 0, "worst_q": worst_q, "margin": margin}
