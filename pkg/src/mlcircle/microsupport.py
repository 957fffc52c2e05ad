"""Phase-space correlation scans, decay-exponent fits and predicted supports."""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .circle import MapSpec, TrigPoly, circle_dist, reduce
from .quadrature import QuadPolicy, QuadratureError
from .states import EvolutionSpec, QuantumState, truncation_radius, wavepacket_norm

SLOPE_THRESHOLD = 2.0
FIT_POINTS = 4
ZERO_FLOOR = 1e-300
NOISE_FLOOR = 1e-12
MAX_FAILED_FRACTION = 0.01


@dataclass(frozen=True)
class ScanGrid:
    n_y: int = 64
    n_eta: int = 64
    eta_min: float = -4.0
    eta_max: float = 4.0

    def __post_init__(self):
        if self.n_y < 16 or self.n_eta < 16:
            raise ValueError("scan grid needs at least 16 nodes per axis")
        if not (math.isfinite(self.eta_min) and math.isfinite(self.eta_max) and self.eta_max > self.eta_min):
            raise ValueError("eta range must be finite and non-empty")

    @property
    def y(self) -> np.ndarray:
        return np.arange(self.n_y) / self.n_y

    @property
    def eta(self) -> np.ndarray:
        return np.linspace(self.eta_min, self.eta_max, self.n_eta)

    @property
    def dy(self) -> float:
        return 1.0 / self.n_y

    @property
    def deta(self) -> float:
        return (self.eta_max - self.eta_min) / (self.n_eta - 1)

    def to_json(self) -> dict:
        return {"n_y": self.n_y, "n_eta": self.n_eta, "eta_min": self.eta_min, "eta_max": self.eta_max}


@dataclass(frozen=True)
class HbarLadder:
    hbar0: float = 0.01
    ratio: float = 0.5
    J: int = 6

    def __post_init__(self):
        if self.J < 4:
            raise ValueError("ladder needs J >= 4")
        if not 0 < self.ratio < 1:
            raise ValueError("ladder ratio must lie in (0, 1)")
        if not 0 < self.hbar0 <= 0.1:
            raise ValueError("hbar0 must lie in (0, 0.1]")

    @property
    def values(self) -> np.ndarray:
        return self.hbar0 * self.ratio ** np.arange(self.J + 1)

    def to_json(self) -> dict:
        return {"hbar0": self.hbar0, "ratio": self.ratio, "J": self.J}


def decay_slope(values: Sequence[float], ladder) -> float:
    """Least-squares slope of log(value) against log(hbar) over the smallest FIT_POINTS hbar."""
    hb = np.asarray(ladder.values if isinstance(ladder, HbarLadder) else ladder, float)
    v = np.asarray(values, float)
    if hb.size < FIT_POINTS or v.size != hb.size:
        raise ValueError(f"need at least {FIT_POINTS} ladder points with matching values")
    order = np.argsort(hb)[:FIT_POINTS]
    x = np.log(hb[order])
    yv = np.log(np.maximum(v[order], ZERO_FLOOR))
    return float(np.polyfit(x, yv, 1)[0])


@dataclass
class MicrosupportMap:
    grid: ScanGrid
    ladder: HbarLadder
    magnitudes: np.ndarray  # [hbar][y][eta], normalized
    slopes: np.ndarray  # [y][eta]; +inf where the fit window is below the noise floor
    support_mask: np.ndarray  # [y][eta]
    failed: np.ndarray  # [y][eta] bool
    slope_threshold: float = SLOPE_THRESHOLD

    @property
    def failed_fraction(self) -> float:
        return float(self.failed.mean())

    def components(self) -> list[list[tuple[int, int]]]:
        """Connected components of the support mask (4-neighbour, periodic in y)."""
        from scipy import ndimage

        lab, n = ndimage.label(self.support_mask)
        parent = list(range(n + 1))

        def find(i):
            while parent[i] != i:
                parent[i] = parent[parent[i]]
                i = parent[i]
            return i

        top, bot = lab[0], lab[-1]
        for a, b in zip(top, bot):
            if a and b:
                ra, rb = find(a), find(b)
                if ra != rb:
                    parent[max(ra, rb)] = min(ra, rb)
        comps: dict[int, list] = {}
        for i, j in zip(*np.nonzero(lab)):
            comps.setdefault(find(lab[i, j]), []).append((int(i), int(j)))
        return list(comps.values())

    def peaks(self) -> list[dict]:
        """Per support component, the cell of largest magnitude at the smallest hbar."""
        last = self.magnitudes[-1]
        out = []
        for comp in self.components():
            i, j = max(comp, key=lambda c: last[c])
            out.append({"y": float(self.grid.y[i]), "eta": float(self.grid.eta[j]), "iy": i, "ieta": j,
                        "magnitude": float(last[i, j]), "cells": len(comp)})
        out.sort(key=lambda p: -p["magnitude"])
        return out

    def argmax_cell(self, hbar_index: int = -1) -> tuple[int, int]:
        m = np.where(self.failed, -1.0, self.magnitudes[hbar_index])
        i, j = np.unravel_index(int(np.argmax(m)), m.shape)
        return int(i), int(j)

    def summary(self) -> dict:
        sl = np.where(np.isfinite(self.slopes), self.slopes, None)
        return {
            "grid": self.grid.to_json(),
            "ladder": self.ladder.to_json(),
            "hbar": self.ladder.values.tolist(),
            "slope_threshold": self.slope_threshold,
            "slopes": sl.tolist(),
            "mask": self.support_mask.astype(int).tolist(),
            "failed_cells": int(self.failed.sum()),
            "peaks": self.peaks(),
        }


def _sample_state(state: QuantumState, n: int) -> np.ndarray:
    return np.asarray(state(np.arange(n) / n), dtype=complex)


def _scan_slice(state: QuantumState, grid: ScanGrid, policy: QuadPolicy, threads: int) -> np.ndarray:
    """|<phi_{y,eta}, state>| / (|phi_{y,eta}| |state|) for all cells at one hbar.

    Equivalent to the trapezoid inner product on the policy's N nodes: the
    periodized bra is unrolled into nodes t_m = m / N around y, and Gaussian
    copies below exp(-R^2/4hbar) = 1e-18 are dropped.
    """
    hbar = state.hbar
    eta = grid.eta
    bound = state.momentum_bound() + float(np.max(np.abs(eta)))
    n = policy.nodes(hbar, bound)
    vals = _sample_state(state, n)
    norm_state = math.sqrt(np.vdot(vals, vals).real / n)
    out = np.zeros((grid.n_y, grid.n_eta))
    if norm_state == 0.0:
        return out
    norms_bra = np.array([wavepacket_norm(e, hbar) for e in eta])
    R = truncation_radius(hbar)
    w = int(math.ceil(R * n))

    def row(iy: int):
        y = grid.y[iy]
        m0 = int(round(y * n))
        m = np.arange(m0 - w, m0 + w + 1)
        t = m / n
        g = np.exp(-((t - y) ** 2) / (4 * hbar)) * vals[m % n]
        phase = np.exp(-1j * np.multiply.outer(eta, t) / hbar)
        out[iy] = np.abs(phase @ g) / n

    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            list(ex.map(row, range(grid.n_y)))
    else:
        for iy in range(grid.n_y):
            row(iy)
    return out / (norms_bra[None, :] * norm_state)


def default_threads() -> int:
    env = os.environ.get("MLC_THREADS")
    if env:
        return max(1, int(env))
    return 1


def correlation_scan(family: Callable[[float], QuantumState], grid: ScanGrid, ladder: HbarLadder,
                     policy: QuadPolicy = QuadPolicy(), *, threads: Optional[int] = None,
                     noise_floor: float = NOISE_FLOOR,
                     slope_threshold: float = SLOPE_THRESHOLD) -> MicrosupportMap:
    """Scan normalized coherent-state correlations of family(hbar) over grid x ladder.

    Magnitudes below noise_floor are indistinguishable from quadrature roundoff
    and are stored as 0. A cell that is 0 across the whole fit window has
    decayed below resolution and gets slope +inf.
    """
    threads = threads or default_threads()
    hb = ladder.values
    mags = np.zeros((hb.size, grid.n_y, grid.n_eta))
    failed = np.zeros((grid.n_y, grid.n_eta), dtype=bool)
    for k, h in enumerate(hb):
        try:
            mags[k] = _scan_slice(family(float(h)), grid, policy, threads)
        except QuadratureError:
            mags[k] = np.nan
            failed[:] = True
    mags = np.where(mags < noise_floor, 0.0, mags)
    order = np.argsort(hb)[:FIT_POINTS]
    x = np.log(hb[order])
    xc = x - x.mean()
    yv = np.log(np.maximum(mags[order], ZERO_FLOOR))  # [fit][y][eta]
    slopes = np.tensordot(xc, yv - yv.mean(axis=0), axes=(0, 0)) / np.sum(xc**2)
    below = np.all(mags[order] == 0.0, axis=0)
    slopes = np.where(below, np.inf, slopes)
    failed |= np.any(np.isnan(mags), axis=0)
    slopes = np.where(failed, np.nan, slopes)
    mask = (slopes < slope_threshold) & ~failed
    if failed.mean() > MAX_FAILED_FRACTION:
        raise QuadratureError(f"{failed.mean():.1%} of scan cells failed quadrature (limit 1%)")
    return MicrosupportMap(grid, ladder, mags, slopes, mask, failed, slope_threshold)


# ---------------------------------------------------------------------------
# predictions


@dataclass
class PredictedSupport:
    """Either explicit phase-space points or the graph of a function y -> eta.

    anchors restricts the graph-to-support direction of support_match to the
    graph points above those y (e.g. preimages of a localized source).
    """

    points: Optional[list] = None
    graph: Optional[Callable] = None
    anchors: Optional[list] = None

    def __post_init__(self):
        if (self.points is None) == (self.graph is None):
            raise ValueError("PredictedSupport is either Points or Graph")
        if self.points is not None and len(self.points) == 0:
            raise ValueError("Points prediction must be non-empty")

    @classmethod
    def Points(cls, pts) -> "PredictedSupport":
        return cls(points=[(float(reduce(y)), float(e)) for y, e in pts])

    @classmethod
    def Graph(cls, fn: Callable, anchors=None) -> "PredictedSupport":
        return cls(graph=fn, anchors=None if anchors is None else [float(reduce(a)) for a in anchors])

    @property
    def is_graph(self) -> bool:
        return self.graph is not None

    def sample_points(self, n: int = 4096) -> np.ndarray:
        if self.points is not None:
            return np.asarray(self.points, float)
        ys = np.asarray(self.anchors, float) if self.anchors is not None else np.arange(n) / n
        return np.column_stack([ys, np.asarray(self.graph(ys), float)])

    def to_json(self) -> dict:
        if self.points is not None:
            return {"points": [list(p) for p in self.points]}
        ys = np.arange(256) / 256
        return {"graph": {"y": ys.tolist(), "eta": np.asarray(self.graph(ys), float).tolist()},
                "anchors": self.anchors,
                "anchor_points": self.sample_points().tolist() if self.anchors is not None else None}


def _branch_G(A: Callable, lam: float, x: float, xi: float) -> list:
    ys = [x / 2, x / 2 + 0.5]
    return [(y, (xi - float(A(y))) / lam) for y in ys]


def predict_support(spec: EvolutionSpec, source: PredictedSupport, lam: float = 0.5) -> PredictedSupport:
    """Predicted micro-support of the evolved state.

    Doubling, point (x, xi): the inverse branches G_1, G_2 of F(z, s) = (2z, lam s + A(z)),
    with A = -tau'/2 under semiclassical coupling and A = 0 for a fixed nu.
    Graph u (any map): y -> u(f(y)) f'(y) + tau'(y).
    """
    f, dtau = spec.f, spec.tau.differentiate()
    c = 1.0 if spec.semiclassical else 0.0
    if source.points is not None:
        out = []
        for x, xi in source.points:
            if f.kind == "doubling":
                out += _branch_G(lambda y: -0.5 * c * dtau(y), lam, x, xi)
            else:
                for y in f.preimages(x):
                    out.append((y, xi * float(f.derivative(y)) + c * float(dtau(y))))
        return PredictedSupport.Points(out)
    u = source.graph

    def image(y):
        y = np.asarray(y, float)
        return np.asarray(u(f(y))) * f.derivative(y) + c * dtau(y)

    anchors = None
    if source.anchors is not None:
        anchors = [y for x in source.anchors for y in f.preimages(x)]
    return PredictedSupport.Graph(image, anchors)


def _cell_distance(grid: ScanGrid, cells_y, cells_eta, pts: np.ndarray) -> np.ndarray:
    """Distance in cell units between each cell and its nearest point (y wraps)."""
    dy = circle_dist(np.asarray(cells_y)[:, None], pts[None, :, 0]) / grid.dy
    de = (np.asarray(cells_eta)[:, None] - pts[None, :, 1]) / grid.deta
    return np.sqrt(dy**2 + de**2)


def support_match(smap: MicrosupportMap, predicted: PredictedSupport, grid: Optional[ScanGrid] = None,
                  tol_cells: float = 1.5) -> dict:
    """Two-sided distance (in grid cells) between the support mask and a prediction."""
    grid = grid or smap.grid
    if grid != smap.grid:
        raise ValueError("grid does not match the scanned map")
    iy, ie = np.nonzero(smap.support_mask)
    if iy.size == 0:
        raise ValueError("support mask is empty")
    cy, ce = grid.y[iy], grid.eta[ie]
    dense = predicted.sample_points() if not predicted.is_graph else PredictedSupport.Graph(
        predicted.graph).sample_points(8192)
    support_to_pred = float(np.max(np.min(_cell_distance(grid, cy, ce, dense), axis=1)))
    pred = predicted.sample_points()
    pred_to_support = float(np.max(np.min(_cell_distance(grid, cy, ce, pred), axis=0)))
    h = max(support_to_pred, pred_to_support)
    return {"hausdorff_cells": h, "support_to_predicted": support_to_pred,
            "predicted_to_support": pred_to_support, "hit": bool(h <= tol_cells),
            "support_cells": int(iy.size)}
