"""Skew product F(z, s) = (2z, lam s + A(z)): subactions, Tsujii series, twist."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .circle import MapSpec, PiecewiseGrid, TrigPoly, branch_index, reduce


@dataclass(frozen=True)
class SkewSpec:
    f: MapSpec
    lam: float
    A: Callable  # TrigPoly or PiecewiseGrid

    def __post_init__(self):
        if not 0.0 < self.lam <= 1.0:
            raise ValueError("lambda must lie in (0, 1]")

    @classmethod
    def from_tau(cls, tau: TrigPoly, lam: float = 0.5) -> "SkewSpec":
        """A = -tau'/2 on the doubling map."""
        return cls(MapSpec.doubling(), lam, tau.differentiate() * -0.5)

    def sup_A(self) -> float:
        return float(self.A.max_abs())

    def _require_doubling(self):
        if self.f.kind != "doubling":
            raise ValueError("this operation is defined for the doubling map only")


def _inverse_branch(i: int, x):
    """tau_i(x) for the doubling map, on the lift (x need not lie in [0, 1))."""
    return np.asarray(x, float) / 2 + (0.5 if i == 2 else 0.0)


def skew_forward(spec: SkewSpec, z, s):
    return spec.f(z), spec.lam * np.asarray(s, float) + np.asarray(spec.A(z))


def skew_inverse_branches(spec: SkewSpec, y: float, r: float):
    """G_1(y, r) = (y/2, (r - A(y/2))/lam) and G_2 with y/2 + 1/2."""
    spec._require_doubling()
    y = float(reduce(y))
    out = []
    for i in (1, 2):
        z = float(_inverse_branch(i, y))
        out.append((z, (r - float(spec.A(z))) / spec.lam))
    return tuple(out)


# ---------------------------------------------------------------------------
# Symbol sequences and the Tsujii series


@dataclass(frozen=True)
class SymbolSequence:
    digits: tuple

    def __post_init__(self):
        d = tuple(int(v) for v in self.digits)
        if not d or any(v not in (1, 2) for v in d):
            raise ValueError("symbol sequence must be a non-empty word over {1, 2}")
        object.__setattr__(self, "digits", d)

    @property
    def K(self) -> int:
        return len(self.digits)

    def prepend(self, i: int) -> "SymbolSequence":
        """pi(x) a, truncated to the same depth."""
        return SymbolSequence((i,) + self.digits[:-1])

    def __lt__(self, other: "SymbolSequence") -> bool:
        return self.digits < other.digits

    @classmethod
    def constant(cls, i: int, K: int) -> "SymbolSequence":
        return cls((i,) * K)

    @classmethod
    def random(cls, rng: np.random.Generator, K: int) -> "SymbolSequence":
        return cls(tuple(rng.integers(1, 3, size=K)))


def tsujii_series(spec: SkewSpec, x, a: SymbolSequence, *, with_tail: bool = False):
    """s(x, a) = sum_{k<K} lam^k A(tau_{a_k} o ... o tau_{a_0}(x)), vectorized over x.

    x is treated on the lift: s(., a) is smooth but not periodic in x.
    """
    spec._require_doubling()
    y = np.asarray(x, float)
    total = np.zeros(y.shape)
    w = 1.0
    for d in a.digits:
        y = _inverse_branch(d, y)
        total = total + w * np.asarray(spec.A(y))
        w *= spec.lam
    total = total if total.ndim else float(total)
    if with_tail:
        return total, tail_bound(spec, a.K)
    return total


def tail_bound(spec: SkewSpec, K: int) -> float:
    lam = spec.lam
    if lam >= 1.0:
        return math.inf
    return lam**K * spec.sup_A() / (1.0 - lam)


MAX_TREE_DEPTH = 26


def sup_over_sequences(spec: SkewSpec, x: float, K: int, mode: str = "tree", M: int = 2048):
    """max over prefixes a in {1,2}^K of s(x, a).

    mode='tree' runs the exact depth-K dynamic program over the preimage tree;
    mode='grid' iterates a memoized value function on an M-grid (K Bellman steps).
    """
    spec._require_doubling()
    if mode == "tree":
        if K > MAX_TREE_DEPTH:
            raise ValueError(f"exact tree mode supports K <= {MAX_TREE_DEPTH}")
        # level k holds the 2^(k+1) points tau_{a_k} o ... o tau_{a_0}(x)
        levels = [np.array([float(x) / 2, float(x) / 2 + 0.5])]
        for _ in range(K - 1):
            p = levels[-1]
            levels.append(np.concatenate([p / 2, p / 2 + 0.5]))
        V = np.asarray(spec.A(levels[-1]), float)
        for k in range(K - 2, -1, -1):
            n = levels[k].size
            V = np.asarray(spec.A(levels[k]), float) + spec.lam * np.maximum(V[:n], V[n:])
        return float(np.max(V))
    if mode == "grid":
        b = np.zeros(M)
        zz = np.arange(M) / M
        for _ in range(K - 1):
            b = _bellman_step(spec, b, zz, None)[0]
        return _eval_grid_value(spec, b, float(x))
    raise ValueError(f"unknown mode {mode!r}")


def _eval_grid_value(spec: SkewSpec, b: np.ndarray, x: float) -> float:
    g = PiecewiseGrid(b)
    y = _inverse_branch(1, x), _inverse_branch(2, x)
    return float(max(spec.lam * g(reduce(yi)) + spec.A(yi) for yi in y))


def _bellman_step(spec: SkewSpec, b: np.ndarray, zz: np.ndarray, grid: Optional[PiecewiseGrid],
                  samples_only: bool = True):
    """(Tb)(z) = max_i lam b(tau_i z) + A(tau_i z) with b interpolated off-grid."""
    g = grid if grid is not None else PiecewiseGrid(b)
    y1, y2 = zz / 2, zz / 2 + 0.5
    v1 = spec.lam * g(y1) + np.asarray(spec.A(y1))
    v2 = spec.lam * g(y2) + np.asarray(spec.A(y2))
    branch = np.where(v2 > v1, 2, 1)
    return np.maximum(v1, v2), branch, v1, v2


# ---------------------------------------------------------------------------
# Value iteration


@dataclass
class SubactionSolution:
    b: PiecewiseGrid
    bellman_residual: float
    iterations: int
    maximizing_branch: np.ndarray
    converged: bool = True
    updates: list = field(default_factory=list)
    spec: Optional[SkewSpec] = None

    @property
    def contraction_ratios(self) -> np.ndarray:
        u = np.asarray(self.updates, float)
        with np.errstate(divide="ignore", invalid="ignore"):
            return u[1:] / u[:-1]

    def contraction_ratio(self, skip: int = 5) -> float:
        """Geometric mean of successive update ratios after the first `skip` iterations."""
        u = np.asarray(self.updates, float)
        u = u[skip:]
        u = u[u > 1e-13]  # ratios of roundoff-level updates are meaningless
        if u.size < 2:
            return float("nan")
        return float((u[-1] / u[0]) ** (1.0 / (u.size - 1)))

    def __call__(self, x, depth: int = 0):
        """b(x); depth > 0 unrolls that many exact Bellman steps before interpolating."""
        x = np.atleast_1d(np.asarray(x, float))
        vals = self._lookahead(reduce(x), depth)
        return vals if vals.size > 1 else float(vals[0])

    def _lookahead(self, x: np.ndarray, depth: int) -> np.ndarray:
        if depth == 0:
            return np.asarray(self.b(x))
        spec = self.spec
        y = np.concatenate([x / 2, x / 2 + 0.5])
        v = spec.lam * self._lookahead(y, depth - 1) + np.asarray(spec.A(y))
        n = x.size
        return np.maximum(v[:n], v[n:])

    def to_json(self) -> dict:
        return {"samples": self.b.samples.tolist(), "breakpoints": list(self.b.breakpoints),
                "residual": self.bellman_residual, "iterations": self.iterations,
                "branch": self.maximizing_branch.astype(int).tolist(), "converged": self.converged}

    def to_csv(self) -> str:
        lines = ["z,b,branch"]
        M = self.b.M
        for j in range(M):
            lines.append(f"{j / M:.17g},{self.b.samples[j]:.17g},{int(self.maximizing_branch[j])}")
        return "\n".join(lines) + "\n"


def solve_subaction(spec: SkewSpec, M: int = 2048, tol: float = 1e-10, max_iter: int = 200) -> SubactionSolution:
    """Value iteration b_{n+1} = T b_n from b_0 = 0 on the M-grid.

    Stops once the sup-norm update is <= tol. Branch switches of the iterate
    are located by bisection and declared breakpoints, so that preimage values
    near a kink are interpolated one-sidedly; iteration continues until the
    breakpoint set is stable and the update is again below tol.
    """
    spec._require_doubling()
    if spec.lam >= 1.0:
        raise ValueError("value iteration needs lambda < 1")
    if M < 64:
        raise ValueError("grid size M must be >= 64")
    zz = np.arange(M) / M
    b = np.zeros(M)
    updates = []
    converged = False
    bps: tuple = ()
    grid = PiecewiseGrid(b)
    it = 0
    while it < max_iter:
        it += 1
        nb, branch, _, _ = _bellman_step(spec, b, zz, grid)
        upd = float(np.max(np.abs(nb - b)))
        updates.append(upd)
        b = nb
        new_bps = _breakpoint_set(spec, b, branch, bps)
        grid = PiecewiseGrid(b, new_bps)
        if upd <= tol and new_bps == bps:
            converged = True
            break
        bps = new_bps
    _, branch, v1, v2 = _bellman_step(spec, b, zz, grid)
    residual = float(np.max(np.abs(np.maximum(v1, v2) - b)))
    return SubactionSolution(grid, residual, it, branch, converged, updates, spec)


KINK_IMAGES = 3


def _breakpoint_set(spec: SkewSpec, b: np.ndarray, branch: np.ndarray, current: tuple) -> tuple:
    """Breakpoints of b from branch switches, snapped to the grid when within 1e-9 of a node.

    A kink at p reappears at f(p) with slope jump scaled by lam/2, so the set is
    closed under KINK_IMAGES forward images.
    """
    M = b.size
    raw = _locate_breakpoints(spec, b, branch, PiecewiseGrid(b, current))
    level = list(raw)
    for _ in range(KINK_IMAGES):
        level = [float(reduce(2 * z)) for z in level]
        raw += level
    out = []
    for z in raw:
        j = round(z * M)
        out.append(float(reduce(j / M)) if abs(z * M - j) < 1e-9 * M else round(float(z), 12))
    out = tuple(sorted(set(out)))
    if not out or not _arcs_ok(out, M):
        return ()
    return out


def _arcs_ok(bps: Sequence[float], M: int) -> bool:
    s = sorted(bps)
    gaps = np.diff(np.r_[s, s[0] + 1.0])
    return bool(np.all(gaps * M >= 6))


def _locate_breakpoints(spec: SkewSpec, b: np.ndarray, branch: np.ndarray, g: Optional[PiecewiseGrid] = None) -> list:
    """Points where the maximizing preimage switches, refined by bisection of v1 - v2.

    Across z = 1 ~ 0 the labels swap (tau_2(1) = tau_1(0) on the circle), so
    there a switch means equal labels on both sides.
    """
    M = b.size
    g = g if g is not None else PiecewiseGrid(b)

    def gap(z):
        z = np.asarray(z, float)
        return (spec.lam * g(z / 2) + spec.A(z / 2)) - (spec.lam * g(reduce(z / 2 + 0.5)) + spec.A(z / 2 + 0.5))

    out = []
    nxt = np.roll(branch, -1).copy()
    nxt[-1] = 3 - branch[0]
    for j in np.nonzero(branch != nxt)[0]:
        lo, hi = j / M, (j + 1) / M
        if j == M - 1:
            # the gap changes sign through the label swap at z = 1; the kink sits at 0
            out.append(0.0)
            continue
        glo, ghi = gap(lo), gap(hi)
        if glo * ghi > 0:
            out.append(0.5 * (lo + hi))
            continue
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            gm = gap(mid)
            if (gm > 0) == (glo > 0):
                lo, glo = mid, gm
            else:
                hi = mid
        out.append(float(reduce(0.5 * (lo + hi))))
    return out


def bellman_gaps(spec: SkewSpec, b, zz: np.ndarray) -> np.ndarray:
    """Per z and preimage i: b(z) - (lam b(y_i) + A(y_i)), shape (len(zz), 2)."""
    bz = np.asarray(b(zz))
    cols = []
    for i in (1, 2):
        y = _inverse_branch(i, zz)
        cols.append(bz - (spec.lam * np.asarray(b(y)) + np.asarray(spec.A(y))))
    return np.column_stack(cols)


# ---------------------------------------------------------------------------
# involution kernel and twist


def involution_kernel(spec: SkewSpec, x, a: SymbolSequence, xbar: float):
    """W(x, a) = s(x, a) - s(xbar, a) at the same truncation depth."""
    return tsujii_series(spec, x, a) - tsujii_series(spec, xbar, a)


def twist_check(spec: SkewSpec, x_grid: Sequence[float], pairs: Sequence[tuple], K: int = 30,
                h_fd: float = 1e-5) -> dict:
    """Minimum over grid x pairs of d_x s(x, a) - d_x s(x, b) for a < b (central differences)."""
    spec._require_doubling()
    xs = np.asarray(x_grid, float)
    if np.any((xs <= 0) | (xs >= 1) | (np.abs(xs - 0.5) < 1e-15)):
        raise ValueError("x_grid must avoid the branch-boundary points 0 and 1/2")
    norm_pairs = []
    for a, b in pairs:
        a = a if isinstance(a, SymbolSequence) else SymbolSequence(tuple(a))
        b = b if isinstance(b, SymbolSequence) else SymbolSequence(tuple(b))
        if a.K != b.K:
            raise ValueError("pairs must have equal length")
        if not a < b:
            raise ValueError(f"pair {a.digits} !< {b.digits}: twist pairs need a < b lexicographically")
        if a.K < K:
            a = SymbolSequence(a.digits + (1,) * (K - a.K))
            b = SymbolSequence(b.digits + (1,) * (K - b.K))
        norm_pairs.append((a, b))
    ok = (xs - h_fd > 0) & (xs + h_fd < 1)
    skipped = xs[~ok].tolist()
    xv = xs[ok]
    best = math.inf
    witness = None
    for a, b in norm_pairs:
        da = (tsujii_series(spec, xv + h_fd, a) - tsujii_series(spec, xv - h_fd, a)) / (2 * h_fd)
        db = (tsujii_series(spec, xv + h_fd, b) - tsujii_series(spec, xv - h_fd, b)) / (2 * h_fd)
        diff = np.asarray(da - db)
        i = int(np.argmin(diff))
        if diff[i] < best:
            best = float(diff[i])
            witness = {"x": float(xv[i]), "a": list(a.digits[:8]), "b": list(b.digits[:8])}
    return {"holds": bool(best > 0), "min_margin": best, "witness": witness, "skipped": skipped}


# ---------------------------------------------------------------------------
# coboundary residuals


def coboundary_residual(u, tau: TrigPoly, f: MapSpec, lam: float = 0.5, M: int = 4096,
                        b: Optional[Callable] = None, A: Optional[Callable] = None) -> dict:
    """Residual of u(f z) = lam u(z) - tau'(z)/2 (doubling) or u(z) = u(f z) f'(z) + tau'(z).

    For the doubling map also reports Bellman gap statistics of b (default u)
    for A (default -tau'/2): per z the smaller gap over the two preimages.
    """
    zz = (np.arange(M) + 0.5) / M
    dtau = tau.differentiate()
    uz = np.asarray(u(zz))
    if f.kind == "doubling":
        res = np.abs(np.asarray(u(f(zz))) - lam * uz + 0.5 * dtau(zz))
        spec = SkewSpec(f, lam, A if A is not None else dtau * -0.5)
        gaps = bellman_gaps(spec, b if b is not None else u, zz)
        mingap = np.min(np.abs(gaps), axis=1)
        stats = {"max_min_gap": float(np.max(mingap)), "mean_min_gap": float(np.mean(mingap)),
                 "max_gap_nonmax_branch": float(np.max(np.max(np.abs(gaps), axis=1))),
                 "min_signed_gap": float(np.min(gaps))}
    else:
        res = np.abs(uz - np.asarray(u(f(zz))) * f.derivative(zz) - dtau(zz))
        stats = None
    return {"max_residual_se": float(np.max(res)), "bellman_gap_stats": stats}
