"""End-to-end experiments: build u and S, evolve, scan, compare with predicted supports."""
from __future__ import annotations

import datetime as _dt
import hashlib
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .circle import MapSpec, PiecewiseGrid, TrigPoly
from .cohomology import graph_invariance_residual, solve_rotation_coboundary
from .ergodic import SkewSpec, coboundary_residual, solve_subaction
from .microsupport import (HbarLadder, MicrosupportMap, PredictedSupport, ScanGrid, correlation_scan,
                           predict_support, support_match)
from .quadrature import QuadPolicy
from .states import (SEMICLASSICAL, EvolutionSpec, LagrangianState, PhaseFunction, PiecewisePrimitive,
                     Wavepacket, evolve)

SCENARIOS = ("Theorem1", "Theorem2", "SubsupDoubling", "DiffeoInvariance")
CERTIFY_RESIDUAL = 1e-6
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class ConvergenceError(RuntimeError):
    """A solver did not reach its tolerance."""


def build_S_from_u(u) -> PhaseFunction:
    """S = rho z + P with rho the mean of u and P' = u - rho, P(0) = 0.

    For a grid u the drift is the exact integral of its interpolant, so P is
    periodic; breakpoints are kept and S' is evaluated by right limits there.
    """
    if isinstance(u, TrigPoly):
        return PhaseFunction.from_periodic(u.mean(), u.periodic_primitive())
    if isinstance(u, PiecewiseGrid):
        rho = u.integral()
        return PhaseFunction.from_periodic(rho, PiecewisePrimitive(u, rho))
    raise TypeError(f"cannot build S from {type(u).__name__}")


# ---------------------------------------------------------------------------
# specs and reports


def default_grid(scenario: str) -> ScanGrid:
    # one cell ~ one support radius at hbar ~ 1e-4 in both directions
    if scenario == "DiffeoInvariance":
        return ScanGrid(n_y=16, n_eta=65, eta_min=-1.0, eta_max=1.0)
    return ScanGrid(n_y=16, n_eta=129, eta_min=-4.0, eta_max=4.0)


@dataclass
class ExperimentSpec:
    name: str
    scenario: str
    map: MapSpec = field(default_factory=MapSpec.doubling)
    tau: TrigPoly = field(default_factory=TrigPoly)
    lam: float = 0.5
    source: dict = field(default_factory=dict)  # {"x", "xi"} or {"xs": [...]}
    grid: Optional[ScanGrid] = None
    ladder: HbarLadder = field(default_factory=HbarLadder)
    policy: QuadPolicy = field(default_factory=QuadPolicy)
    nu: float = 1.0  # coupling for Theorem1; the other scenarios are semiclassical
    hit_cells: float = 1.5
    subaction_M: int = 2048
    subaction_tol: float = 1e-10
    subaction_max_iter: int = 200
    seed: int = 0

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.scenario!r}; expected one of {SCENARIOS}")
        if self.grid is None:
            self.grid = default_grid(self.scenario)
        if self.scenario == "Theorem1" and not self.tau.is_zero():
            raise ValueError("Theorem1 requires tau = 0")
        if self.scenario in ("Theorem1", "Theorem2", "SubsupDoubling") and self.map.kind != "doubling":
            raise ValueError(f"{self.scenario} runs on the doubling map")
        if self.scenario == "DiffeoInvariance" and self.map.kind != "rotation":
            raise ValueError("DiffeoInvariance needs a rotation (the only solvable diffeomorphism)")
        if self.scenario in ("Theorem1", "Theorem2"):
            if "x" not in self.source or "xi" not in self.source:
                raise ValueError(f"{self.scenario} needs a wavepacket source {{x, xi}}")
        elif not self.source.get("xs"):
            raise ValueError(f"{self.scenario} needs lagrangian source positions {{xs: [...]}}")

    @classmethod
    def theorem1(cls, **kw) -> "ExperimentSpec":
        kw.setdefault("source", {"x": 0.6, "xi": 1.0})
        return cls(name=kw.pop("name", "theorem1"), scenario="Theorem1", **kw)

    @classmethod
    def theorem2(cls, **kw) -> "ExperimentSpec":
        kw.setdefault("tau", TrigPoly.sin_mode(1, 1 / (2 * math.pi)))
        kw.setdefault("source", {"x": 0.0, "xi": 0.0})
        return cls(name=kw.pop("name", "theorem2"), scenario="Theorem2", **kw)

    @classmethod
    def subsup(cls, **kw) -> "ExperimentSpec":
        kw.setdefault("tau", TrigPoly.sin_mode(1, 1 / (2 * math.pi)))
        kw.setdefault("source", {"xs": [0.2, 0.5, 0.8]})
        return cls(name=kw.pop("name", "subsup"), scenario="SubsupDoubling", **kw)

    @classmethod
    def diffeo(cls, **kw) -> "ExperimentSpec":
        kw.setdefault("map", MapSpec.rotation(GOLDEN))
        kw.setdefault("tau", TrigPoly.sin_mode(1, 1 / (2 * math.pi)))
        kw.setdefault("source", {"xs": [0.5]})
        return cls(name=kw.pop("name", "diffeo"), scenario="DiffeoInvariance", **kw)

    def evolution(self) -> EvolutionSpec:
        coupling = self.nu if self.scenario == "Theorem1" else SEMICLASSICAL
        return EvolutionSpec(self.map, self.tau, coupling)

    def to_json(self) -> dict:
        return {"name": self.name, "scenario": self.scenario, "map": self.map.to_json(),
                "tau": self.tau.to_json(), "lam": self.lam, "source": self.source,
                "grid": self.grid.to_json(), "ladder": self.ladder.to_json(), "policy": self.policy.to_json(),
                "nu": self.nu, "hit_cells": self.hit_cells, "subaction_M": self.subaction_M,
                "subaction_tol": self.subaction_tol, "subaction_max_iter": self.subaction_max_iter,
                "seed": self.seed}

    @classmethod
    def from_json(cls, d: dict) -> "ExperimentSpec":
        d = dict(d)
        kw = {}
        if "map" in d:
            kw["map"] = MapSpec.from_json(d.pop("map"))
        if "tau" in d:
            kw["tau"] = TrigPoly.from_json(d.pop("tau"))
        if "grid" in d:
            kw["grid"] = ScanGrid(**d.pop("grid"))
        if "ladder" in d:
            kw["ladder"] = HbarLadder(**d.pop("ladder"))
        if "policy" in d:
            kw["policy"] = QuadPolicy(**d.pop("policy"))
        scenario = d.pop("scenario")
        builder = {"Theorem1": cls.theorem1, "Theorem2": cls.theorem2, "SubsupDoubling": cls.subsup,
                   "DiffeoInvariance": cls.diffeo}.get(scenario)
        if builder is None:
            raise ValueError(f"unknown scenario {scenario!r}")
        return builder(**d, **kw)

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.to_json(), sort_keys=True).encode()).hexdigest()


@dataclass
class SourceRun:
    source: dict
    map: MicrosupportMap
    predicted: PredictedSupport
    match: dict
    image_match: Optional[dict] = None  # against the pointwise image of Graph(u)

    def to_json(self) -> dict:
        out = {"source": self.source, "map": self.map.summary(), "predicted": self.predicted.to_json(),
               "match": self.match}
        if self.image_match is not None:
            out["image_match"] = self.image_match
        return out


@dataclass
class ExperimentReport:
    spec: ExperimentSpec
    runs: list
    residuals: dict
    timings: dict
    certified: bool = True

    @property
    def match(self) -> dict:
        """Aggregate match: hit iff every source run hits."""
        ms = [r.match for r in self.runs]
        return {"hit": all(m["hit"] for m in ms),
                "hausdorff_cells": max(m["hausdorff_cells"] for m in ms),
                "support_to_predicted": max(m["support_to_predicted"] for m in ms),
                "predicted_to_support": max(m["predicted_to_support"] for m in ms)}

    def to_json(self) -> dict:
        return {"spec": self.spec.to_json(), "spec_sha256": self.spec.digest(), "match": self.match,
                "runs": [r.to_json() for r in self.runs], "residuals": self.residuals,
                "timings": self.timings, "certified": self.certified}


# ---------------------------------------------------------------------------
# drivers


def _scan(spec: ExperimentSpec, make_state, threads):
    return correlation_scan(make_state, spec.grid, spec.ladder, spec.policy, threads=threads)


def run_experiment(spec: ExperimentSpec, threads: Optional[int] = None) -> ExperimentReport:
    t0 = time.perf_counter()
    timings = {}
    residuals: dict = {}
    runs = []
    ev = spec.evolution()
    tol = spec.hit_cells
    if spec.scenario in ("Theorem1", "Theorem2"):
        x, xi = float(spec.source["x"]), float(spec.source["xi"])
        smap = _scan(spec, lambda h: evolve(Wavepacket(x, xi, h), ev), threads)
        pred = predict_support(ev, PredictedSupport.Points([(x, xi)]), spec.lam)
        runs.append(SourceRun({"x": x, "xi": xi}, smap, pred, support_match(smap, pred, tol_cells=tol)))
        timings["scan_s"] = time.perf_counter() - t0
        certified = True
    else:
        t1 = time.perf_counter()
        if spec.scenario == "SubsupDoubling":
            skew = SkewSpec.from_tau(spec.tau, spec.lam)
            sol = solve_subaction(skew, spec.subaction_M, spec.subaction_tol, spec.subaction_max_iter)
            if not sol.converged:
                raise ConvergenceError(f"subaction value iteration stopped after {sol.iterations} iterations "
                                       f"above tol={spec.subaction_tol:g} (residual {sol.bellman_residual:.3e})")
            u = sol.b
            cr = coboundary_residual(u, spec.tau, spec.map, spec.lam, b=sol)
            residuals.update({"bellman_residual": sol.bellman_residual, "iterations": sol.iterations,
                              "contraction_ratio": sol.contraction_ratio(), "breakpoints": list(u.breakpoints),
                              "coboundary_residual_everywhere": cr["max_residual_se"],
                              "bellman_gap_stats": cr["bellman_gap_stats"]})
            certificate = sol.bellman_residual
        else:
            sol = solve_rotation_coboundary(spec.tau, spec.map.alpha)
            u = sol.u
            residuals.update({"coboundary_residual": sol.residual, "smallest_divisor": sol.smallest_divisor,
                              "graph_invariance_residual": graph_invariance_residual(u, spec.map, spec.tau),
                              "coboundary_residual_u": coboundary_residual(u, spec.tau, spec.map)["max_residual_se"]})
            certificate = max(residuals["coboundary_residual"], residuals["graph_invariance_residual"])
        certified = bool(certificate <= CERTIFY_RESIDUAL)
        timings["solve_s"] = time.perf_counter() - t1
        S = build_S_from_u(u)
        image_max = []
        for x in spec.source["xs"]:
            x = float(x)
            smap = _scan(spec, lambda h, x=x: evolve(LagrangianState(S, x, h), ev), threads)
            anchors = [float(y) for y in spec.map.preimages(x)]
            pred = PredictedSupport.Graph(u, anchors=anchors)
            image = predict_support(ev, PredictedSupport.Graph(u, anchors=[x]), spec.lam)
            runs.append(SourceRun({"x": x}, smap, pred, support_match(smap, pred, tol_cells=tol),
                                  support_match(smap, image, tol_cells=tol)))
            ys = np.arange(4096) / 4096
            image_max.append(float(np.max(np.abs(image.graph(ys) - np.asarray(u(ys))))))
        residuals["graph_vs_image_max"] = max(image_max)
        timings["scan_s"] = time.perf_counter() - t0 - timings["solve_s"]
    timings["total_s"] = time.perf_counter() - t0
    residuals["certified_threshold"] = CERTIFY_RESIDUAL
    return ExperimentReport(spec, runs, residuals, timings, certified)


# ---------------------------------------------------------------------------
# artifacts


def write_csv_map(smap: MicrosupportMap, path: Path) -> None:
    g = smap.grid
    lines = ["hbar,y,eta,magnitude"]
    for k, h in enumerate(smap.ladder.values):
        for i, y in enumerate(g.y):
            for j, e in enumerate(g.eta):
                lines.append(f"{h:.17g},{y:.17g},{e:.17g},{smap.magnitudes[k, i, j]:.17g}")
    Path(path).write_text("\n".join(lines) + "\n")


def heatmap_bytes(smap: MicrosupportMap, hbar_index: int) -> bytes:
    """Binary PGM (P5): width n_y, height n_eta, row 0 = eta_max, min-max scaled."""
    nh = smap.magnitudes.shape[0]
    if not -nh <= hbar_index < nh:
        raise IndexError(f"hbar index {hbar_index} outside ladder of {nh}")
    m = np.nan_to_num(smap.magnitudes[hbar_index], nan=0.0)
    lo, hi = float(m.min()), float(m.max())
    if hi > lo:
        img = np.rint(255 * (m - lo) / (hi - lo)).astype(np.uint8)
    else:
        img = np.zeros(m.shape, np.uint8)
    img = img.T[::-1]  # eta vertical, largest eta on top
    header = f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode()
    return header + np.ascontiguousarray(img).tobytes()


def emit_heatmap(smap: MicrosupportMap, hbar_index: int, path) -> Path:
    data = heatmap_bytes(smap, hbar_index)
    path = Path(path)
    path.write_bytes(data)
    return path


def write_run_dir(report: ExperimentReport, out: Path, heatmaps: bool = True) -> Path:
    stamp = _dt.datetime.now().strftime("%Y%m%dT%H%M%S")
    run = Path(out) / f"{report.spec.name}_{stamp}"
    run.mkdir(parents=True, exist_ok=False)
    dump_json(report.to_json(), run / "report.json")
    for k, r in enumerate(report.runs):
        write_csv_map(r.map, run / f"map_{k}.csv")
        if heatmaps:
            emit_heatmap(r.map, -1, run / f"heatmap_{k}.pgm")
    manifest = {"spec": report.spec.to_json(), "spec_sha256": report.spec.digest(),
                "files": sorted(p.name for p in run.iterdir())}
    dump_json(manifest, run / "manifest.json")
    return run


def _finite(obj):
    """Non-finite floats become null so the output stays standard JSON."""
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    return obj


def dump_json(obj, path) -> None:
    obj = json.loads(json.dumps(obj, default=_json_default))
    Path(path).write_text(json.dumps(_finite(obj), indent=1, allow_nan=False) + "\n")


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")
