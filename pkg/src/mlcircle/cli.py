"""Command-line front end: `mlc <command> --config cfg.json --out dir`.

Exit status: 0 success, 1 a requested check failed, 2 validation error,
3 numerical non-convergence.
"""
from __future__ import annotations

import argparse
import copy
import json
import math
import os
import sys
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .circle import MapSpec, TrigPoly, periodic_from_json
from .cohomology import ObstructionError, ResonanceError, graph_invariance_residual, solve_rotation_coboundary
from .ergodic import SkewSpec, SymbolSequence, solve_subaction, twist_check
from .microsupport import HbarLadder, ScanGrid, correlation_scan
from .pipeline import (ConvergenceError, ExperimentSpec, dump_json, emit_heatmap, run_experiment, write_csv_map,
                       write_run_dir)
from .quadrature import QuadPolicy, QuadratureError
from .states import EvolutionSpec, evolve, state_from_json

COMMANDS = ("evolve", "scan", "subaction", "twist", "cohomology", "experiment", "oracle")

EXIT_OK, EXIT_CHECK, EXIT_VALIDATION, EXIT_NONCONVERGENCE = 0, 1, 2, 3

DEFAULTS = {
    "evolve": {"state": {"kind": "wavepacket", "x": 0.6, "xi": 1.0, "hbar": 0.01},
               "evolution": {"map": {"kind": "doubling"}, "tau": [], "coupling": 1.0}, "n": 1024},
    "scan": {"state": {"kind": "wavepacket", "x": 0.5, "xi": 0.8},
             "grid": {"n_y": 64, "n_eta": 64, "eta_min": -4.0, "eta_max": 4.0},
             "ladder": {"hbar0": 0.01, "ratio": 0.5, "J": 6}, "heatmaps": True},
    "subaction": {"tau": None, "A": None, "lam": 0.5, "M": 2048, "tol": 1e-10, "max_iter": 200},
    "twist": {"tau": [[1, 0.0, -0.07957747154594767], [-1, 0.0, 0.07957747154594767]], "lam": 0.5,
              "n_x": 64, "K": 30, "h_fd": 1e-5,
              "pairs": [[[1], [2]], [[1, 2], [2, 1]], [[1, 1], [1, 2]]]},
    "cohomology": {"tau": [[1, 0.0, -0.07957747154594767], [-1, 0.0, 0.07957747154594767]],
                   "alpha": (math.sqrt(5.0) - 1.0) / 2.0},
    "experiment": {"scenario": "Theorem1"},
    "oracle": {"names": None},
}


class CliError(ValueError):
    """Invalid configuration or arguments."""


# ---------------------------------------------------------------------------
# configuration


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(cfg: dict, overrides) -> dict:
    """Apply dotted `key.sub=value` overrides; values are parsed as JSON when possible."""
    cfg = copy.deepcopy(cfg)
    for item in overrides or []:
        if "=" not in item:
            raise CliError(f"override {item!r} is not key=value")
        key, val = item.split("=", 1)
        node = cfg
        parts = key.split(".")
        for p in parts[:-1]:
            nxt = node.get(p)
            if nxt is None:
                nxt = node[p] = {}
            if not isinstance(nxt, dict):
                raise CliError(f"override path {key!r} crosses a non-object value")
            node = nxt
        old = node.get(parts[-1])
        new = _parse_value(val)
        if isinstance(old, bool) and not isinstance(new, bool):
            raise CliError(f"override {key} expects a boolean")
        if isinstance(old, (int, float)) and not isinstance(old, bool):
            if not isinstance(new, (int, float)) or isinstance(new, bool):
                raise CliError(f"override {key} expects a number, got {val!r}")
            if isinstance(old, int) and isinstance(new, float) and not new.is_integer():
                raise CliError(f"override {key} expects an integer, got {val!r}")
            new = type(old)(new)
        node[parts[-1]] = new
    return cfg


def load_config(command: str, path: Optional[str], overrides) -> dict:
    cfg = copy.deepcopy(DEFAULTS[command])
    if path:
        try:
            user = json.loads(Path(path).read_text())
        except OSError as e:
            raise CliError(f"cannot read config {path}: {e}") from e
        except json.JSONDecodeError as e:
            raise CliError(f"config {path} is not valid JSON: {e}") from e
        if not isinstance(user, dict):
            raise CliError("config must be a JSON object")
        cfg.update(user)
    return apply_overrides(cfg, overrides)


def _out_dir(path: Optional[str]) -> Path:
    out = Path(path or ".")
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise CliError(f"cannot create output directory {out}: {e}") from e
    if not os.access(out, os.W_OK):
        raise CliError(f"output directory {out} is not writable")
    return out


def _dump(obj, path: Path) -> None:
    dump_json(obj, path)


def _with_hbar(d: dict, hbar: float) -> dict:
    d = dict(d)
    if d.get("kind") == "evolved":
        d["parent"] = _with_hbar(d["parent"], hbar)
    else:
        d["hbar"] = hbar
    return d


def _tau_from(cfg: dict, key: str = "tau") -> TrigPoly:
    val = cfg.get(key)
    return TrigPoly() if val is None else TrigPoly.from_json(val)


# ---------------------------------------------------------------------------
# commands


def cmd_evolve(cfg: dict, out: Path, threads: int) -> int:
    state = state_from_json(cfg["state"])
    spec = EvolutionSpec.from_json(cfg["evolution"])
    ev = evolve(state, spec)
    n = int(cfg["n"])
    z = np.arange(n) / n
    v = ev(z)
    lines = ["z,re,im,abs"] + [f"{a:.17g},{b.real:.17g},{b.imag:.17g},{abs(b):.17g}" for a, b in zip(z, v)]
    (out / "evolved.csv").write_text("\n".join(lines) + "\n")
    _dump({"state": ev.to_json(), "n": n, "max_abs": float(np.max(np.abs(v)))}, out / "evolved.json")
    return EXIT_OK


def cmd_scan(cfg: dict, out: Path, threads: int) -> int:
    template = cfg["state"]
    grid = ScanGrid(**cfg["grid"])
    ladder = HbarLadder(**cfg["ladder"])
    policy = QuadPolicy(**cfg.get("policy", {}))
    smap = correlation_scan(lambda h: state_from_json(_with_hbar(template, h)), grid, ladder, policy,
                            threads=threads)
    write_csv_map(smap, out / "map.csv")
    _dump(smap.summary(), out / "summary.json")
    if cfg.get("heatmaps"):
        for k in range(ladder.J + 1):
            emit_heatmap(smap, k, out / f"heatmap_{k}.pgm")
    return EXIT_OK


def _skew_from(cfg: dict) -> SkewSpec:
    lam = float(cfg.get("lam", 0.5))
    if cfg.get("A") is not None:
        return SkewSpec(MapSpec.doubling(), lam, periodic_from_json(cfg["A"]))
    return SkewSpec.from_tau(_tau_from(cfg), lam)


def cmd_subaction(cfg: dict, out: Path, threads: int) -> int:
    spec = _skew_from(cfg)
    sol = solve_subaction(spec, int(cfg["M"]), float(cfg["tol"]), int(cfg["max_iter"]))
    (out / "b.csv").write_text(sol.to_csv())
    d = sol.to_json()
    d["contraction_ratio"] = sol.contraction_ratio()
    _dump(d, out / "subaction.json")
    if not sol.converged:
        raise ConvergenceError(f"ergodic.solve_subaction: update above tol={cfg['tol']:g} after "
                               f"{sol.iterations} iterations (residual {sol.bellman_residual:.3e})")
    return EXIT_OK


def cmd_twist(cfg: dict, out: Path, threads: int) -> int:
    spec = _skew_from(cfg)
    n = int(cfg["n_x"])
    x = (np.arange(n) + 0.5) / n
    x = x[np.abs(x - 0.5) > 1e-12]
    pairs = [(SymbolSequence(tuple(a)), SymbolSequence(tuple(b))) for a, b in cfg["pairs"]]
    res = twist_check(spec, x, pairs, K=int(cfg["K"]), h_fd=float(cfg["h_fd"]))
    _dump(res, out / "twist.json")
    return EXIT_OK


def cmd_cohomology(cfg: dict, out: Path, threads: int) -> int:
    sol = solve_rotation_coboundary(_tau_from(cfg), float(cfg["alpha"]))
    d = sol.to_json()
    d["graph_invariance_residual"] = graph_invariance_residual(sol.u, MapSpec.rotation(sol.alpha), _tau_from(cfg))
    _dump(d, out / "cohomology.json")
    return EXIT_OK


def cmd_experiment(cfg: dict, out: Path, threads: int) -> int:
    spec = ExperimentSpec.from_json(cfg)
    report = run_experiment(spec, threads=threads)
    run = write_run_dir(report, out)
    # convenience copy at the top of --out
    (out / "report.json").write_text((run / "report.json").read_text())
    print(f"run directory: {run}")
    print(f"match.hit = {report.match['hit']}  (hausdorff {report.match['hausdorff_cells']:.3f} cells)")
    return EXIT_OK


def cmd_oracle(cfg: dict, out: Path, threads: int, names=None, list_only: bool = False) -> int:
    from .oracles import REGISTRY, run_oracle
    if list_only:
        for n, fn in REGISTRY.items():
            print(n)
        return EXIT_OK
    names = names or cfg.get("names") or list(REGISTRY)
    unknown = [n for n in names if n not in REGISTRY]
    if unknown:
        raise CliError(f"unknown oracle(s): {', '.join(unknown)}")
    results = []
    for n in names:
        r = run_oracle(n)
        results.append(r.to_json())
        lit = "" if r.literal_holds is None else f"  [literal {'ok' if r.literal_holds else 'CONTRADICTED'}: {r.literal}]"
        print(f"{'PASS' if r.passed else 'FAIL'} {n}: expected {r.expected:.12g}, actual {r.actual:.12g}, "
              f"tol {r.tol:g}{lit}")
    _dump(results, out / "oracle.json")
    return EXIT_OK if all(r["passed"] for r in results) else EXIT_CHECK


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mlc", description="Micro-support and ergodic-optimization experiments "
                                                        "on the circle.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for c in COMMANDS:
        sp = sub.add_parser(c)
        sp.add_argument("--config", help="JSON config (merged over the command defaults)")
        sp.add_argument("--out", default=".", help="output directory (all artifacts go here)")
        sp.add_argument("--threads", type=int, default=None, help="worker cap (falls back to MLC_THREADS)")
        sp.add_argument("--seed", type=int, default=0, help="RNG seed (u64)")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config entry, dotted paths allowed")
        if c == "experiment":
            sp.add_argument("--scenario", choices=["Theorem1", "Theorem2", "SubsupDoubling", "DiffeoInvariance"])
        if c == "oracle":
            sp.add_argument("names", nargs="*", help="oracle names (default: all)")
            sp.add_argument("--list", action="store_true", help="list available oracles")
    return p


def dispatch(args: argparse.Namespace) -> int:
    if args.seed < 0 or args.seed >= 2**64:
        raise CliError("--seed must be an unsigned 64-bit integer")
    np.random.seed(args.seed % 2**32)
    threads = args.threads
    if threads is None:
        env = os.environ.get("MLC_THREADS")
        try:
            threads = int(env) if env else 1
        except ValueError as e:
            raise CliError(f"MLC_THREADS={env!r} is not an integer") from e
    if threads < 1:
        raise CliError("--threads must be >= 1")
    cfg = load_config(args.command, args.config, args.set)
    if args.command == "experiment" and args.scenario:
        cfg["scenario"] = args.scenario
    if args.command == "experiment":
        cfg.setdefault("seed", args.seed)
    out = _out_dir(args.out)
    handler = {"evolve": cmd_evolve, "scan": cmd_scan, "subaction": cmd_subaction, "twist": cmd_twist,
               "cohomology": cmd_cohomology, "experiment": cmd_experiment}.get(args.command)
    if args.command == "oracle":
        return cmd_oracle(cfg, out, threads, names=args.names, list_only=args.list)
    return handler(cfg, out, threads)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return dispatch(args)
    except (ConvergenceError, QuadratureError) as e:
        print(f"error (non-convergence): {e}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except (CliError, ObstructionError, ResonanceError, ValueError, KeyError, TypeError) as e:
        print(f"error (validation): {e}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
