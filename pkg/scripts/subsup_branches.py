"""Where the evolved Lagrangian state actually sits for the doubling-map subaction.

For each source x the support should lie at (y_i, 2 u(x) + tau'(y_i)) over both
preimages y_i. Prints that point next to u(y_i), the Bellman gap of the branch,
and the scanned peak on the fibre y = y_i.
"""
import argparse
import math

import numpy as np

from mlcircle.circle import TrigPoly
from mlcircle.ergodic import SkewSpec, bellman_gaps, solve_subaction
from mlcircle.microsupport import HbarLadder, ScanGrid, correlation_scan
from mlcircle.pipeline import build_S_from_u
from mlcircle.states import SEMICLASSICAL, EvolutionSpec, LagrangianState, evolve
from mlcircle.circle import MapSpec


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("xs", nargs="*", type=float, default=[0.2, 0.47, 0.8])
    ap.add_argument("--scan", action="store_true", help="also scan each evolved state (slow)")
    args = ap.parse_args()
    tau = TrigPoly.sin_mode(1, 1 / (2 * math.pi))
    skew = SkewSpec.from_tau(tau)
    sol = solve_subaction(skew)
    u = sol.b
    print(f"subaction: residual {sol.bellman_residual:.2e}, breakpoints {u.breakpoints}")
    ev = EvolutionSpec(MapSpec.doubling(), tau, SEMICLASSICAL)
    S = build_S_from_u(u)
    grid = ScanGrid(16, 129, -4.0, 4.0)
    for x in args.xs:
        print(f"x = {x}")
        for y in (x / 2, x / 2 + 0.5):
            image = 2 * float(u(x)) + float(tau.derivative(y))
            gap = bellman_gaps(skew, sol, np.array([x]))[0][0 if y < 0.5 else 1]
            print(f"  y={y:.4f}  image eta={image:+.4f}  u(y)={float(u(y)):+.4f}  gap={gap:.4f}")
        if args.scan:
            m = correlation_scan(lambda h: evolve(LagrangianState(S, x, h), ev), grid, HbarLadder())
            for p in m.peaks()[:4]:
                print(f"  peak y={p['y']:.4f} eta={p['eta']:+.4f} cells={p['cells']}")


if __name__ == "__main__":
    main()
