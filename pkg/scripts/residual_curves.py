"""Second-order residual curves for the three launch velocities, analytic vs numerical.

Writes residual_curves.csv and prints the deviation of each curve, both
relative to its own peak and relative to the largest curve on the plot.
"""
import argparse
from pathlib import Path

import numpy as np

from freefall import io
from freefall.potential import Cubic, Exact
from freefall.trajectory import InitialConditions, second_order_residual
from freefall.verify import LAB_SOURCE, LAUNCH_VELOCITIES


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=".")
    ap.add_argument("--cubic", action="store_true", help="integrate the cubic model instead of the point source")
    args = ap.parse_args()

    model = Cubic.from_source(LAB_SOURCE) if args.cubic else Exact(LAB_SOURCE)
    curves = [second_order_residual(model, InitialConditions((0, 0, 0), v)) for v in LAUNCH_VELOCITIES]
    peak = max(np.max(np.abs(c.analytic)) for c in curves)
    for v, c in zip(LAUNCH_VELOCITIES, curves):
        print(
            f"v = {tuple(x * 1e3 for x in v)} mm/s: analytic peak {np.max(np.abs(c.analytic)):.3e} m, "
            f"max |diff| {c.max_deviation():.3e} m, own-peak ratio {c.relative_deviation():.3g}, "
            f"plot-peak ratio {c.max_deviation() / peak:.3g}"
        )
    cols = [curves[0].t] + [a for c in curves for a in (c.analytic, c.numeric)]
    header = ["t"] + [f"{k}_{i}" for i in range(3) for k in ("analytic", "numeric")]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    io.write_table(out / "residual_curves.csv", header, np.column_stack(cols), {"model": type(model).__name__})


if __name__ == "__main__":
    main()
