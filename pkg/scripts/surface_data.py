"""Dump the cost surface of a fleet: its segments and cost-vs-forecast curves.

    python scripts/surface_data.py [--fleet configs/reference_fleet.toml] [--y 120 150] [--out surface]
"""

import argparse
from pathlib import Path

from vppcvar.cost_surface import build_surface, surface_plot_data, write_surface_csv
from vppcvar.merit_dispatch import load_fleet

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--fleet", default=ROOT / "configs" / "reference_fleet.toml")
    ap.add_argument("--y", type=float, nargs="+", default=[100.0, 150.0], help="realized net demand(s), kW")
    ap.add_argument("--out", default="surface", help="output directory")
    args = ap.parse_args()

    surface = build_surface(load_fleet(args.fleet))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_surface_csv(surface, out / "segments.csv")
    for y in args.y:
        with open(out / f"curve_y{y:g}.csv", "w") as fh:
            fh.write("y_hat,cost\n")
            for y_hat, cost in surface_plot_data(surface, y):
                fh.write(f"{y_hat!r},{cost!r}\n")
    print(f"{len(surface.segments)} segments; curves for y = {', '.join(f'{y:g}' for y in args.y)} kW in {out}/")


if __name__ == "__main__":
    main()
