"""Displacement versus coupling ratio for several start-site detunings (g = 0).

    python3 scripts/fig3_sweep.py --out results/fig3
"""

import argparse
from pathlib import Path

from nhwalk.cli import plot_sweep, write_sweep_csv
from nhwalk.experiments import FIG3_DELTA, run_fig3_sweep


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", type=Path, default=Path("results/fig3"))
    parser.add_argument("--jobs", type=int, default=1)
    parser.add_argument("--delta", type=float, nargs="+", default=list(FIG3_DELTA))
    args = parser.parse_args()

    result = run_fig3_sweep(delta_values=args.delta, jobs=args.jobs)
    args.out.mkdir(parents=True, exist_ok=True)
    write_sweep_csv(args.out / "sweep.csv", result)
    plot_sweep(args.out / "plot_fig3.svg", result, "delta")

    ref = {r.ratio: r.dm_final for r in result.rows if r.model == "incoherent_formula"}
    print(f"{'ratio':>7} {'incoh':>7} " + " ".join(f"{'d=' + format(d, 'g'):>8}" for d in args.delta))
    for ratio in sorted(ref):
        cells = []
        for d in args.delta:
            row = result.get("full_gpe", ratio, delta=d)
            cells.append(f"{row.dm_final:8.4f}" if row.ok else f"{'fail':>8}")
        print(f"{ratio:7.3f} {ref[ratio]:7.4f} " + " ".join(cells))


if __name__ == "__main__":
    main()
