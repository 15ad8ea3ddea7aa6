"""Write plot data (CSV + JSON sidecar) for every figure into one directory.

    python scripts/make_figures.py [--out results/figures] [--only 2 5 7]

Worker count comes from ADIABATIC_WORKERS, as for the CLI.
"""

import argparse
import time

from adiabatic_overlaps.cli import workers_from_env
from adiabatic_overlaps.figures import BUILDERS, build_figure


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="results/figures")
    parser.add_argument("--only", type=int, nargs="*", choices=sorted(BUILDERS))
    args = parser.parse_args()
    workers = workers_from_env()
    for number in args.only or sorted(BUILDERS):
        t0 = time.perf_counter()
        fig = build_figure(number, workers=workers)
        csv_path, _ = fig.write(args.out)
        print(f"figure {number}: {len(fig.rows)} rows -> {csv_path} "
              f"({time.perf_counter() - t0:.1f} s, {fig.n_violations} rows with violations)")


if __name__ == "__main__":
    main()
