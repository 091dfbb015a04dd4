"""Run the method x preconditioning grid from a config file and print the
accuracy grid plus the per-scene precision/recall table of one cell.

    python3 scripts/run_grid.py configs/cad60.ini --corpus /data/CAD-60
    python3 scripts/run_grid.py configs/synthetic.ini --show knn:centre_mirror
"""

import argparse
import csv
import sys

from skelhar.cli import DataError, run_grid
from skelhar.config import ConfigError, load_config
from skelhar.reports import MODE_TITLES, scene_table_rows


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("config")
    ap.add_argument("--corpus", help="override [corpus] path")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--out")
    ap.add_argument("--show", default="knn:centre_mirror", help="method:mode cell whose scene table is printed")
    args = ap.parse_args()

    overrides = {("run", "seed"): args.seed, ("run", "out"): args.out}
    if args.corpus:
        overrides[("corpus", "path")] = args.corpus
        overrides[("corpus", "synthetic")] = "no"
    try:
        config = load_config(args.config, overrides=overrides)
    except ConfigError as exc:
        sys.exit(f"config error: {exc}")
    try:
        cells = run_grid(config)
    except DataError as exc:
        sys.exit(f"data error: {exc}")

    print(f"{'':40s}" + "".join(f"{m.upper():>9s}" for m in config.methods))
    for mode in config.modes:
        print(f"{MODE_TITLES[mode]:40s}" + "".join(f"{100 * cells[(m, mode)].report.accuracy:8.2f}%" for m in config.methods))

    method, _, mode = args.show.partition(":")
    if (method, mode) in cells:
        print(f"\nper-scene precision / recall, {method} with {MODE_TITLES[mode].lower()}:")
        csv.writer(sys.stdout, delimiter="\t", lineterminator="\n").writerows(scene_table_rows(cells[(method, mode)].report))
    print(f"\nreports in {config.out}")


if __name__ == "__main__":
    main()
