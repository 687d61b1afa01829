"""Write the plot-ready data behind the Werner, Bell-diagonal, isotropic and sigma-mixture figures.

    python scripts/reproduce_figures.py --out-dir figures [--fast]

Each file is produced by the ``nlbound scan`` subcommand; see README for columns.
"""

import argparse
import logging
import sys
import time
from pathlib import Path

from nlbound.cli import main as nlbound

JOBS = {
    "fig1_werner.csv": ["--family", "werner", "--x-min", "0", "--x-max", "1", "--steps", "101"],
    "fig2_bell_diagonal.csv": ["--family", "bell-diagonal", "--p-min", "-1", "--p-max", "1",
                               "--p-steps", "21"],
    "fig3_fix_p1.csv": ["--family", "bell-diagonal", "--fix-p1", "0.9", "--p-steps", "41"],
    "fig3_fix_p2.csv": ["--family", "bell-diagonal", "--fix-p2", "0.9", "--p-steps", "41"],
    "fig3_fix_p3.csv": ["--family", "bell-diagonal", "--fix-p3", "0.9", "--p-steps", "41"],
    "isotropic_d3.csv": ["--family", "isotropic", "--d", "3", "--x-min", "0.7", "--x-max", "0.85",
                         "--steps", "76"],
    "fig4_sigma_mixture.csv": ["--family", "sigma-mixture", "--alpha-min", "-1", "--alpha-max", "1",
                               "--alpha-steps", "41", "--beta-min", "0", "--beta-max", "1",
                               "--beta-steps", "41"],
}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out-dir", type=Path, default=Path("figures"))
    ap.add_argument("--fast", action="store_true", help="coarse search/quadrature preset")
    ap.add_argument("--only", nargs="*", choices=sorted(JOBS), help="subset of files to write")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")

    args.out_dir.mkdir(parents=True, exist_ok=True)
    for name in args.only or JOBS:
        t0 = time.perf_counter()
        argv = ["scan", *JOBS[name], "--out", str(args.out_dir / name)]
        if args.fast:
            argv.append("--fast")
        code = nlbound(argv)
        if code:
            return code
        logging.info("%s written in %.1fs", name, time.perf_counter() - t0)
    return 0


if __name__ == "__main__":
    sys.exit(main())
