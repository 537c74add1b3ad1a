"""figgen command line: render figures from run directories.

    figgen f1 f6 --runs runs/trimer-interference runs/design --out figures/
"""

import argparse
import sys
from pathlib import Path

import matplotlib.pyplot as plt

from .figures import FIGURES, build_figure
from .io import MissingInput

DPI = 150


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="figgen", description="Render figures from run-directory CSVs"
    )
    parser.add_argument("figures", nargs="+", choices=sorted(FIGURES))
    parser.add_argument("--runs", nargs="+", required=True,
                        help="run directories searched in order")
    parser.add_argument("--out", required=True, help="output directory")
    args = parser.parse_args(argv)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    status = 0
    for name in args.figures:
        try:
            fig = build_figure(name, args.runs)
        except MissingInput as err:
            print(f"{name}: {err}", file=sys.stderr)
            status = 1
            continue
        target = out / f"{name}.png"
        fig.savefig(target, dpi=DPI)
        plt.close(fig)
        print(target)
    return status


if __name__ == "__main__":
    sys.exit(main())
