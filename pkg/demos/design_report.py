"""Check an oscillator agent against the design constraints.

Walks through the three borders (velocity uncertainty, back-reaction,
resolution) for a measurement goal (W0, v0, dv0) and prints the margins,
then writes the border tables used by the design diagram figure.

Usage: python demos/design_report.py [--out runs]
"""

import argparse

from workagent.design import AgentDesign, evaluate_design
from workagent.scenarios import RunConfig, run_design

GOAL = (0.5, 0.0212, 0.00089)  # (W0, v0, dv0)


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--out", default="runs")
    args = parser.parse_args()

    config = RunConfig.from_file("configs/trimer_interference.json")
    design = config.design()
    print(f"agent: omega={design.omega}, ell={design.ell}, M={design.mass:.1f}")
    print(f"goal:  W0={GOAL[0]}, v0={GOAL[1]}, dv0={GOAL[2]}")
    print(f"launch photons n_ph = {design.n_ph(GOAL[1]):.1f}")
    print(f"dv_uc = {design.dv_uc():.3g}, dv_br = {design.dv_br(GOAL[0], GOAL[1]):.3g}")

    report = evaluate_design(design, GOAL)
    for name, ok in report.checks.items():
        margin = report.margins[name]
        print(f"  {name:12s} {'pass' if ok else 'FAIL'}  margin {margin:.3g}")

    run_dir = run_design(GOAL, config=config, out_dir=args.out)
    print(f"border tables written to {run_dir}")


if __name__ == "__main__":
    main()
