"""Plan, simulate and render the 4x4 mission, then print a per-step phase table.

    python3 scripts/run_case_study.py [--out runs/mission_small] [--relaxed]

Exact mode takes a few minutes on one core.
"""

import argparse
import sys
from pathlib import Path

from spatel_swarm import cli
from spatel_swarm.planner import FlowPlan

SCENARIO = Path(__file__).resolve().parent.parent / "scenarios" / "mission_4x4.json"


def phase_table(plan: FlowPlan) -> str:
    rows = ["k  avoid  checker(NE)  gather(SW)  NW quadrant"]
    for k, m in enumerate(plan.occupancies):
        c = m.counts
        rows.append(f"{k:<3}{c[2, 1] + c[2, 2]:>5}  {c[0, 2]:>5} {c[1, 3]:>5}  "
                    f"{max(c[2, 0], c[3, 0]):>10}  {c[0:2, 0:2].ravel().tolist()}")
    return "\n".join(rows)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="runs/mission_small")
    ap.add_argument("--relaxed", action="store_true", help="LP relaxation plus rounding")
    ap.add_argument("--time-limit", type=float, default=600.0)
    args = ap.parse_args(argv)

    out = Path(args.out)
    flags = ["--out", str(out), "--time-limit", str(args.time_limit)]
    if args.relaxed:
        flags += ["--mode", "relaxed"]
    code = cli.main(["simulate", str(SCENARIO), *flags])
    if code not in (cli.EXIT_OK, cli.EXIT_BEST_EFFORT):
        return code
    plan = FlowPlan.from_json((out / "plan.json").read_text())
    print(phase_table(plan))
    print(f"frames: {out / 'frames'}")
    return code


if __name__ == "__main__":
    sys.exit(main())
