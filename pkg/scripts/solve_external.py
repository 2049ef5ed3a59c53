"""Solve an exported LP file with HiGHS and write a ``name value`` solution.

    python3 scripts/solve_external.py model.lp solution.txt --time-limit 3600

Needs ``highspy`` (not a dependency of the package itself).
"""

import argparse
import sys

import highspy


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("lp")
    ap.add_argument("solution")
    ap.add_argument("--time-limit", type=float, default=3600.0)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args(argv)

    h = highspy.Highs()
    h.setOptionValue("time_limit", args.time_limit)
    h.setOptionValue("threads", args.threads)
    h.setOptionValue("random_seed", 0)
    if h.readModel(args.lp) != highspy.HighsStatus.kOk:
        print(f"HiGHS could not read {args.lp}", file=sys.stderr)
        return 3
    h.run()
    status = h.modelStatusToString(h.getModelStatus())
    info = h.getInfo()
    print(f"status: {status}  objective: {info.objective_function_value:g}  "
          f"mip_gap: {info.mip_gap:g}")
    if info.primal_solution_status != 2:  # kSolutionStatusFeasible
        print("no feasible solution", file=sys.stderr)
        return 4
    lp = h.getLp()
    x = h.getSolution().col_value
    with open(args.solution, "w") as fh:
        fh.write(f"# HiGHS {status} objective {info.objective_function_value:.12g}\n")
        for name, v in zip(lp.col_names_, x):
            r = round(v)
            fh.write(f"{name} {r if abs(v - r) <= 1e-6 else repr(v)}\n")
    return 0 if status == "Optimal" else 4


if __name__ == "__main__":
    sys.exit(main())
