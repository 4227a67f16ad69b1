"""Run every built-in simulation scenario and print a one-line summary each.

Usage: python scripts/run_paper_examples.py [--out DIR]

With --out the trajectory CSVs and summary JSONs are kept, same layout as
the CLI would produce.
"""
import argparse
import sys
from pathlib import Path

from consdyn.scenarios import (
    builtin_scenarios,
    build_sequence,
    derived_seeds,
    resolve_initial,
    resolve_spec,
)
from consdyn.simulate import run, summary_dict, write_trajectory_csv


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=None, help="keep artifacts in this directory")
    args = ap.parse_args()

    out = None
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)

    failures = 0
    for name, sc in sorted(builtin_scenarios().items()):
        if sc.mode != "simulate":
            continue
        seeds = derived_seeds(sc.seed)
        traj = run(
            build_sequence(sc, seeds),
            resolve_initial(sc, seeds),
            resolve_spec(sc),
            tol=sc.tol,
            max_steps=sc.max_steps,
        )
        s = summary_dict(traj, sc.tol)
        gamma = "" if s["gamma"] is None else f"  gamma={s['gamma']}"
        print(
            f"{name:<28} {s['stop_reason']:<10} steps={s['steps']:<6} "
            f"final diameter={s['final_diameter']:.6e}{gamma}"
        )
        if traj.violation is not None:
            failures += 1
            print(f"  violation: {traj.violation}")
        if out is not None:
            slug = name.replace("/", "-")
            write_trajectory_csv(traj, out / f"{slug}.trajectory.csv")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
