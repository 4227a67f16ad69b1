"""Certification sweep over the shipped averaging-map library.

Usage: python scripts/certify_report.py [--count N] [--seed S]

For every library entry: sample N in-domain profiles, check hull inclusion
at 1e-9 over the map's time range, and report the smallest properness gap
seen.  Then run the two equiproperness verdicts (the valid mean-selector
family passes a 1e-9 floor, the quarter-power family does not).
"""
import argparse
import sys

from consdyn.certify import SampleConfig, check_averaging, check_equiproper, default_time_range
from consdyn.scenarios import averaging_map_library, builtin_scenarios, sample_config


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--count", type=int, default=200, help="profiles per map")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    bad = 0
    print(f"{'map':<24} {'inclusion':<10} {'min gap':>12}")
    for i, entry in enumerate(averaging_map_library()):
        box = entry.sample
        cfg = SampleConfig(
            seed=args.seed + i,
            count=args.count,
            n=box["n"],
            d=box["d"],
            low=box["low"],
            high=box["high"],
        )
        rep = check_averaging(
            entry.descriptor,
            entry.descriptor.claim,
            samples=cfg,
            time_steps=entry.time_steps,
        )
        gap = "n/a" if rep.family_min_gap is None else f"{rep.family_min_gap:.3e}"
        print(f"{entry.label:<24} {'ok' if rep.ok else 'VIOLATION':<10} {gap:>12}")
        bad += 0 if rep.ok else 1

    for name in ("paper/mean-selectors-valid", "paper/quarter-power-family"):
        sc = builtin_scenarios()[name]
        family = [(m, default_time_range(m, sc.time_steps)) for m in sc.maps]
        rep = check_equiproper(
            family,
            sc.coordinate_map,
            samples=sample_config(sc),
            gap_floor=sc.gap_floor,
            consensus_tol=sc.consensus_tol,
        )
        print(
            f"{name}: family min gap "
            f"{rep.family_min_gap:.3e} over {len(rep.records)} profiles, "
            f"equiproper at {sc.gap_floor:.0e}: {'yes' if rep.equiproper else 'NO'}"
        )
    return 1 if bad else 0


if __name__ == "__main__":
    sys.exit(main())
