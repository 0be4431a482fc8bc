#!/usr/bin/env python3
"""Replay N seeded synthetic scenarios twice each and report mismatches.

Usage: determinism_sweep.py [N] [--emit DIR]

With --emit, also writes each generated scenario as a JSON file so odd cases
can be replayed through the CLI.
"""

import argparse
import collections
import sys
from pathlib import Path

from crisismesh.scenario import replay_check, run, scenario_to_json
from crisismesh.synth import generate_scenario


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("count", nargs="?", type=int, default=100)
    parser.add_argument("--emit", default=None)
    args = parser.parse_args()

    phases = collections.Counter()
    mismatches = []
    for seed in range(args.count):
        scenario = generate_scenario(seed)
        if args.emit:
            out = Path(args.emit)
            out.mkdir(parents=True, exist_ok=True)
            (out / f"synthetic-{seed}.scenario").write_text(scenario_to_json(scenario))
        first, second = run(scenario), run(scenario)
        if not replay_check(first, second):
            mismatches.append(seed)
        phases[first.final_phase] += 1

    for phase, count in sorted(phases.items()):
        print(f"{phase:12s} {count}")
    if mismatches:
        print(f"NON-DETERMINISTIC SEEDS: {mismatches}")
        return 1
    print(f"all {args.count} scenarios replay identically")
    return 0


if __name__ == "__main__":
    sys.exit(main())
