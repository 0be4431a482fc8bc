#!/usr/bin/env python3
"""Run the bundled road-accident scenario and print its trace and outcome."""

import sys
from pathlib import Path

from crisismesh.runtime import sniffer_export, validate_conversation
from crisismesh.scenario import load_scenario, run

REPO = Path(__file__).resolve().parent.parent


def main() -> int:
    scenario = load_scenario((REPO / "scenarios" / "road_accident.scenario").read_text())
    report = run(scenario)
    print(sniffer_export(report.trace), end="")
    print(f"\nfinal phase: {report.final_phase}")
    for rec in report.recommendations:
        print(f"recommendation -> {rec.target}: {rec.action} ({rec.issued_by.value})")
    violations = validate_conversation(report.trace)
    print(f"protocol violations: {len(violations)}")
    return 0 if report.final_phase == "Resolved" and not violations else 1


if __name__ == "__main__":
    sys.exit(main())
