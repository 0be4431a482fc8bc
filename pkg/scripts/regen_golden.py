#!/usr/bin/env python3
"""Regenerate tests/golden/road_accident.sniff from the current engine.

Only run this after deliberately changing the message choreography, and
re-review the diff by hand before committing: the golden file is the
reviewed record of the interaction sequence.
"""

import sys
from pathlib import Path

from crisismesh.runtime import sniffer_export
from crisismesh.scenario import load_scenario, run

REPO = Path(__file__).resolve().parent.parent
GOLDEN = REPO / "tests" / "golden" / "road_accident.sniff"


def main() -> int:
    scenario = load_scenario((REPO / "scenarios" / "road_accident.scenario").read_text())
    text = sniffer_export(run(scenario).trace)
    previous = GOLDEN.read_text() if GOLDEN.exists() else ""
    GOLDEN.write_text(text)
    print(text, end="")
    print("-- unchanged --" if text == previous else "-- GOLDEN FILE CHANGED, review the diff --",
          file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
