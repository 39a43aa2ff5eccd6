#!/usr/bin/env python3
"""Threshold calibration sweep over the labeled pair corpus.

Scores every corpus pair once, then reports classification accuracy for a
grid of (tau_struct, tau_surf) cutoffs. This is the experiment that picked
the frozen defaults (0.60, 0.35); rerun it whenever the corpus grows.
"""

from __future__ import annotations

import json
from pathlib import Path

from codescaffold.analysis import Sample, Thresholds, classify_pair, quadrant_for

CORPUS = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "taxonomy_corpus.json"

STRUCT_GRID = [0.40, 0.50, 0.60, 0.70, 0.80]
SURF_GRID = [0.20, 0.25, 0.30, 0.35, 0.40, 0.45, 0.50]


def main() -> int:
    pairs = json.loads(CORPUS.read_text(encoding="utf-8"))["pairs"]
    scored = []
    for pair in pairs:
        report = classify_pair(
            Sample(pair["target"]["statement"], pair["target"]["code"]),
            Sample(pair["candidate"]["statement"], pair["candidate"]["code"]),
        )
        scored.append((pair["name"], pair["expected_quadrant"],
                       report.structural_score, report.surface_score))

    print(f"{len(scored)} corpus pairs\n")
    print("pair scores:")
    for name, expected, structural, surface in scored:
        print(f"  {name:14s} {expected:13s} structural={structural:.3f} surface={surface:.3f}")

    print("\naccuracy grid (rows tau_struct, cols tau_surf):")
    header = "            " + "  ".join(f"{ts:.2f}" for ts in SURF_GRID)
    print(header)
    best = []
    for tau_struct in STRUCT_GRID:
        row = [f"tau_s={tau_struct:.2f}"]
        for tau_surf in SURF_GRID:
            thresholds = Thresholds(tau_struct=tau_struct, tau_surf=tau_surf)
            hits = sum(
                quadrant_for(structural, surface, thresholds).value == expected
                for _, expected, structural, surface in scored
            )
            row.append(f"{hits:2d}/12")
            best.append((hits, tau_struct, tau_surf))
        print("  ".join(row))

    top = max(best)
    print(f"\nbest grid cell: {top[0]}/12 at tau_struct={top[1]:.2f}, tau_surf={top[2]:.2f}")
    dflt = Thresholds()
    default_hits = sum(
        quadrant_for(structural, surface, dflt).value == expected
        for _, expected, structural, surface in scored
    )
    print(f"frozen defaults ({dflt.tau_struct:.2f}, {dflt.tau_surf:.2f}): {default_hits}/12")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
