"""Regenerate tests/fixtures/cycle_counterexample.json (dimer strings and their middle-cut ratios)."""
import json
from pathlib import Path

from spe_qmc.analysis import cycle_counterexample, star_counterpart

OUT = Path(__file__).resolve().parents[1] / "tests" / "fixtures" / "cycle_counterexample.json"


def main():
    doc = {
        "cycle": [cycle_counterexample(n) for n in (4, 6, 8, 10)],
        "star": [star_counterpart(n, b) for n in (3, 4, 5, 6) for b in (2, 3, 4)],
    }
    OUT.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    for row in doc["cycle"]:
        print(f"cycle N={row['N']:2d}  ratio={row['ratio']:8.1f}  2^(4|A|-2)={row['encoding_bound']:10.1f}")
    print("star max ratio", max(r["ratio"] for r in doc["star"]))


if __name__ == "__main__":
    main()
