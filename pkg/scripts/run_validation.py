"""Run the acceptance checks and save a JSON report.

    python scripts/run_validation.py --criteria 1 2 3 --out results/validation.json
    python scripts/run_validation.py --workers 4          # all ten, several minutes
"""
import argparse
import json
from pathlib import Path

from paraxial_moments.validation import run_checks


def main():
    p = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    p.add_argument("--criteria", type=int, nargs="*")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default="results/validation.json")
    args = p.parse_args()

    results = []
    for r in run_checks(args.criteria, workers=args.workers):
        print(r.line(), flush=True)
        results.append({"number": r.number, "title": r.title, "passed": r.passed,
                        "runtime": r.runtime, "time_limit": r.time_limit,
                        "detail": r.detail, "values": r.values})
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(results, indent=2, default=float) + "\n")
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
