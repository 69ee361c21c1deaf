"""Run the acceptance criteria and write a JSON summary.

    python3 scripts/run_acceptance.py --criteria 1,2,3 --output results/acceptance.json
"""

import argparse
import json
import os
import time
from dataclasses import replace
from pathlib import Path

from chaosexp.cli.acceptance import run_criteria, summary
from chaosexp.cli.config import AcceptanceSettings


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--criteria", help="comma separated subset, default all")
    p.add_argument("--replications", type=int, help="override the Monte Carlo sample size")
    p.add_argument("--method", choices=("exact", "mc"), default="exact", help="truth for the rate fit")
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    p.add_argument("--output", default="results/acceptance.json")
    args = p.parse_args()

    settings = AcceptanceSettings(workers=args.workers, rate_method=args.method)
    if args.replications:
        settings = replace(settings, replications=args.replications,
                           clt_replications=min(settings.clt_replications, args.replications))
    only = tuple(int(v) for v in args.criteria.split(",")) if args.criteria else None

    start = time.perf_counter()
    results = run_criteria(settings, only=only)
    for r in results:
        print(r.line())
    out = summary(results) | {"settings": settings.to_dict(), "runtime_seconds": time.perf_counter() - start}
    path = Path(args.output)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(out, indent=2))
    print(f"{out['passed']} clauses passed, {out['failed']} failed -> {path}")


if __name__ == "__main__":
    main()
