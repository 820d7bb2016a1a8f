"""Run every shipped experiment config and write its CSV under results/.

    python scripts/run_all.py                 # all configs
    python scripts/run_all.py fig4 table2     # configs whose name contains a pattern
"""

import argparse
import sys
import time
from pathlib import Path

from mrfpreempt.experiments import parse_config, run_experiment, write_result

ROOT = Path(__file__).resolve().parent.parent


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("patterns", nargs="*", help="substrings of config names to run")
    ap.add_argument("--configs", type=Path, default=ROOT / "configs")
    ap.add_argument("--results", type=Path, default=ROOT / "results")
    ap.add_argument("--format", choices=("csv", "json"), default="csv")
    args = ap.parse_args(argv)

    args.results.mkdir(parents=True, exist_ok=True)
    paths = sorted(p for p in args.configs.glob("*.json") if p.stem != "bounds_params")
    if args.patterns:
        paths = [p for p in paths if any(s in p.stem for s in args.patterns)]
    if not paths:
        print("no matching configs", file=sys.stderr)
        return 2
    for p in paths:
        t0 = time.perf_counter()
        result = run_experiment(parse_config(p))
        out = args.results / f"{p.stem}.{args.format}"
        write_result(result, out, args.format)
        print(f"{p.stem}: {len(result.rows)} rows -> {out} ({time.perf_counter() - t0:.1f}s)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
