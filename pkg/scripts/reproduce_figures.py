"""Write every figure table (plus manifests) into one directory via the CLI."""

import argparse
import sys
import time
from pathlib import Path

from wva_fisher.cli import main

RUNS = {
    "fig2": ["fig2"],
    "fig3": ["fig3"],
    "fig4": ["fig4"],
    "fig5": ["fig5"],
    "fig6": ["fig6"],
    "fig6_wide": ["fig6", "--nbar-min", "1e2", "--nbar-max", "1e4"],
}


def run(outdir: Path, names, fmt: str) -> int:
    outdir.mkdir(parents=True, exist_ok=True)
    status = 0
    for name in names:
        start = time.perf_counter()
        code = main(RUNS[name] + ["--format", fmt, "--out", str(outdir / f"{name}.{fmt}")])
        print(f"{name:10s} exit={code} {time.perf_counter() - start:7.1f} s", file=sys.stderr)
        status = status or code
    return status


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--outdir", type=Path, default=Path("results"))
    ap.add_argument("--only", nargs="*", choices=sorted(RUNS), default=sorted(RUNS))
    ap.add_argument("--format", choices=("csv", "json"), default="csv")
    args = ap.parse_args()
    sys.exit(run(args.outdir, args.only, args.format))
