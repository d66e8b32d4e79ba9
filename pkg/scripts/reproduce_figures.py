#!/usr/bin/env python3
"""Run the three tabletop measurements with their default parameters.

Writes results/temporal-histogram, results/spatial-scan and
results/source-size-scan, each with CSV data plus a JSON summary, and an
oracle-check report.  Everything is seeded, so reruns reproduce the same
data files byte for byte.
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from hbtsim.cli import main as cli_main  # noqa: E402

MEASUREMENTS = (
    "temporal-histogram",
    "spatial-scan",
    "source-size-scan",
    "oracle-check",
)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="results", help="output root directory")
    parser.add_argument("--seed", type=int, default=20030317)
    parser.add_argument(
        "--realizations", type=int, default=10_000, help="screens per scan curve"
    )
    parser.add_argument(
        "--quick",
        action="store_true",
        help="small, fast settings for a smoke run (coarser scans, short acquisition)",
    )
    args = parser.parse_args()

    for kind in MEASUREMENTS:
        out = Path(args.out) / kind
        cli_args = [
            kind,
            "--seed",
            str(args.seed),
            "--realizations",
            str(500 if args.quick else args.realizations),
            "--out",
            str(out),
        ]
        if args.quick:
            import json
            import tempfile

            quick = {
                "scan_step_m": 4e-4,
                "acquisition_time_s": 0.05,
                "channel_width_s": 3e-8,
                "histogram_range_s": 6e-6,
                "singles_rate_cps": 300_000.0,
            }
            with tempfile.NamedTemporaryFile(
                "w", suffix=".json", delete=False
            ) as handle:
                json.dump(quick, handle)
                config_path = handle.name
            cli_args += ["--config", config_path]
        print(f"== {kind}")
        code = cli_main(cli_args)
        if code != 0:
            return code
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
