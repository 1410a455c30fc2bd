#!/usr/bin/env python3
"""Regenerate the per-distance energy and delivery-time curves.

Runs analysis and simulation side by side on the baseline config. Any
arguments are forwarded to the CLI verb in place of the defaults.
"""

import sys
from pathlib import Path

from fuotacast import cli

ROOT = Path(__file__).resolve().parents[1]


def main() -> int:
    args = sys.argv[1:] or ["--config", str(ROOT / "configs" / "baseline.yaml")]
    return cli.main(["simulate", *args])


if __name__ == "__main__":
    raise SystemExit(main())
