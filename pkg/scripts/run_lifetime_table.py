#!/usr/bin/env python3
"""Regenerate the battery-lifetime table per duty location and scheme."""

import sys
from pathlib import Path

from fuotacast import cli

ROOT = Path(__file__).resolve().parents[1]


def main() -> int:
    args = sys.argv[1:] or ["--config", str(ROOT / "configs" / "baseline.yaml")]
    return cli.main(["lifetime", *args])


if __name__ == "__main__":
    raise SystemExit(main())
