#!/usr/bin/env python3
"""Generate the desk-scale dataset and run every stage once.

Writes everything under out/desk_run/ (or the directory named by the first
argument).  This is the quickest way to see the whole tool in motion:

    python scripts/run_desk_pipeline.py out/desk_run
"""

from __future__ import annotations

import sys
import time
from pathlib import Path

from groupcascade.cli import main as cli


def step(args: list[str]) -> None:
    print(f"\n$ groupcascade {' '.join(args)}")
    start = time.time()
    code = cli(args)
    if code != 0:
        sys.exit(f"step failed with exit code {code}")
    print(f"  ({time.time() - start:.1f}s)")


def run(base: Path) -> None:
    raw = base / "raw"
    cleaned = base / "cleaned"
    step(["synth", "--out", str(raw)])
    step(["validate", "--manifest", str(raw / "manifest.json")])
    step(["clean", "--manifest", str(raw / "manifest.json"), "--out", str(cleaned)])
    manifest = str(cleaned / "manifest.json")
    step(["features", "--manifest", manifest, "--level", "group", "--at", "+1mo",
          "--out", str(base / "group_features.csv")])
    step(["curves", "--manifest", manifest, "--which", "lifespan",
          "--out", str(base / "curves")])
    step(["curves", "--manifest", manifest, "--which", "latency",
          "--out", str(base / "curves")])
    step(["curves", "--manifest", manifest, "--which", "adoption",
          "--t1", str(10 * 86400), "--out", str(base / "curves")])
    step(["train-eval", "--manifest", manifest, "--task", "separability", "--ablate",
          "--out", str(base / "separability")])
    step(["train-eval", "--manifest", manifest, "--task", "early",
          "--out", str(base / "early")])
    step(["train-eval", "--manifest", manifest, "--task", "inviter",
          "--out", str(base / "inviter")])
    print(f"\nall stages done; outputs under {base}")


if __name__ == "__main__":
    run(Path(sys.argv[1]) if len(sys.argv) > 1 else Path("out/desk_run"))
