#!/usr/bin/env python3
"""Bench every config in ``configs/`` (or the ones named) and summarise plateaus.

Writes ``<out>/<config>.csv`` and prints one line per config with the plateau
of its first metric. Diverged seeds are listed, not fatal.

    python3 scripts/run_configs.py --out results
    python3 scripts/run_configs.py configs/wgan_seg_rr.json --epochs 50
"""
import argparse
import sys
import time
from pathlib import Path

from segrr import harness
from segrr.errors import SegrrError

ROOT = Path(__file__).resolve().parent.parent


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("configs", nargs="*", type=Path)
    ap.add_argument("--out", type=Path, default=ROOT / "results")
    ap.add_argument("--epochs", type=int, help="override every config's epoch count")
    args = ap.parse_args(argv)

    paths = args.configs or sorted((ROOT / "configs").glob("*.json"))
    args.out.mkdir(parents=True, exist_ok=True)
    status = 0
    for path in paths:
        t0 = time.perf_counter()
        try:
            cfg = harness.load_config(path).with_overrides(epochs=args.epochs)
            record = harness.run_experiment(cfg)
        except SegrrError as exc:
            print(f"{path.name}: error: {exc}", file=sys.stderr)
            status = 2
            continue
        dt = time.perf_counter() - t0
        if record.nruns == 0:
            print(f"{path.name}: all {len(cfg.seeds)} seeds diverged ({dt:.1f}s)")
            continue
        out = harness.emit_csv(record, args.out / f"{path.stem}.csv")
        metric = record.metrics[0]
        try:
            summary = f"plateau({metric}) = {harness.plateau_of(record, metric):.4e}"
        except SegrrError:
            summary = f"final {metric} = {record.mean[metric][-1]:.4e}"
        diverged = record.metadata["diverged"]
        extra = f", diverged seeds {sorted(diverged)}" if diverged else ""
        print(f"{path.name}: {summary}, {record.nruns} runs{extra} -> {out} ({dt:.1f}s)")
    return status


if __name__ == "__main__":
    sys.exit(main())
