#!/usr/bin/env python3
"""Regenerate every figure preset (seeds, arcs, atlas, rasters, meshes) into one directory."""
import argparse
import sys
import time

from blaschke_p2.cli import PRESETS, main


def run(out: str, names: list[str], width: int, subdivision: int) -> int:
    status = 0
    for name in names:
        t0 = time.perf_counter()
        rc = main(["figure", name, "--out", out, "--width", str(width), "--height", str(width),
                   "--subdivision", str(subdivision)])
        print(f"{name}: exit {rc} in {time.perf_counter() - t0:.1f}s")
        status = status or rc
    return status


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="figures")
    ap.add_argument("--width", type=int, default=600)
    ap.add_argument("--subdivision", type=int, default=5)
    ap.add_argument("presets", nargs="*", default=sorted(PRESETS))
    a = ap.parse_args()
    sys.exit(run(a.out, a.presets, a.width, a.subdivision))
