#!/usr/bin/env python3
"""Sweep r for the two-zero quotient and tabulate how Gamma and the domain count change.

Below 1/sqrt(3) Gamma splits into three closed curves; at the threshold the
two circle crossings appear; between the threshold and 1 there are four.
"""
import argparse
import csv
import math
import sys

import numpy as np

from blaschke_p2.atlas import assemble_domains
from blaschke_p2.continuation import trace_gamma
from blaschke_p2.core import BlaschkeSpec, Family, Sign, seed_geometry


def sweep(rs, n: int, alpha: float, domains: bool):
    for r in rs:
        spec = BlaschkeSpec.polar(Family.TWO_ZERO, n, float(r), alpha, Sign.MINUS)
        g = trace_gamma(spec)
        gamma = seed_geometry(spec).gamma
        row = {"r": f"{r:.6g}", "gamma": "" if gamma is None else f"{gamma:.9f}",
               "components": len(g.components), "crossings": len(g.self_intersections)}
        if domains:
            atlas = assemble_domains(spec, gamma=g)
            row["domains"] = len(atlas.domains)
            row["branch_points"] = atlas.branch_point_count()
        yield row


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=3)
    ap.add_argument("--alpha", type=float, default=math.pi / 3)
    ap.add_argument("--r-min", type=float, default=0.3)
    ap.add_argument("--r-max", type=float, default=0.95)
    ap.add_argument("--steps", type=int, default=14)
    ap.add_argument("--domains", action="store_true", help="also assemble the atlas (slower)")
    a = ap.parse_args()
    rs = sorted(set(np.linspace(a.r_min, a.r_max, a.steps)) | {1 / math.sqrt(3)})
    rows = list(sweep(rs, a.n, a.alpha, a.domains))
    w = csv.DictWriter(sys.stdout, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
