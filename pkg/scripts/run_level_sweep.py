#!/usr/bin/env python3
"""Level-orthogonality experiment: fixed weight, growing level norm.

Writes level_sweep.csv next to this script unless --out is given.
"""

import argparse
import pathlib
import sys

from hpseries.experiments import sweep_level, sweep_to_csv
from hpseries.fourier import SamplingDomain
from hpseries.hpoincare import TruncationPolicy, Weight
from hpseries.qfield import (
    ideal_from_gen,
    make_field,
    trace_one_totally_positive,
)


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--d", type=int, default=5)
    ap.add_argument("--k", default="4,4")
    ap.add_argument("--levels", default="2,3,4,7")
    ap.add_argument("--grid", type=int, default=32)
    ap.add_argument("--height", type=float, default=12.0)
    ap.add_argument("--cutoff", type=float, default=1e-9)
    ap.add_argument("--out", default=None)
    args = ap.parse_args()

    field = make_field(args.d)
    trace_one = trace_one_totally_positive(field, 8)
    if len(trace_one) < 2:
        print("field has fewer than two trace-1 totally positive duals",
              file=sys.stderr)
        return 2
    nu, mu = trace_one[-1], trace_one[0]
    k1, k2 = (int(t) for t in args.k.split(","))
    levels = [ideal_from_gen(field.element(int(g), 0))
              for g in args.levels.split(",")]
    domain = SamplingDomain(field=field, y1=1.1, y2=1.0, grid_n=args.grid)
    policy = TruncationPolicy(gamma_height_max=args.height,
                              term_cutoff=args.cutoff)
    report = sweep_level(field, nu, mu, Weight(k1, k2), levels, domain,
                         policy)
    csv = sweep_to_csv(report, [f"d={args.d}", f"k={args.k}",
                                f"levels={args.levels}", f"grid={args.grid}",
                                f"height={args.height}",
                                f"cutoff={args.cutoff}"])
    out = pathlib.Path(args.out) if args.out else \
        pathlib.Path(__file__).parent / "level_sweep.csv"
    out.write_text(csv)
    print(csv)
    print(f"wrote {out}")
    nu_ok, mu_ok = report.endpoint_improvement()
    return 0 if (nu_ok and mu_ok) else 1


if __name__ == "__main__":
    sys.exit(main())
