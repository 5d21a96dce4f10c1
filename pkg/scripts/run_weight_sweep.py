#!/usr/bin/env python3
"""Weight-orthogonality experiment: coefficients of the series at its own
index and at a second index across a parallel-weight ladder.

Writes weight_sweep.csv next to this script unless --out is given.
"""

import argparse
import pathlib
import sys

from hpseries.experiments import sweep_to_csv, sweep_weight
from hpseries.fourier import SamplingDomain
from hpseries.hpoincare import TruncationPolicy
from hpseries.qfield import (
    ideal_from_gen,
    make_field,
    trace_one_totally_positive,
)


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--d", type=int, default=5)
    ap.add_argument("--ks", default="6,10,14,18")
    ap.add_argument("--level", type=int, default=1)
    ap.add_argument("--grid", type=int, default=32)
    ap.add_argument("--height", type=float, default=12.0)
    ap.add_argument("--cutoff", type=float, default=3e-12)
    ap.add_argument("--out", default=None)
    args = ap.parse_args()

    field = make_field(args.d)
    trace_one = trace_one_totally_positive(field, 8)
    if len(trace_one) < 2:
        print("field has fewer than two trace-1 totally positive duals",
              file=sys.stderr)
        return 2
    nu, mu = trace_one[-1], trace_one[0]
    ks = [int(k) for k in args.ks.split(",")]
    domain = SamplingDomain(field=field, y1=1.1, y2=1.0, grid_n=args.grid)
    policy = TruncationPolicy(gamma_height_max=args.height,
                              term_cutoff=args.cutoff)
    report = sweep_weight(field, nu, mu, ideal_from_gen(
        field.element(args.level, 0)), ks, domain, policy)
    csv = sweep_to_csv(report, [f"d={args.d}", f"ks={args.ks}",
                                f"level={args.level}", f"grid={args.grid}",
                                f"height={args.height}",
                                f"cutoff={args.cutoff}"])
    out = pathlib.Path(args.out) if args.out else \
        pathlib.Path(__file__).parent / "weight_sweep.csv"
    out.write_text(csv)
    print(csv)
    print(f"wrote {out}")
    nu_ok, mu_ok = report.endpoint_improvement()
    return 0 if (nu_ok and mu_ok) else 1


if __name__ == "__main__":
    sys.exit(main())
