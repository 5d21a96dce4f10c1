#!/usr/bin/env python3
"""Classical double-entry bookkeeping: the explicit Kloosterman/Bessel
formula against direct coset-sum quadrature, plus the tau anchors.

Writes classical_oracles.csv next to this script unless --out is given.
Exit code 1 if any pair disagrees beyond --tol.
"""

import argparse
import pathlib
import sys

from hpseries.classical import (
    ClassicalParams,
    classical_csv,
    classical_poincare_coefficient_by_quadrature,
    delta_coefficients,
    petersson_coefficient,
)


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--mn-max", type=int, default=3)
    ap.add_argument("--ks", default="12,16")
    ap.add_argument("--qs", default="1,2")
    ap.add_argument("--cmax", type=int, default=1000)
    ap.add_argument("--tol", type=float, default=1e-6)
    ap.add_argument("--out", default=None)
    args = ap.parse_args()

    rows = []
    worst = 0.0
    for m in range(1, args.mn_max + 1):
        for n in range(1, args.mn_max + 1):
            for k in (int(t) for t in args.ks.split(",")):
                for q in (int(t) for t in args.qs.split(",")):
                    params = ClassicalParams(m=m, n=n, k=k, q=q)
                    pet = petersson_coefficient(params, args.cmax)
                    quad = classical_poincare_coefficient_by_quadrature(
                        params)
                    worst = max(worst, abs(pet.value - quad))
                    rows.append(dict(m=m, n=n, k=k, q=q, value=pet.value,
                                     tail_bound=pet.tail_bound,
                                     method="petersson"))
                    rows.append(dict(m=m, n=n, k=k, q=q, value=quad,
                                     tail_bound=0.0, method="quadrature"))
    csv = (f"# mn_max={args.mn_max} ks={args.ks} qs={args.qs} "
           f"cmax={args.cmax}\n") + classical_csv(rows)
    out = pathlib.Path(args.out) if args.out else \
        pathlib.Path(__file__).parent / "classical_oracles.csv"
    out.write_text(csv)

    taus = delta_coefficients(3)
    p1 = petersson_coefficient(ClassicalParams(1, 1, 12, 1), args.cmax).value
    p2 = petersson_coefficient(ClassicalParams(1, 2, 12, 1), args.cmax).value
    p3 = petersson_coefficient(ClassicalParams(1, 3, 12, 1), args.cmax).value
    print(f"worst |petersson - quadrature| = {worst:.3e} (tol {args.tol})")
    print(f"tau anchors: p(2)/p(1) = {p2 / p1:.10f} (tau(2) = {taus[1]}),"
          f" p(3)/p(1) = {p3 / p1:.8f} (tau(3) = {taus[2]})")
    print(f"wrote {out}")
    return 0 if worst < args.tol else 1


if __name__ == "__main__":
    sys.exit(main())
