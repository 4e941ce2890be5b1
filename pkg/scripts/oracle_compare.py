"""Forced radial Neumann problem: finite differences against the quadrature oracle."""

from _common import parser, save
from nullwave.experiments import oracle_compare

if __name__ == "__main__":
    p = parser(__doc__)
    p.add_argument("--t", type=float, default=10.0)
    p.add_argument("--dr", type=float, default=1 / 200)
    args = p.parse_args()
    cmp = oracle_compare(t=args.t, dr=args.dr)
    summary = {"t": cmp.t, "relative_l2": cmp.relative_l2, "validated": cmp.validated,
               "residuals": [vars(r) for r in cmp.residuals]}
    save(args.out, "oracle_compare", summary,
         [{"r": r, "fd": a, "oracle": b} for r, a, b in zip(cmp.r, cmp.fd, cmp.oracle)])
