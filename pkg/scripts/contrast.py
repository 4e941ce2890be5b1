"""Amplification of sup|du| for a null and a non-null quadratic term, same data."""

from dataclasses import asdict

from _common import parser, save
from nullwave.experiments import compare_null_vs_nonnull

if __name__ == "__main__":
    p = parser(__doc__)
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--t-final", type=float, default=100.0)
    p.add_argument("--dr", type=float, default=0.01)
    args = p.parse_args()
    rep = compare_null_vs_nonnull(args.epsilon, args.t_final, dr=args.dr)
    save(args.out, "contrast", dict(asdict(rep), ratio=rep.ratio))
