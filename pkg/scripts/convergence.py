"""Manufactured-solution error ladder for the linear radial solver."""

from _common import parser, save
from nullwave.experiments import convergence_study

if __name__ == "__main__":
    p = parser(__doc__)
    p.add_argument("--dr", type=float, nargs="+", default=[1 / 50, 1 / 100, 1 / 200])
    p.add_argument("--t-final", type=float, default=10.0)
    args = p.parse_args()
    conv = convergence_study(args.dr, t_final=args.t_final)
    save(args.out, "convergence", {"drs": conv.drs, "errors": conv.errors, "orders": conv.orders},
         [{"dr": d, "error": e} for d, e in zip(conv.drs, conv.errors)])
