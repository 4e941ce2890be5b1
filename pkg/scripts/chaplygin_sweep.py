"""Small-data Chaplygin flow past the ball: envelope scaling over epsilon."""

from _common import parser, save
from nullwave.experiments import chaplygin_sweep

if __name__ == "__main__":
    p = parser(__doc__)
    p.add_argument("--epsilons", type=float, nargs="+", default=[0.02, 0.01, 0.005])
    p.add_argument("--t-final", type=float, default=100.0)
    p.add_argument("--dr", type=float, default=0.01)
    args = p.parse_args()
    sw = chaplygin_sweep(args.epsilons, t_final=args.t_final, dr=args.dr)
    rows = [{"epsilon": e, "sup_envelope_D": d, "rho_min": r, "status": s}
            for e, d, r, s in zip(sw.epsilons, sw.sup_envelope, sw.rho_min, sw.statuses)]
    save(args.out, "chaplygin_sweep", {"slope": sw.slope, "runs": rows}, rows)
