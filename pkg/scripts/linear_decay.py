"""Local-energy decay rate at two resolutions, plus the KSS ratio at two horizons."""

from _common import parser, save
from nullwave.experiments import kss_growth, local_energy_decay

if __name__ == "__main__":
    p = parser(__doc__)
    p.add_argument("--dr", type=float, nargs=2, default=[0.01, 0.005])
    p.add_argument("--t-final", type=float, default=40.0)
    args = p.parse_args()
    rows, fits = [], []
    for dr in args.dr:
        res = local_energy_decay(dr=dr, t_final=args.t_final)
        fits.append({"dr": dr, "rate": res.fit.rate, "r_squared": res.fit.r_squared,
                     "t_start": res.fit.t_start, "t_end": res.fit.t_end})
        rows.extend({"dr": dr, "t": t, "local_energy": v} for t, v in zip(res.times, res.values))
    kss = kss_growth()
    save(args.out, "linear_decay",
         {"fits": fits, "kss": {"times": kss.times, "lhs": kss.lhs, "rhs": kss.rhs, "ratios": kss.ratios}},
         rows, ["dr", "t", "local_energy"])
