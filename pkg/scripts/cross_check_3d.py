"""Spherical data on the ball: 3-D flattened-coordinate run against the radial solver."""

from _common import parser, save
from nullwave.experiments import cross_check_3d
from nullwave.flat3d import FlatGrid

if __name__ == "__main__":
    p = parser(__doc__)
    p.add_argument("--cells", type=int, nargs=3, default=[64, 32, 64], metavar=("RHO", "THETA", "PHI"))
    p.add_argument("--t-final", type=float, default=1.5)
    args = p.parse_args()
    cc = cross_check_3d(grid=FlatGrid(*args.cells, 5.0), t_final=args.t_final)
    save(args.out, "cross_check_3d",
         {"relative_l2": cc.relative_l2, "min_jacobian_det": cc.min_jacobian_det,
          "energy_drift": cc.energy_drift},
         [{"rho": r, "u_3d": a, "u_radial": b} for r, a, b in zip(cc.rho, cc.average, cc.reference)])
