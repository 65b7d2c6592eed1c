"""Volterra density solver against the branching closed form, across grid spacings.

Prints the spread of the density ratio on [0.2, 5] with and without Richardson
extrapolation; a first-order scheme halves the plain spread per halving of h.
"""

import argparse

from cmpassage.levy import LevyExponent
from cmpassage.measures import MeasureRepr
from cmpassage.model import ModelSpec
from cmpassage.scale import closed_form_csbp, volterra_density


def spread(vol, cf, lo, hi):
    z = vol.measure.grids[0].centres
    keep = (z >= lo) & (z <= hi)
    r = vol.measure.grids[0].masses[keep] / cf.measure.grids[0].masses[: z.size][keep]
    return r.max() / r.min() - 1.0


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--q", type=float, default=1.0)
    ap.add_argument("--gaussian", type=float, default=2.0, help="sigma^2, so psi = gaussian/2 lam^2")
    ap.add_argument("--spacings", type=float, nargs="+", default=[1e-2, 5e-3, 2e-3, 1e-3, 5e-4])
    args = ap.parse_args()
    model = ModelSpec(
        LevyExponent(gaussian=args.gaussian), gamma=MeasureRepr.lebesgue_measure(), interval_lower=0.0, lower_included=True
    )
    print(f"{'h':>8} {'plain':>10} {'richardson':>11}")
    for h in args.spacings:
        cf = closed_form_csbp(model, args.q, 6.0, h)
        plain = spread(volterra_density(model, args.q, 6.0, h, richardson=False), cf, 0.2, 5.0)
        rich = spread(volterra_density(model, args.q, 6.0, h), cf, 0.2, 5.0)
        print(f"{h:8.1e} {plain:10.3e} {rich:11.3e}")


if __name__ == "__main__":
    main()
