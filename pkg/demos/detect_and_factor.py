"""Recognise how gallery immersions were built, then undo a diagonal embedding.

    python demos/detect_and_factor.py
"""

import numpy as np

from isoprod import catalogue, check_proportionality, detect, factor_through_geodesic, sample_grid
from isoprod.errors import HypothesisError, PreconditionError


def main():
    cat = catalogue()
    for name, entry in cat.items():
        geos = sample_grid(entry.spec, entry.grid().points)
        verdict = detect(entry.spec.space, geos)
        try:
            prop = check_proportionality(entry.spec.space, geos)
            kind = "proportional" if prop.proportional else "not proportional"
        except PreconditionError:
            kind = "has a flat factor"
        print(f"{name:24s} {verdict.describe():40s} {kind}")

    print()
    for name in ("circle_sum", "geodesic_sphere", "small_sphere_sum", "circle_sum_unequal"):
        entry = cat[name]
        try:
            fac = factor_through_geodesic(entry.spec, entry.grid())
        except HypothesisError as exc:
            print(f"{name}: no factorisation ({exc})")
            continue
        w = ", ".join(f"{a:.4f}" for a in fac.weights)
        print(f"{name}: model curvature {fac.model_curvature:g}, weights ({w}), first normal rank {fac.nbar}, "
              f"residual {fac.residual:.1e}, drift {fac.drift:.1e}")
        radius = np.sqrt(np.sum(fac.fbar ** 2, axis=1))
        print(f"    model points at distance {radius.min():.12f} .. {radius.max():.12f} from the origin")


if __name__ == "__main__":
    main()
