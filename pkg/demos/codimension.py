"""A great circle of S^2 lies in a smaller sphere; a latitude circle does not.

    python demos/codimension.py
"""

from isoprod import Grid, ProductSpace, make_slice, reduce_target, reduction_test, thm44_check
from isoprod.nodes import Circle, LatitudeCircle


def main():
    sp = ProductSpace([(2, 1.0), (1, 1.0)])
    for label, inner in (("great circle", Circle(1.0, n=2)), ("latitude circle", LatitudeCircle(1.0, 1.0))):
        spec = make_slice(sp, 1, [[1.0, 0.0]], inner)
        grid = Grid.inside(spec.domain, [24])
        res = reduction_test(spec, 1, grid)
        thm = thm44_check(spec, 1, grid)
        print(f"{label}: reducible={res.reducible} nbar={res.nbar} "
              f"conditions={thm.conditions_hold} conclusion={thm.conclusion_holds}")
        print("  " + res.certificate.summary().replace("\n", "\n  "))
        if res.nbar:
            small = reduce_target(spec, 1, res)
            print(f"  now immersed in {small.space!r}")


if __name__ == "__main__":
    main()
