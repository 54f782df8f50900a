"""Worst residual of every identity group over the gallery.

    python demos/identities.py
"""

import re
import time

from isoprod import catalogue, identity_suite

GROUPS = [("pointwise", r"eq[456]_|eig"), ("derivatives", r"eq[789]_"), ("gauss", r"eq10"),
          ("codazzi", r"eq11"), ("ricci", r"eq12"), ("lift", r"eq1[34]_|lemma|omega")]


def main():
    print(f"{'spec':24s} {'pts':>4s} " + " ".join(f"{g:>11s}" for g, _ in GROUPS) + "  ok")
    t0 = time.perf_counter()
    for name, entry in catalogue().items():
        grid = entry.grid()
        rep = identity_suite(entry.spec, grid.points)
        cols = []
        for _, pat in GROUPS:
            vals = [rep[k].residual for k in rep if re.match(pat, k) and not rep[k].vacuous]
            cols.append(f"{max(vals):11.1e}" if vals else f"{'-':>11s}")
        print(f"{name:24s} {grid.size:4d} " + " ".join(cols) + f"  {rep.passed}")
    print(f"total {time.perf_counter() - t0:.1f}s")


if __name__ == "__main__":
    main()
