"""Rebuild immersions from their intrinsic data and compare with the originals.

    python demos/reconstruct.py
"""

import time

import numpy as np

from isoprod import catalogue, compatibility_check, extract_data, match_isometry, reconstruct


def main():
    for name, entry in catalogue().items():
        t0 = time.perf_counter()
        counts = (200,) if entry.spec.m == 1 else (32, 32)
        data = extract_data(entry.spec, entry.grid(counts))
        res = reconstruct(data)
        match = match_isometry(data.points, data.frames, res.points, res.frames, data.space)
        path = res.report["path_independence"].residual if "path_independence" in res.report else 0.0
        print(f"{name:24s} error {match.error:8.1e}  holonomy {res.holonomy:8.1e}  path {path:8.1e}  "
              f"{time.perf_counter() - t0:4.1f}s")

    entry = catalogue()["small_sphere_sum"]
    data = extract_data(entry.spec, entry.grid((32, 32)))
    print("\ncorrupted copies of the small sphere sum data:")
    for label, bad in (("alpha zeroed", data.replace(alpha=np.zeros_like(data.alpha))),
                       ("R scaled by 1.1", data.replace(R=1.1 * data.R))):
        print(f"  {label:16s} fails {compatibility_check(bad).failures()}")


if __name__ == "__main__":
    main()
