#!/usr/bin/env python3
"""Closed-form SVR reference values for the morphology tests (stdlib only).

Scenes:
  flat_face   X on a large planar face, ball radius R: S = pi R^2, V = 2/3 pi R^3
  enclosing   ball of radius R > a centred on a sphere of radius a: S = 4 pi a^2, V = 4/3 pi a^3
  cap         X on a sphere of radius a, ball radius R < 2a:
              S = pi R^2 (cap of height R^2 / 2a), V = lens volume of two balls at distance a
"""
import json
import math
import sys
from pathlib import Path


def lens_volume(r1, r2, d):
    return math.pi * (r1 + r2 - d) ** 2 * (d * d + 2 * d * r2 - 3 * r2 * r2 + 2 * d * r1 + 6 * r1 * r2 - 3 * r1 * r1) / (12 * d)


def lens_volume_numeric(a, r, n=200000):
    # Slices along the axis through both centres; ball a at 0, ball r at distance a.
    lo, hi = max(-a, a - r), min(a, a + r)
    h = (hi - lo) / n
    total = 0.0
    for i in range(n):
        x = lo + (i + 0.5) * h
        total += math.pi * min(a * a - x * x, r * r - (x - a) ** 2) * h
    return total


def main(path):
    scenes = {}
    r = 2.0
    scenes["flat_face"] = {"radius": r, "area": math.pi * r * r, "volume": 2 / 3 * math.pi * r ** 3, "svr": 3 / (2 * r)}
    a, r = 3.0, 5.0
    scenes["enclosing"] = {"sphere_radius": a, "radius": r, "area": 4 * math.pi * a * a,
                           "volume": 4 / 3 * math.pi * a ** 3, "svr": 3 / a}
    a, r = 3.0, 0.75
    v = lens_volume(a, r, a)
    assert abs(v - lens_volume_numeric(a, r)) < 1e-6 * v
    scenes["cap"] = {"sphere_radius": a, "radius": r, "area": math.pi * r * r, "volume": v, "svr": math.pi * r * r / v}
    with open(path, "w") as f:
        json.dump(scenes, f, indent=1)
        f.write("\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else Path(__file__).resolve().parents[2] / "tests" / "data" / "svr_oracles.json")
