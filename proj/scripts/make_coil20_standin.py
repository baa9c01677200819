"""Generate a synthetic stand-in for COIL-20: 20 objects x 72 in-plane rotations (5 degree steps).

Each object is a fixed random composition of soft ellipses rendered as a 32x32 grey-scale image,
flattened row-major into 1024 integer pixel values in [0, 255]. The file has no header (features
get generic names f0..f1023) and the object label is the last column. Output is deterministic.
"""
import math
import pathlib

import numpy as np

OUT = pathlib.Path(__file__).resolve().parent.parent / "assets" / "datasets" / "coil20_standin.csv"
SIDE = 32
OBJECTS = 20
POSES = 72


def make_object(rng):
    # a centred body whose size and brightness identify the object in every pose
    r = rng.uniform(3.0, 9.0)
    parts = [dict(cx=0.0, cy=0.0, ax=r, ay=r * rng.uniform(0.8, 1.0), phi=0.0,
                  amp=rng.uniform(0.2, 0.9))]
    for _ in range(rng.integers(2, 5)):
        parts.append(dict(
            cx=rng.uniform(-8, 8), cy=rng.uniform(-8, 8),
            ax=rng.uniform(1.5, 7.0), ay=rng.uniform(1.5, 7.0),
            phi=rng.uniform(0, math.pi), amp=rng.uniform(0.2, 0.6)))
    return parts


def render(parts, theta):
    c = (SIDE - 1) / 2.0
    ys, xs = np.mgrid[0:SIDE, 0:SIDE].astype(float)
    x, y = xs - c, ys - c
    # rotate sample coordinates back into the object frame
    u = math.cos(theta) * x + math.sin(theta) * y
    v = -math.sin(theta) * x + math.cos(theta) * y
    img = np.zeros((SIDE, SIDE))
    for p in parts:
        du, dv = u - p["cx"], v - p["cy"]
        a = math.cos(p["phi"]) * du + math.sin(p["phi"]) * dv
        b = -math.sin(p["phi"]) * du + math.cos(p["phi"]) * dv
        img += p["amp"] * np.exp(-0.5 * ((a / p["ax"]) ** 2 + (b / p["ay"]) ** 2))
    return np.clip(np.rint(np.clip(img, 0.0, 1.0) * 255.0), 0, 255).astype(int)


def main():
    rng = np.random.default_rng(20)
    objects = [make_object(rng) for _ in range(OBJECTS)]
    with OUT.open("w") as f:
        for k, parts in enumerate(objects):
            for pose in range(POSES):
                img = render(parts, math.radians(5.0 * pose))
                f.write(",".join(map(str, img.ravel())) + f",obj{k + 1}\n")
    print(f"wrote {OBJECTS * POSES} rows to {OUT}")


if __name__ == "__main__":
    main()
