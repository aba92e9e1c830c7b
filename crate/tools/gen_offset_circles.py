#!/usr/bin/env python3
"""Generate the offset-circles triangulation shipped in crates/core/assets.

Domain: unit disc minus the disc of radius 0.1 centred at (0.5, 0).
Boundary tags: 1 = outer circle, 2 = inner circle.

Points are placed on graded rings around the hole (spacing growing linearly
with the distance from it) and on a hexagonal lattice elsewhere, then
Delaunay-triangulated; triangles inside the hole are discarded. A few sweeps
of Laplacian smoothing (with re-triangulation) even out the transition.

Usage: gen_offset_circles.py OUT.msh --outer 100 --inner 80
Writes OUT.msh and OUT.params.json next to it.
"""

import argparse
import json
import math

import numpy as np
from scipy.spatial import Delaunay

OUTER_R = 1.0
INNER_R = 0.1
INNER_C = np.array([0.5, 0.0])
GRADING = 0.25
SMOOTHING_SWEEPS = 5


def circle(n, r, c):
    a = 2.0 * math.pi * np.arange(n) / n
    return np.column_stack([c[0] + r * np.cos(a), c[1] + r * np.sin(a)])


def interior_points(h_in, h_out):
    def size(r):
        return min(h_out, h_in + GRADING * (r - INNER_R))

    pts = []
    r = INNER_R + size(INNER_R)
    while size(r) < h_out:
        h = size(r)
        n = max(8, int(round(2.0 * math.pi * r / h)))
        pts.append(circle(n, r, INNER_C) + 0.0)
        r += h
    ring_edge = r - 0.5 * size(r)
    rings = np.vstack(pts) if pts else np.zeros((0, 2))

    dy = h_out * math.sqrt(3.0) / 2.0
    lattice = []
    for j, y in enumerate(np.arange(-OUTER_R, OUTER_R + dy, dy)):
        off = 0.5 * h_out if j % 2 else 0.0
        for x in np.arange(-OUTER_R + off, OUTER_R + h_out, h_out):
            lattice.append((x, y))
    lattice = np.array(lattice)
    d_hole = np.linalg.norm(lattice - INNER_C, axis=1)
    lattice = lattice[d_hole > ring_edge + 0.5 * h_out]

    pts = np.vstack([rings, lattice])
    d_out = OUTER_R - np.linalg.norm(pts, axis=1)
    local = np.array([min(h_out, h_in + GRADING * max(0.0, np.linalg.norm(p - INNER_C) - INNER_R)) for p in pts])
    return pts[d_out > 0.7 * local]


def triangulate(points):
    tri = Delaunay(points).simplices
    cent = points[tri].mean(axis=1)
    keep = np.linalg.norm(cent - INNER_C, axis=1) > INNER_R
    keep &= np.linalg.norm(cent, axis=1) < OUTER_R
    return tri[keep]


def smooth(points, n_fixed):
    for _ in range(SMOOTHING_SWEEPS):
        tri = triangulate(points)
        acc = np.zeros_like(points)
        cnt = np.zeros(len(points))
        for a, b in ((0, 1), (1, 2), (2, 0)):
            np.add.at(acc, tri[:, a], points[tri[:, b]])
            np.add.at(acc, tri[:, b], points[tri[:, a]])
            np.add.at(cnt, tri[:, a], 1)
            np.add.at(cnt, tri[:, b], 1)
        moved = acc[n_fixed:] / np.maximum(cnt[n_fixed:], 1)[:, None]
        points[n_fixed:] = 0.5 * points[n_fixed:] + 0.5 * moved
    return points


def orient(points, tri):
    p = points[tri]
    det = (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1]) - (p[:, 1, 1] - p[:, 0, 1]) * (p[:, 2, 0] - p[:, 0, 0])
    tri = tri.copy()
    flip = det < 0
    tri[flip] = tri[flip][:, [0, 2, 1]]
    return tri


def write_msh(path, points, tri, segments):
    with open(path, "w", newline="\n") as f:
        f.write("$MeshFormat\n2.2 0 8\n$EndMeshFormat\n")
        f.write(f"$Nodes\n{len(points)}\n")
        for i, (x, y) in enumerate(points, start=1):
            f.write(f"{i} {x:.12f} {y:.12f} 0\n")
        f.write("$EndNodes\n")
        f.write(f"$Elements\n{len(segments) + len(tri)}\n")
        eid = 1
        for a, b, tag in segments:
            f.write(f"{eid} 1 2 {tag} {tag} {a + 1} {b + 1}\n")
            eid += 1
        for a, b, c in tri:
            f.write(f"{eid} 2 2 0 0 {a + 1} {b + 1} {c + 1}\n")
            eid += 1
        f.write("$EndElements\n")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("out")
    ap.add_argument("--outer", type=int, default=100)
    ap.add_argument("--inner", type=int, default=80)
    args = ap.parse_args()

    h_out = 2.0 * math.pi * OUTER_R / args.outer
    h_in = 2.0 * math.pi * INNER_R / args.inner
    outer = circle(args.outer, OUTER_R, np.zeros(2))
    inner = circle(args.inner, INNER_R, INNER_C)
    n_fixed = args.outer + args.inner
    points = np.vstack([outer, inner, interior_points(h_in, h_out)])
    points = smooth(points, n_fixed)
    tri = orient(points, triangulate(points))

    segments = [(i, (i + 1) % args.outer, 1) for i in range(args.outer)]
    segments += [(args.outer + i, args.outer + (i + 1) % args.inner, 2) for i in range(args.inner)]
    write_msh(args.out, points, tri, segments)

    params = {
        "outer_radius": OUTER_R,
        "inner_radius": INNER_R,
        "inner_center": INNER_C.tolist(),
        "outer_points": args.outer,
        "inner_points": args.inner,
        "grading": GRADING,
        "smoothing_sweeps": SMOOTHING_SWEEPS,
        "vertices": int(len(points)),
        "triangles": int(len(tri)),
        "tags": {"1": "outer circle", "2": "inner circle"},
    }
    sidecar = args.out.rsplit(".", 1)[0] + ".params.json"
    with open(sidecar, "w") as f:
        json.dump(params, f, indent=2)
        f.write("\n")
    print(f"{args.out}: {len(points)} vertices, {len(tri)} triangles")


if __name__ == "__main__":
    main()
