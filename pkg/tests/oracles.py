"""Slow, obviously-correct reference implementations used as test oracles.

Nothing here imports the code under test beyond plain data types, so a bug in
the library cannot leak into its own oracle.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from collections import deque
from fractions import Fraction
from itertools import product

N4 = ((1, 0), (-1, 0), (0, 1), (0, -1))
N8 = N4 + ((1, 1), (1, -1), (-1, 1), (-1, -1))


def flood_components(pixels, connectivity=8):
    """Components of a pixel set {(x, y)}, sorted by (-size, ymin, xmin, first raster pixel)."""
    nbrs = N8 if connectivity == 8 else N4
    todo = set(pixels)
    comps = []
    # seed in raster order so that each component's first raster pixel is its seed
    for seed in sorted(todo, key=lambda p: (p[1], p[0])):
        if seed not in todo:
            continue
        todo.discard(seed)
        comp = {seed}
        queue = deque([seed])
        while queue:
            x, y = queue.popleft()
            for dx, dy in nbrs:
                q = (x + dx, y + dy)
                if q in todo:
                    todo.discard(q)
                    comp.add(q)
                    queue.append(q)
        comps.append(comp)

    def key(c):
        first = min(c, key=lambda p: (p[1], p[0]))
        return (-len(c), min(p[1] for p in c), min(p[0] for p in c), first[1], first[0])

    return sorted(comps, key=key)


def class_pixels(data, cls):
    h, w = len(data), len(data[0])
    return {(x, y) for y in range(h) for x in range(w) if data[y][x] == cls}


def edge_pixels(data, cls):
    """Pixels of ``cls`` with a 4-neighbour of another class or off the image."""
    h, w = len(data), len(data[0])
    out = set()
    for x, y in class_pixels(data, cls):
        for dx, dy in N4:
            u, v = x + dx, y + dy
            if not (0 <= u < w and 0 <= v < h) or data[v][u] != cls:
                out.add((x, y))
                break
    return out


def _on_segment(p, a, b):
    cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
    if cross != 0:
        return False
    return min(a[0], b[0]) <= p[0] <= max(a[0], b[0]) and min(a[1], b[1]) <= p[1] <= max(a[1], b[1])


def in_polygon(poly, p):
    """Exact even-odd test with the boundary counted as inside, in rational arithmetic."""
    poly = [(Fraction(x), Fraction(y)) for x, y in poly]
    p = (Fraction(p[0]), Fraction(p[1]))
    n = len(poly)
    for i in range(n):
        if _on_segment(p, poly[i], poly[(i + 1) % n]):
            return True
    inside = False
    for i in range(n):
        (x1, y1), (x2, y2) = poly[i], poly[(i + 1) % n]
        if (y1 > p[1]) != (y2 > p[1]):
            x_cross = x1 + (p[1] - y1) * (x2 - x1) / (y2 - y1)
            if p[0] < x_cross:
                inside = not inside
    return inside


def polygon_pixels(poly, w, h):
    """Integer points inside a polygon (boundary included) by exact scanline crossings."""
    poly = [(Fraction(x), Fraction(y)) for x, y in poly]
    n = len(poly)
    edges = [(poly[i], poly[(i + 1) % n]) for i in range(n)]
    out = set()
    y0 = max(math.floor(min(p[1] for p in poly)), 0)
    y1 = min(math.ceil(max(p[1] for p in poly)), h - 1)
    for y in range(y0, y1 + 1):
        xs = []
        for (ax, ay), (bx, by) in edges:
            if (ay > y) != (by > y):
                xs.append(ax + (y - ay) * (bx - ax) / (by - ay))
        xs.sort()
        if xs:
            for x in range(max(math.ceil(xs[0]), 0), min(math.floor(xs[-1]), w - 1) + 1):
                # odd number of crossings strictly right of x
                if (len(xs) - bisect_right(xs, x)) % 2 == 1:
                    out.add((x, y))
        for (ax, ay), (bx, by) in edges:
            if ay == by == y:
                lo, hi = sorted((ax, bx))
                out.update((x, y) for x in range(max(math.ceil(lo), 0), min(math.floor(hi), w - 1) + 1))
            elif min(ay, by) <= y <= max(ay, by) and ay != by:
                x = ax + (y - ay) * (bx - ax) / (by - ay)
                if x.denominator == 1 and 0 <= x < w:
                    out.add((int(x), y))
    return out


def nearest_pair_brute(set_a, set_b):
    best = None
    for a, b in product(set_a, set_b):
        d2 = (a[0] - b[0]) ** 2 + (a[1] - b[1]) ** 2
        key = (d2, a[1], a[0], b[1], b[0])
        if best is None or key < best[0]:
            best = (key, a, b)
    return best[1], best[2], best[0][0] ** 0.5


def recount_evidence(data, quad_pts, ids, min_cluster=5, connectivity=8, t_liver=100, t_cp=100):
    """Pixel-by-pixel recount of every rule input inside a quad."""
    inside = polygon_pixels(quad_pts, len(data[0]), len(data))

    def clipped(name):
        return class_pixels(data, ids[name]) & inside

    def largest(name):
        comps = flood_components(clipped(name), connectivity)
        return len(comps[0]) if comps else 0

    def count(name):
        return sum(1 for c in flood_components(clipped(name), connectivity) if len(c) >= min_cluster)

    ev = {
        "fat_in_roi": len(clipped("fat")),
        "liver_largest_in_roi": largest("liver"),
        "cystic_plate_largest_in_roi": largest("cystic_plate"),
        "duct_clusters_in_roi": count("cystic_duct"),
        "artery_clusters_in_roi": count("cystic_artery"),
    }
    c1 = ev["fat_in_roi"] == 0 and ev["liver_largest_in_roi"] > t_liver
    c2 = ev["cystic_plate_largest_in_roi"] > t_cp
    c3 = ev["duct_clusters_in_roi"] == 1 and ev["artery_clusters_in_roi"] == 1
    return ev, {"c1": c1, "c2": c2, "c3": c3, "cvs": c1 and c2 and c3}


def correlate_naive(img, kernel):
    """3x3 cross-correlation with replicate padding, by explicit loops."""
    h, w = len(img), len(img[0])
    out = [[0.0] * w for _ in range(h)]
    for y in range(h):
        for x in range(w):
            s = 0.0
            for j in range(3):
                for i in range(3):
                    yy = min(max(y + j - 1, 0), h - 1)
                    xx = min(max(x + i - 1, 0), w - 1)
                    s += kernel[j][i] * img[yy][xx]
            out[y][x] = s
    return out
