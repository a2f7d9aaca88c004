#!/usr/bin/env python3
"""Generates data/maps/loop_town.txt and data/routes/test_routes.txt.

Geometry: a single-lane one-way loop (counterclockwise) around a 200 x 120 m
rectangle with 12 m corner arcs, plus a pair of directed chords between the
bottom and top straights that create two T-junctions. 13 nodes, all usable as
spawn points.
"""
import math
import os

R = 12.0          # ring corner radius
RC = 10.0         # chord junction radius
ARC_STEPS = 16    # polyline segments per 90 degrees of arc


def arc(cx, cy, r, a0, a1, steps=None):
    """Sampled CCW arc from angle a0 to a1 (radians), endpoints included."""
    if steps is None:
        steps = max(2, int(round(ARC_STEPS * abs(a1 - a0) / (math.pi / 2))))
    return [(cx + r * math.cos(a0 + (a1 - a0) * i / steps),
             cy + r * math.sin(a0 + (a1 - a0) * i / steps)) for i in range(steps + 1)]


def seg(points, *more):
    out = list(points)
    for chunk in more:
        out.extend(chunk[1:] if out and chunk and out[-1] == chunk[0] else chunk)
    return out


def straight(p0, p1):
    return [p0, p1]


deg = math.radians

nodes = {
    "n_sw": arc(12, 12, R, deg(225), deg(225))[0],
    "n_b1": (50.0, 0.0),
    "n_e":  (100.0, 0.0),
    "n_b2": (150.0, 0.0),
    "n_se": arc(188, 12, R, deg(315), deg(315))[0],
    "n_e1": (200.0, 60.0),
    "n_ne": arc(188, 108, R, deg(45), deg(45))[0],
    "n_t2": (150.0, 120.0),
    "n_f":  (100.0, 120.0),
    "n_t1": (50.0, 120.0),
    "n_nw": arc(12, 108, R, deg(135), deg(135))[0],
    "n_w1": (0.0, 60.0),
}

edges = [
    ("n_sw", "n_b1", seg(arc(12, 12, R, deg(225), deg(270)), straight((12, 0), (50, 0)))),
    ("n_b1", "n_e",  straight((50, 0), (100, 0))),
    ("n_e",  "n_b2", straight((100, 0), (150, 0))),
    ("n_b2", "n_se", seg(straight((150, 0), (188, 0)), arc(188, 12, R, deg(270), deg(315)))),
    ("n_se", "n_e1", seg(arc(188, 12, R, deg(315), deg(360)), straight((200, 12), (200, 60)))),
    ("n_e1", "n_ne", seg(straight((200, 60), (200, 108)), arc(188, 108, R, deg(0), deg(45)))),
    ("n_ne", "n_t2", seg(arc(188, 108, R, deg(45), deg(90)), straight((188, 120), (150, 120)))),
    ("n_t2", "n_f",  straight((150, 120), (100, 120))),
    ("n_f",  "n_t1", straight((100, 120), (50, 120))),
    ("n_t1", "n_nw", seg(straight((50, 120), (12, 120)), arc(12, 108, R, deg(90), deg(135)))),
    ("n_nw", "n_w1", seg(arc(12, 108, R, deg(135), deg(180)), straight((0, 108), (0, 60)))),
    ("n_w1", "n_sw", seg(straight((0, 60), (0, 12)), arc(12, 12, R, deg(180), deg(225)))),
    # chords: bottom -> top at x=110, top -> bottom at x=90 (left-turn ramps)
    ("n_e", "n_f", seg(arc(100, 10, RC, deg(270), deg(360)),
                       straight((110, 10), (110, 110)),
                       arc(100, 110, RC, deg(0), deg(90)))),
    ("n_f", "n_e", seg(arc(100, 110, RC, deg(90), deg(180)),
                       straight((90, 110), (90, 10)),
                       arc(100, 10, RC, deg(180), deg(270)))),
]

routes = [
    ("n_b1", "n_b2"),
    ("n_b2", "n_e1"),
    ("n_e1", "n_t2"),
    ("n_t2", "n_t1"),
    ("n_t1", "n_w1"),
    ("n_w1", "n_b1"),
    ("n_e", "n_f"),
    ("n_f", "n_e"),
    ("n_sw", "n_e"),
    ("n_ne", "n_f"),
]


def fmt(v):
    return f"{v:.6f}"


def main():
    root = os.path.join(os.path.dirname(__file__), "..")
    map_path = os.path.join(root, "data", "maps", "loop_town.txt")
    routes_path = os.path.join(root, "data", "routes", "test_routes.txt")
    os.makedirs(os.path.dirname(map_path), exist_ok=True)
    os.makedirs(os.path.dirname(routes_path), exist_ok=True)

    with open(map_path, "w") as f:
        f.write("# loop_town: one-way counterclockwise loop, 200x120 m, two T-junction chords\n")
        f.write("# schema: lane_width W | node ID X Y | edge FROM TO [width W] poly X Y ... | spawn ID...\n")
        f.write("lane_width 3.5\n")
        for name, (x, y) in nodes.items():
            f.write(f"node {name} {fmt(x)} {fmt(y)}\n")
        for frm, to, poly in edges:
            # snap endpoints exactly onto the node coordinates
            poly = [nodes[frm]] + poly[1:-1] + [nodes[to]]
            coords = " ".join(f"{fmt(x)} {fmt(y)}" for x, y in poly)
            f.write(f"edge {frm} {to} poly {coords}\n")
        f.write("spawn " + " ".join(nodes.keys()) + "\n")

    with open(routes_path, "w") as f:
        f.write("# fixed evaluation routes: route START GOAL\n")
        for a, b in routes:
            f.write(f"route {a} {b}\n")

    print(f"wrote {map_path} ({len(nodes)} nodes, {len(edges)} edges)")
    print(f"wrote {routes_path} ({len(routes)} routes)")


if __name__ == "__main__":
    main()
