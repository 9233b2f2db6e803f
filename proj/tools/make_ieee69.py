#!/usr/bin/env python3
"""Regenerate data/ieee69.json from the canonical Baran & Wu 69-bus table.

Branch impedances are given in ohms and loads in kW, converted to per-unit on
a 12.66 kV / 10 MVA base. Reactive demand uses a constant 0.95 lagging power
factor. Laterals get generous ratings (peak sub-tree load times a headroom
factor plus a fixed allowance for clustered EV and battery power) so that the
first section out of the substation, rated below the uncontrolled evening
peak, is the element that congests.
"""
import json
import math
import sys

BASE_KV = 12.66
BASE_MVA = 10.0
POWER_FACTOR = 0.95
HEADROOM = 3.0
DEVICE_ALLOWANCE_KW = 200.0
SUBSTATION_KW = 3000.0

# bus, peak active load (kW)
BUSES = [
    (1, 0),
    (2, 0),
    (3, 0),
    (4, 0),
    (5, 0),
    (6, 2.6),
    (7, 40.4),
    (8, 75),
    (9, 30),
    (10, 28),
    (11, 145),
    (12, 145),
    (13, 8),
    (14, 8),
    (15, 0),
    (16, 45.5),
    (17, 60),
    (18, 60),
    (19, 0),
    (20, 1),
    (21, 114),
    (22, 5.3),
    (23, 0),
    (24, 28),
    (25, 0),
    (26, 14),
    (27, 14),
    (28, 26),
    (29, 26),
    (30, 0),
    (31, 0),
    (32, 0),
    (33, 14),
    (34, 19.5),
    (35, 6),
    (36, 26),
    (37, 26),
    (38, 0),
    (39, 24),
    (40, 24),
    (41, 1.2),
    (42, 0),
    (43, 6),
    (44, 0),
    (45, 39.2),
    (46, 39.2),
    (47, 0),
    (48, 79),
    (49, 384.7),
    (50, 384.7),
    (51, 40.5),
    (52, 3.6),
    (53, 4.3),
    (54, 26.4),
    (55, 24),
    (56, 0),
    (57, 0),
    (58, 0),
    (59, 100),
    (60, 0),
    (61, 1244),
    (62, 32),
    (63, 0),
    (64, 227),
    (65, 59),
    (66, 18),
    (67, 18),
    (68, 28),
    (69, 28)
]

# from, to, r (ohm), x (ohm)
LINES = [
    (1, 2, 0.0005, 0.0012),
    (2, 3, 0.0005, 0.0012),
    (3, 4, 0.0015, 0.0036),
    (4, 5, 0.0251, 0.0294),
    (5, 6, 0.366, 0.1864),
    (6, 7, 0.381, 0.1941),
    (7, 8, 0.0922, 0.047),
    (8, 9, 0.0493, 0.0251),
    (9, 10, 0.819, 0.2707),
    (10, 11, 0.1872, 0.0619),
    (11, 12, 0.7114, 0.2351),
    (12, 13, 1.03, 0.34),
    (13, 14, 1.044, 0.34),
    (14, 15, 1.058, 0.3496),
    (15, 16, 0.1966, 0.065),
    (16, 17, 0.3744, 0.1238),
    (17, 18, 0.0047, 0.0016),
    (18, 19, 0.3276, 0.1083),
    (19, 20, 0.2106, 0.069),
    (20, 21, 0.3416, 0.1129),
    (21, 22, 0.014, 0.0046),
    (22, 23, 0.1591, 0.0526),
    (23, 24, 0.3463, 0.1145),
    (24, 25, 0.7488, 0.2475),
    (25, 26, 0.3089, 0.1021),
    (26, 27, 0.1732, 0.0572),
    (3, 28, 0.0044, 0.0108),
    (28, 29, 0.064, 0.1565),
    (29, 30, 0.3978, 0.1315),
    (30, 31, 0.0702, 0.0232),
    (31, 32, 0.351, 0.116),
    (32, 33, 0.839, 0.2816),
    (33, 34, 1.708, 0.5646),
    (34, 35, 1.474, 0.4873),
    (3, 36, 0.0044, 0.0108),
    (36, 37, 0.064, 0.1565),
    (37, 38, 0.1053, 0.123),
    (38, 39, 0.0304, 0.0355),
    (39, 40, 0.0018, 0.0021),
    (40, 41, 0.7283, 0.8509),
    (41, 42, 0.31, 0.3623),
    (42, 43, 0.041, 0.0478),
    (43, 44, 0.0092, 0.0116),
    (44, 45, 0.1089, 0.1373),
    (45, 46, 0.0009, 0.0012),
    (4, 47, 0.0034, 0.0084),
    (47, 48, 0.0851, 0.2083),
    (48, 49, 0.2898, 0.7091),
    (49, 50, 0.0822, 0.2011),
    (8, 51, 0.0928, 0.0473),
    (51, 52, 0.3319, 0.114),
    (9, 53, 0.174, 0.0886),
    (53, 54, 0.203, 0.1034),
    (54, 55, 0.2842, 0.1447),
    (55, 56, 0.2813, 0.1433),
    (56, 57, 1.59, 0.5337),
    (57, 58, 0.7837, 0.263),
    (58, 59, 0.3042, 0.1006),
    (59, 60, 0.3861, 0.1172),
    (60, 61, 0.5075, 0.2585),
    (61, 62, 0.0974, 0.0496),
    (62, 63, 0.145, 0.0738),
    (63, 64, 0.7105, 0.3619),
    (64, 65, 1.041, 0.5302),
    (11, 66, 0.2012, 0.0611),
    (66, 67, 0.0047, 0.0014),
    (12, 68, 0.7394, 0.2444),
    (68, 69, 0.0047, 0.0016)
]

LOAD_SHAPE = [0.55, 0.50, 0.47, 0.45, 0.46, 0.50, 0.60, 0.70, 0.75, 0.76, 0.77, 0.78,
              0.78, 0.77, 0.76, 0.78, 0.82, 0.88, 0.95, 1.00, 0.97, 0.88, 0.75, 0.63]


def main(path):
    zbase = BASE_KV ** 2 / BASE_MVA
    tan_phi = math.tan(math.acos(POWER_FACTOR))
    children = {}
    for f, t, _, _ in LINES:
        children.setdefault(f, []).append(t)
    load = {b: p for b, p in BUSES}

    def subtree(b):
        return load[b] + sum(subtree(c) for c in children.get(b, []))

    capacity = {}
    for f, t, _, _ in LINES:
        capacity[(f, t)] = round(HEADROOM * subtree(t) + DEVICE_ALLOWANCE_KW, 1)
    capacity[(1, 2)] = SUBSTATION_KW

    doc = {
        "name": "ieee69-modified",
        "base_kv": BASE_KV,
        "base_mva": BASE_MVA,
        "root": 1,
        "vmin_pu": 0.90 ** 2,
        "vmax_pu": 1.05 ** 2,
        "load_shape": LOAD_SHAPE,
        "buses": [{"id": b, "p_kw": p, "q_kvar": round(p * tan_phi, 4)} for b, p in BUSES],
        "lines": [{"from": f, "to": t, "r": round(r / zbase, 10), "x": round(x / zbase, 10),
                   "capacity_kw": capacity[(f, t)]} for f, t, r, x in LINES],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "data/ieee69.json")
