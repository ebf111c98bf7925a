"""Slow, independent reference implementations used as test oracles.

Nothing here imports the planner or geometry modules: pixel sampling,
sector classification, width measurement and scoring are re-derived with
plain Python loops and string scans.
"""

import math


def centroid(labels, iid):
    su = sv = n = 0
    for v, row in enumerate(labels):
        for u, x in enumerate(row):
            if x == iid:
                su += u
                sv += v
                n += 1
    return su / n, sv / n


def trig(theta):
    c, s = math.cos(theta), math.sin(theta)
    return (0.0 if abs(c) < 1e-12 else c), (0.0 if abs(s) < 1e-12 else s)


def sample_crop(labels, cu, cv, theta, gw, gb):
    """Rows of the aligned crop, each cell looked up one pixel at a time."""
    h, w = len(labels), len(labels[0])
    c, s = trig(theta)
    rows = []
    for r in range(gb):
        row = []
        for col in range(gw):
            dx = col - (gw - 1) / 2
            dy = r - (gb - 1) / 2
            x = cu + (dx * c - dy * s)
            y = cv + (dx * s + dy * c)
            xi, yi = math.floor(x + 0.5), math.floor(y + 0.5)
            row.append(labels[yi][xi] if 0 <= xi < w and 0 <= yi < h else 0)
        rows.append(row)
    return rows


def sector_strings(crop, iid):
    return ["".join("T" if x == iid else ("U" if x == 0 else "C") for x in row) for row in crop]


def widths(strings):
    ow, fl, fr = None, None, None
    for s in strings:
        lo, hi = s.find("T"), s.rfind("T")
        if lo < 0:
            continue
        left = s[:lo]
        right = s[hi + 1 :]
        lrun = len(left) - len(left.rstrip("U"))
        rrun = len(right) - len(right.lstrip("U"))
        ow = hi - lo + 1 if ow is None else max(ow, hi - lo + 1)
        fl = lrun if fl is None else min(fl, lrun)
        fr = rrun if fr is None else min(fr, rrun)
    return ow, fl, fr


def scores(strings, confidence):
    gb, gw = len(strings), len(strings[0])
    n_uo = sum(s.count("U") for s in strings)
    oss = 100.0 * n_uo / (gw * gb)
    cw, ch = (gw + 1) // 2, (gb + 1) // 2
    c0, r0 = (gw - cw) // 2, (gb - ch) // 2
    n_tc = sum(strings[r][c0 : c0 + cw].count("T") for r in range(r0, r0 + ch))
    cts = 100.0 * n_tc / (cw * ch)
    ss = 100.0 * confidence
    return oss, cts, ss


def brute_force_plan(labels, confidences, gw, gb, D, max_open_px, finger_px):
    """Exhaustive evaluation; returns (best, all) where entries are dicts."""
    labels = [list(map(int, row)) for row in labels]
    ids = sorted({x for row in labels for x in row if x})
    evaluated = []
    best = None
    for iid in ids:
        cu, cv = centroid(labels, iid)
        for k in range(D):
            theta = k * math.pi / D
            strings = sector_strings(sample_crop(labels, cu, cv, theta, gw, gb), iid)
            counts = {ch: sum(s.count(ch) for s in strings) for ch in "TUC"}
            entry = {"instance": iid, "k": k, "counts": counts, "valid": False, "q": None}
            ow, fl, fr = widths(strings)
            if ow is not None and fl > finger_px and fr > finger_px and ow < max_open_px:
                oss, cts, ss = scores(strings, confidences[iid])
                entry.update(valid=True, q=(oss + cts + ss) / 3, oss=oss, cts=cts, ss=ss)
                if best is None or entry["q"] > best["q"]:
                    best = entry
            evaluated.append(entry)
    return best, evaluated


def random_small_scene(rng, max_side=12, max_instances=3):
    """Random overlapping rectangles/blobs on a small canvas; ids need not be consecutive."""
    h = int(rng.integers(3, max_side + 1))
    w = int(rng.integers(3, max_side + 1))
    labels = [[0] * w for _ in range(h)]
    n = int(rng.integers(1, max_instances + 1))
    ids = sorted(int(x) for x in rng.choice(range(1, 6), size=n, replace=False))
    for iid in ids:
        if rng.random() < 0.7:
            r0, c0 = int(rng.integers(0, h)), int(rng.integers(0, w))
            r1 = min(h, r0 + int(rng.integers(1, 5)))
            c1 = min(w, c0 + int(rng.integers(1, 6)))
            for r in range(r0, r1):
                for c in range(c0, c1):
                    labels[r][c] = iid
        else:
            for _ in range(int(rng.integers(1, 8))):
                labels[int(rng.integers(0, h))][int(rng.integers(0, w))] = iid
    present = sorted({x for row in labels for x in row if x})
    confidences = {}
    for iid in present:
        # coarse grid makes exact score ties between instances common
        confidences[iid] = float(rng.choice([0.5, 0.75, 1.0])) if rng.random() < 0.5 else float(rng.random())
    return labels, confidences
