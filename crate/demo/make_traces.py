"""Regenerates the demo GPS traces.

trace_sim.csv   five laps of a rounded 80 x 50 m loop at 7 m/s, 10 Hz fixes
trace_field.csv the same drive pushed 5-18 m outward, then parked for 90 s
"""

import math
from pathlib import Path

ORIGIN = (44.6300, 10.9450)
R = 6_371_000.0
HALF_W, HALF_H, CORNER = 40.0, 25.0, 12.0
SPEED = 7.0
LAPS = 5
DT_MS = 100
PARK_MS = 90_000


def to_geo(x, y):
    lat0, lon0 = ORIGIN
    dlat = math.degrees(y / R)
    dlon = math.degrees(x / (R * math.cos(math.radians(lat0))))
    return lat0 + dlat, lon0 + dlon


def loop_point(s):
    """Point at arc length s along the rounded rectangle, counter-clockwise."""
    sx = 2 * (HALF_W - CORNER)
    sy = 2 * (HALF_H - CORNER)
    arc = math.pi * CORNER / 2
    segments = [
        ("line", (HALF_W - CORNER, -HALF_H), (1, 0), sx),
        ("arc", (HALF_W - CORNER, -HALF_H + CORNER), -math.pi / 2, arc),
        ("line", (HALF_W, -HALF_H + CORNER), (0, 1), sy),
        ("arc", (HALF_W - CORNER, HALF_H - CORNER), 0.0, arc),
        ("line", (HALF_W - CORNER, HALF_H), (-1, 0), sx),
        ("arc", (-HALF_W + CORNER, HALF_H - CORNER), math.pi / 2, arc),
        ("line", (-HALF_W, HALF_H - CORNER), (0, -1), sy),
        ("arc", (-HALF_W + CORNER, -HALF_H + CORNER), math.pi, arc),
    ]
    perimeter = sum(seg[3] for seg in segments)
    s %= perimeter
    # first segment starts at the bottom-left end of the bottom edge
    start = (-HALF_W + CORNER, -HALF_H)
    for kind, a, b, length in segments:
        if s <= length:
            if kind == "line":
                return start[0] + b[0] * s, start[1] + b[1] * s
            theta = b + s / CORNER
            return a[0] + CORNER * math.cos(theta), a[1] + CORNER * math.sin(theta)
        s -= length
        if kind == "line":
            start = (start[0] + b[0] * length, start[1] + b[1] * length)
        else:
            theta = b + length / CORNER
            start = (a[0] + CORNER * math.cos(theta), a[1] + CORNER * math.sin(theta))
    return start


def perimeter():
    return 4 * (HALF_W - CORNER) + 4 * (HALF_H - CORNER) + 2 * math.pi * CORNER


def write(path, rows):
    with open(path, "w") as f:
        f.write("t_ms,lat,lon\n")
        for t, (x, y) in rows:
            lat, lon = to_geo(x, y)
            f.write(f"{t},{lat:.8f},{lon:.8f}\n")


def main():
    here = Path(__file__).parent
    duration_ms = int(LAPS * perimeter() / SPEED * 1000) // DT_MS * DT_MS
    times = range(0, duration_ms + 1, DT_MS)
    sim = [(t, loop_point(SPEED * t / 1000)) for t in times]
    write(here / "trace_sim.csv", sim)

    lap_ms = perimeter() / SPEED * 1000
    field = []
    for t, (x, y) in sim:
        r = math.hypot(x, y)
        off = 5.0 + 13.0 * 0.5 * (1 - math.cos(2 * math.pi * t / (0.7 * lap_ms)))
        field.append((t, (x + x / r * off, y + y / r * off)))
    last = field[-1][1]
    for t in range(duration_ms + DT_MS, duration_ms + PARK_MS + 1, DT_MS):
        field.append((t, last))
    write(here / "trace_field.csv", field)


if __name__ == "__main__":
    main()
