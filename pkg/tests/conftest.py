"""Shared fixtures and independent oracles for the test suite.

The oracles deliberately avoid the library's own geometry paths: visibility
is re-derived with shapely, ray-pair optima with a raw plane intersection,
stripe optima with brute-force grids.
"""

import numpy as np
import pytest
from shapely.geometry import LineString, Point, Polygon

from losplace.environment import Building, Environment
from losplace.geometry import build_frame


# ---------------------------------------------------------------------------
# independent LOS oracle (shapely)
# ---------------------------------------------------------------------------

def _line_pieces(geom):
    if geom.is_empty:
        return []
    if geom.geom_type == "LineString":
        return [geom]
    if geom.geom_type in ("MultiLineString", "GeometryCollection"):
        out = []
        for g in geom.geoms:
            out.extend(_line_pieces(g))
        return out
    return []  # points: zero-length touch


def shapely_los(buildings, a, b, roof_tol=1e-9):
    """Visibility of the open segment a-b against prism buildings."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    d2 = b[:2] - a[:2]
    den = float(d2 @ d2)
    line = LineString([tuple(a[:2]), tuple(b[:2])])
    for bld in buildings:
        poly = Polygon([tuple(v) for v in bld.footprint])
        inter = line.intersection(poly)
        for seg in _line_pieces(inter):
            coords = np.asarray(seg.coords)
            ts = []
            for p in coords:
                if den == 0:
                    ts.append(0.0)
                else:
                    ts.append(float((p - a[:2]) @ d2 / den))
            t0, t1 = min(ts), max(ts)
            t0, t1 = max(t0, 0.0), min(t1, 1.0)
            if t1 - t0 <= 1e-12:
                continue
            z0 = a[2] + t0 * (b[2] - a[2])
            z1 = a[2] + t1 * (b[2] - a[2])
            if min(z0, z1) < bld.height - roof_tol:
                return False
    return True


def point_in_any_footprint(buildings, p):
    pt = Point(float(p[0]), float(p[1]))
    return any(Polygon([tuple(v) for v in b.footprint]).covers(pt) for b in buildings)


# ---------------------------------------------------------------------------
# canned environments
# ---------------------------------------------------------------------------

@pytest.fixture
def empty_env():
    return Environment([], (-400.0, -400.0, 400.0, 400.0), 80.0)


@pytest.fixture
def wall_env():
    # thin wall sitting on the middle perpendicular plane of the 0/100 pair
    wall = Building(np.array([[-30.0, -2.0], [30.0, -2.0], [30.0, 2.0], [-30.0, 2.0]]), 79.0)
    return Environment([wall], (-400.0, -400.0, 400.0, 400.0), 80.0)


@pytest.fixture
def axis_frame():
    return build_frame(np.array([0.0, -50.0, 0.0]), np.array([0.0, 50.0, 0.0]))


def random_prism_env(rng, bounds=(-200.0, -200.0, 200.0, 200.0), n_buildings=14,
                     height_range=(40.0, 80.0)):
    """Random boxes with random yaw; H_min pinned to the tallest roof."""
    xmin, ymin, xmax, ymax = bounds
    buildings = []
    for _ in range(n_buildings):
        cx = rng.uniform(xmin + 30, xmax - 30)
        cy = rng.uniform(ymin + 30, ymax - 30)
        w = rng.uniform(8, 30)
        d = rng.uniform(8, 30)
        ang = rng.uniform(0, np.pi)
        c, s = np.cos(ang), np.sin(ang)
        base = np.array([[-w, -d], [w, -d], [w, d], [-w, d]]) / 2.0
        rot = base @ np.array([[c, s], [-s, c]])
        fp = rot + np.array([cx, cy])
        buildings.append(Building(fp, rng.uniform(*height_range)))
    h_min = max(b.height for b in buildings)
    return Environment(buildings, bounds, h_min)
