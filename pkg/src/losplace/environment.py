"""City model and the exact line-of-sight oracle.

Buildings are right prisms: a simple polygon footprint extruded from the
ground to a flat roof.  That is the weakest shape class for which upward
invariance is exact everywhere and colinear invariance is exact within the
permissible flight layer (altitude >= H_min >= every roof), so the search
theory holds as a theorem rather than an approximation.

Visibility between two points reduces to 2D: clip the ground projection of
the segment against each footprint and compare the segment altitude with the
roof over the clipped interval.  Footprints are decomposed into convex pieces
once at construction, which makes the clip a Liang-Barsky style half-plane
walk and lets large batches of query points be evaluated with numpy.

Boundary rules (deterministic):
  * grazing the roof plane exactly counts as visible,
  * segment endpoints resting on a building surface do not count as blockage,
  * sliding along a wall strictly below the roof counts as blocked.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import NotPermissibleError, NoInitialPointError, UnsupportedInputError

_PARALLEL_EPS = 1e-12


# ---------------------------------------------------------------------------
# polygon helpers
# ---------------------------------------------------------------------------

def _cross2(a, b) -> float:
    return float(a[0] * b[1] - a[1] * b[0])

def polygon_area(poly: np.ndarray) -> float:
    """Signed area of a 2D polygon (positive when CCW)."""
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _is_convex(poly: np.ndarray) -> bool:
    n = len(poly)
    prev = poly[1] - poly[0]
    for i in range(1, n + 1):
        cur = poly[(i + 1) % n] - poly[i % n]
        if _cross2(prev, cur) < -_PARALLEL_EPS:
            return False
        prev = cur
    return True


def _ear_clip(poly: np.ndarray) -> list[np.ndarray]:
    """Triangulate a simple CCW polygon by ear clipping."""
    idx = list(range(len(poly)))
    tris = []
    guard = 0
    while len(idx) > 3 and guard < 10000:
        guard += 1
        n = len(idx)
        clipped = False
        for k in range(n):
            i0, i1, i2 = idx[(k - 1) % n], idx[k], idx[(k + 1) % n]
            a, b, c = poly[i0], poly[i1], poly[i2]
            if _cross2(b - a, c - b) <= _PARALLEL_EPS:
                continue  # reflex or degenerate corner
            ear = np.array([a, b, c])
            # no other vertex may lie inside the candidate ear
            others = [j for j in idx if j not in (i0, i1, i2)]
            if any(_point_in_convex(poly[j], ear) for j in others):
                continue
            tris.append(ear)
            idx.pop(k)
            clipped = True
            break
        if not clipped:
            raise ValueError("ear clipping failed: footprint is not a simple polygon")
    tris.append(poly[idx])
    return tris


def _point_in_convex(p, poly: np.ndarray, tol: float = _PARALLEL_EPS) -> bool:
    n = len(poly)
    for i in range(n):
        e = poly[(i + 1) % n] - poly[i]
        if _cross2(e, p - poly[i]) < -tol:
            return False
    return True


def _convex_pieces(poly: np.ndarray) -> list[np.ndarray]:
    if _is_convex(poly):
        return [poly]
    return _ear_clip(poly)


def _piece_halfplanes(piece: np.ndarray):
    """Inward half-planes (n, c) with inside <=> n . p >= c, for a CCW piece."""
    nxt = np.roll(piece, -1, axis=0)
    edges = nxt - piece
    normals = np.stack([-edges[:, 1], edges[:, 0]], axis=1)  # left normals
    offsets = np.einsum("ij,ij->i", normals, piece)
    return normals, offsets


# ---------------------------------------------------------------------------
# buildings
# ---------------------------------------------------------------------------

@dataclass
class Building:
    """Extruded-polygon obstacle: simple CCW footprint, flat roof at `height`."""

    footprint: np.ndarray
    height: float
    _pieces: list = field(default_factory=list, repr=False)
    _halfplanes: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        fp = np.asarray(self.footprint, dtype=float)
        if fp.ndim != 2 or fp.shape[0] < 3 or fp.shape[1] != 2:
            raise ValueError("footprint must be an (N>=3, 2) vertex array")
        area = polygon_area(fp)
        if abs(area) <= _PARALLEL_EPS:
            raise ValueError("footprint has zero area")
        if area < 0:
            fp = fp[::-1].copy()
        if self.height <= 0:
            raise ValueError("building height must be positive")
        self.footprint = fp
        self._pieces = _convex_pieces(fp)
        self._halfplanes = [_piece_halfplanes(p) for p in self._pieces]

    @property
    def area(self) -> float:
        return abs(polygon_area(self.footprint))

    @property
    def aabb(self):
        lo = self.footprint.min(axis=0)
        hi = self.footprint.max(axis=0)
        return lo[0], lo[1], hi[0], hi[1]

    def contains_ground_point(self, p) -> bool:
        p = np.asarray(p, dtype=float)[:2]
        return any(_point_in_convex(p, piece) for piece in self._pieces)

    def blocks_segment(self, a, b) -> bool:
        """True when the open segment a-b passes through the prism interior."""
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        a2, d2 = a[:2], b[:2] - a[:2]
        za, dz = a[2], b[2] - a[2]
        for normals, offsets in self._halfplanes:
            t0, t1 = 0.0, 1.0
            inside = True
            for n, c in zip(normals, offsets):
                den = n @ d2
                num = c - n @ a2
                if abs(den) <= _PARALLEL_EPS:
                    if num > _PARALLEL_EPS:  # parallel and strictly outside
                        inside = False
                        break
                elif den > 0:
                    t0 = max(t0, num / den)
                else:
                    t1 = min(t1, num / den)
                if t0 >= t1:
                    inside = False
                    break
            if not inside or t0 >= t1:
                continue
            z_lo = min(za + t0 * dz, za + t1 * dz)
            if z_lo < self.height:
                return True
        return False

    def blocks_segments_batch(self, a, bs: np.ndarray) -> np.ndarray:
        """Vectorized `blocks_segment` for one anchor and (N,3) endpoints."""
        a = np.asarray(a, dtype=float)
        bs = np.asarray(bs, dtype=float)
        a2 = a[:2]
        d2 = bs[:, :2] - a2
        za, dz = a[2], bs[:, 2] - a[2]
        blocked = np.zeros(len(bs), dtype=bool)
        for normals, offsets in self._halfplanes:
            t0 = np.zeros(len(bs))
            t1 = np.ones(len(bs))
            alive = np.ones(len(bs), dtype=bool)
            for n, c in zip(normals, offsets):
                den = d2 @ n
                num = c - a2 @ n
                par = np.abs(den) <= _PARALLEL_EPS
                alive &= ~(par & (num > _PARALLEL_EPS))
                with np.errstate(divide="ignore", invalid="ignore"):
                    t = num / den
                enter = ~par & (den > 0)
                leave = ~par & (den < 0)
                t0 = np.where(enter, np.maximum(t0, t), t0)
                t1 = np.where(leave, np.minimum(t1, t), t1)
            alive &= t0 < t1
            if not alive.any():
                continue
            z0 = za + t0 * dz
            z1 = za + t1 * dz
            blocked |= alive & (np.minimum(z0, z1) < self.height)
        return blocked


# ---------------------------------------------------------------------------
# environment
# ---------------------------------------------------------------------------

_GRID_CELLS = 48


class Environment:
    """Immutable city: buildings, world bounds, minimum flight altitude.

    LOS queries are pure and safe to issue concurrently.
    """

    def __init__(self, buildings, bounds, h_min: float):
        self.buildings = list(buildings)
        self.bounds = tuple(float(v) for v in bounds)  # xmin, ymin, xmax, ymax
        self.h_min = float(h_min)
        xmin, ymin, xmax, ymax = self.bounds
        if xmax <= xmin or ymax <= ymin:
            raise ValueError("bounds must span a positive-area rectangle")
        tallest = max((b.height for b in self.buildings), default=0.0)
        if self.h_min < tallest - 1e-9:
            raise ValueError(
                "H_min (%.3f) must be at least the tallest building (%.3f)"
                % (self.h_min, tallest)
            )
        for b in self.buildings:
            bx0, by0, bx1, by1 = b.aabb
            if bx0 < xmin - 1e-6 or by0 < ymin - 1e-6 or bx1 > xmax + 1e-6 or by1 > ymax + 1e-6:
                raise ValueError("building footprint outside environment bounds")
        self._build_index()

    # -- broad phase ------------------------------------------------------

    def _build_index(self):
        xmin, ymin, xmax, ymax = self.bounds
        self._cell = max(xmax - xmin, ymax - ymin) / _GRID_CELLS
        self._nx = int(np.ceil((xmax - xmin) / self._cell)) + 1
        self._ny = int(np.ceil((ymax - ymin) / self._cell)) + 1
        self._grid = {}
        for idx, b in enumerate(self.buildings):
            bx0, by0, bx1, by1 = b.aabb
            i0, j0 = self._cell_of(bx0, by0)
            i1, j1 = self._cell_of(bx1, by1)
            for i in range(i0, i1 + 1):
                for j in range(j0, j1 + 1):
                    self._grid.setdefault((i, j), []).append(idx)

    def _cell_of(self, x, y):
        xmin, ymin, _, _ = self.bounds
        return int((x - xmin) // self._cell), int((y - ymin) // self._cell)

    def _candidates(self, a2, b2):
        """Building indices whose cells the 2D segment passes through."""
        if not self.buildings:
            return ()
        seen = set()
        out = []
        # walk cells along the segment (conservative: sample at sub-cell pitch)
        length = float(np.hypot(b2[0] - a2[0], b2[1] - a2[1]))
        n = max(2, int(length / (self._cell * 0.5)) + 2)
        ts = np.linspace(0.0, 1.0, n)
        xs = a2[0] + ts * (b2[0] - a2[0])
        ys = a2[1] + ts * (b2[1] - a2[1])
        for x, y in zip(xs, ys):
            ci, cj = self._cell_of(x, y)
            for di in (-1, 0, 1):
                for dj in (-1, 0, 1):
                    key = (ci + di, cj + dj)
                    if key in seen:
                        continue
                    seen.add(key)
                    out.extend(self._grid.get(key, ()))
        return sorted(set(out))

    # -- LOS oracle --------------------------------------------------------

    def los_visible(self, a, b, use_index: bool = True) -> bool:
        """True iff the open segment a-b intersects no building volume."""
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        if use_index:
            cand = self._candidates(a[:2], b[:2])
            buildings = (self.buildings[i] for i in cand)
        else:
            buildings = self.buildings
        return not any(bld.blocks_segment(a, b) for bld in buildings)

    def los_visible_batch(self, a, pts: np.ndarray) -> np.ndarray:
        """LOS flags from one anchor point to an (N,3) batch of points."""
        pts = np.asarray(pts, dtype=float)
        if pts.size == 0:
            return np.zeros(0, dtype=bool)
        blocked = np.zeros(len(pts), dtype=bool)
        for b in self.buildings:
            blocked |= b.blocks_segments_batch(a, pts)
        return ~blocked

    def double_los(self, p, u1, u2) -> bool:
        """LOS to both users from a permissible position."""
        p = np.asarray(p, dtype=float)
        if p[2] < self.h_min - 1e-9:
            raise NotPermissibleError(
                "position altitude %.3f below H_min %.3f" % (p[2], self.h_min)
            )
        return self.los_visible(p, u1) and self.los_visible(p, u2)

    def double_los_batch(self, pts: np.ndarray, u1, u2) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        if pts.size and pts[:, 2].min() < self.h_min - 1e-9:
            raise NotPermissibleError("batch contains positions below H_min")
        return self.los_visible_batch(np.asarray(u1, float), pts) & self.los_visible_batch(
            np.asarray(u2, float), pts
        )

    # -- ground occupancy ---------------------------------------------------

    def ground_blocked(self, p) -> bool:
        p = np.asarray(p, dtype=float)
        ci, cj = self._cell_of(p[0], p[1]) if self.buildings else (0, 0)
        cand = set()
        for di in (-1, 0, 1):
            for dj in (-1, 0, 1):
                cand.update(self._grid.get((ci + di, cj + dj), ()))
        return any(self.buildings[i].contains_ground_point(p) for i in cand)

    # -- density metrics ----------------------------------------------------

    def bcr(self) -> float:
        xmin, ymin, xmax, ymax = self.bounds
        total = (xmax - xmin) * (ymax - ymin)
        return sum(b.area for b in self.buildings) / total

    def far(self, floor_height: float = 3.0) -> float:
        """Floor-area ratio with a configurable per-floor height convention."""
        xmin, ymin, xmax, ymax = self.bounds
        total = (xmax - xmin) * (ymax - ymin)
        stacked = sum(b.area * np.ceil(b.height / floor_height) for b in self.buildings)
        return stacked / total

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "bounds": list(self.bounds),
            "h_min": self.h_min,
            "buildings": [
                {"footprint": b.footprint.tolist(), "height": b.height}
                for b in self.buildings
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Environment":
        buildings = [
            Building(np.asarray(b["footprint"], dtype=float), float(b["height"]))
            for b in data["buildings"]
        ]
        return cls(buildings, data["bounds"], data["h_min"])

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def load(cls, path) -> "Environment":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def find_initial_double_los(env: Environment, frame, start_xy, step: float,
                            altitude_cap: float = 1000.0) -> np.ndarray:
    """Lowest double-LOS frame point on the vertical line through start_xy.

    Climbs from H_min in increments of `step`; raises when the altitude cap
    is exceeded without reaching double-LOS.
    """
    if step <= 0:
        raise ValueError("climb step must be positive")
    x, y = float(start_xy[0]), float(start_xy[1])
    z = env.h_min
    while z <= altitude_cap + 1e-9:
        p = np.array([x, y, z])
        if env.double_los(frame.to_world(p), frame.u1, frame.u2):
            return p
        z += step
    raise NoInitialPointError(
        "no double-LOS point on the vertical through (%.2f, %.2f) below %.0f m"
        % (x, y, altitude_cap)
    )
