"""Benchmark schemes: exhaustive grid searches and the statistical baseline.

The 3D exhaustive search is the optimality oracle.  Its grid is restricted to
the cap of positions whose critical distance does not exceed the initial
double-LOS point's, which is where the optimum provably lives, so the scan
stays tractable without giving up correctness.  Scan path lengths follow a
boustrophedon convention: rows are flown end to end with one grid step
between consecutive rows and levels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .environment import Environment
from .errors import ConfigurationError
from .geometry import Frame, critical_distance_batch
from .links import RelayLinkModel, StatLosParams, los_probability

_TOL = 1e-9


@dataclass
class PlacementResult:
    """Outcome of one scheme on one user pair."""

    scheme: str
    pair_id: int
    position: np.ndarray | None  # world coordinates
    objective: float
    search_length: float
    feasible: bool
    d0: float

    def __post_init__(self):
        if self.search_length < 0:
            raise ValueError("search length cannot be negative")


def _lattice(limit: float, step: float) -> np.ndarray:
    """Symmetric lattice of integer multiples of step within [-limit, limit]."""
    if limit < 0:
        return np.zeros(0)
    k = int(math.floor(limit / step + 1e-9))
    return step * np.arange(-k, k + 1, dtype=float)


def _boustrophedon_length(rows, step: float) -> float:
    """Scan length for rows of point counts: fly each row, hop between rows."""
    total = 0.0
    hops = -1
    for count in rows:
        if count <= 0:
            continue
        total += (count - 1) * step
        hops += 1
    return total + max(hops, 0) * step


def _cap_grid(frame: Frame, d0_cap: float, h_min: float, alt_cap: float,
              step: float):
    """Frame-coordinate grid over the cap lens, plus scan-row structure."""
    pts = []
    rows = []
    z = h_min
    while z <= alt_cap + _TOL:
        x_half = d0_cap ** 2 - frame.L ** 2 / 4.0 - z * z
        if x_half >= -1e-6:
            xs = _lattice(math.sqrt(max(x_half, 0.0)), step)
            y_half = math.sqrt(max(d0_cap ** 2 - z * z, 0.0)) - frame.L / 2.0
            ys = _lattice(max(y_half, 0.0), step)
            for y in ys:
                X, Y = np.meshgrid(xs, [y])
                cand = np.stack(
                    [X.ravel(), Y.ravel(), np.full(X.size, z)], axis=1
                )
                d0 = critical_distance_batch(cand, frame.L)
                cand = cand[d0 <= d0_cap + _TOL]
                if len(cand):
                    pts.append(cand)
                rows.append(len(cand))
        z += step
    if not pts:
        return np.zeros((0, 3)), rows
    return np.concatenate(pts, axis=0), rows


def _pick_best(pts: np.ndarray, mask: np.ndarray, L: float):
    """Lowest-d0 point among masked candidates, lexicographic tie-break."""
    if not mask.any():
        return None, math.inf
    sel = pts[mask]
    d0 = critical_distance_batch(sel, L)
    order = np.lexsort((sel[:, 2], sel[:, 1], sel[:, 0], d0))
    k = order[0]
    return sel[k], float(d0[k])


def exhaustive_search(env: Environment, frame: Frame, f, mode: str,
                      grid_step: float = 5.0, altitude_cap: float | None = None,
                      p0=None, h_2d: float = 120.0, pair_id: int = 0
                      ) -> PlacementResult:
    """Grid-scan schemes: full 3D, horizontal plane, or the vertical plane S."""
    if grid_step <= 0:
        raise ConfigurationError("grid step must be positive")
    L = frame.L
    name = {"3d": "exhaustive3d", "2d_h": "exhaustive2d_h", "2d_v": "exhaustive2d_v"}
    if mode not in name:
        raise ConfigurationError("unknown exhaustive mode %r" % mode)

    if mode == "2d_h":
        if h_2d < env.h_min - _TOL:
            raise ConfigurationError("H_2D below the flight floor")
        xmin, ymin, xmax, ymax = env.bounds
        xs = np.arange(xmin, xmax + _TOL, grid_step)
        ys = np.arange(ymin, ymax + _TOL, grid_step)
        X, Y = np.meshgrid(xs, ys)
        world = np.stack([X.ravel(), Y.ravel(), np.full(X.size, h_2d)], axis=1)
        if world.size == 0:
            raise ConfigurationError("empty 2D grid")
        dlos = env.los_visible_batch(frame.u1, world) & env.los_visible_batch(
            frame.u2, world
        )
        pts_f = frame.to_frame(world)
        best, d0 = _pick_best(pts_f, dlos, L)
        length = _boustrophedon_length([len(xs)] * len(ys), grid_step)
        return _result(name[mode], pair_id, best, d0, f, frame, length)

    if p0 is None:
        raise ConfigurationError("cap-restricted modes need the initial point p0")
    p0 = np.asarray(p0, dtype=float)
    d0_cap = float(critical_distance_batch(p0[None, :], L)[0])
    h0 = math.sqrt(max(d0_cap ** 2 - L ** 2 / 4.0, 0.0))
    cap = altitude_cap if altitude_cap is not None else h0

    if mode == "3d":
        pts, rows = _cap_grid(frame, d0_cap, env.h_min, cap, grid_step)
        if len(pts) == 0:
            raise ConfigurationError("empty 3D grid")
        world = frame.to_world(pts)
        dlos = env.los_visible_batch(frame.u1, world) & env.los_visible_batch(
            frame.u2, world
        )
        best, d0 = _pick_best(pts, dlos, L)
        length = _boustrophedon_length(rows, grid_step)
        return _result(name[mode], pair_id, best, d0, f, frame, length)

    # 2d_v: rectangle on the middle perpendicular plane
    xs = _lattice(h0, grid_step)
    zs = env.h_min + grid_step * np.arange(
        0, int(math.floor((cap - env.h_min) / grid_step + _TOL)) + 1
    )
    if xs.size == 0 or zs.size == 0:
        raise ConfigurationError("empty vertical-plane grid")
    X, Z = np.meshgrid(xs, zs)
    pts = np.stack([X.ravel(), np.zeros(X.size), Z.ravel()], axis=1)
    world = frame.to_world(pts)
    dlos = env.los_visible_batch(frame.u1, world) & env.los_visible_batch(
        frame.u2, world
    )
    best, d0 = _pick_best(pts, dlos, L)
    length = _boustrophedon_length([len(xs)] * len(zs), grid_step)
    return _result(name[mode], pair_id, best, d0, f, frame, length)


def _result(scheme, pair_id, best_frame, d0, f, frame, length) -> PlacementResult:
    if best_frame is None:
        return PlacementResult(
            scheme=scheme, pair_id=pair_id, position=None, objective=math.nan,
            search_length=length, feasible=False, d0=math.nan,
        )
    pos = frame.to_world(best_frame)
    return PlacementResult(
        scheme=scheme, pair_id=pair_id, position=np.asarray(pos, dtype=float),
        objective=float(f(d0)), search_length=length, feasible=True, d0=float(d0),
    )


def statistical_baseline(env: Environment, frame: Frame, relay: RelayLinkModel,
                         params: StatLosParams, grid_step: float = 5.0,
                         p0=None, altitude_cap: float | None = None,
                         pair_id: int = 0) -> PlacementResult:
    """Pick the grid point minimizing the max-user average path loss.

    The decision uses only the statistical LOS model; feasibility and the
    reported objective are then evaluated against the true environment, so a
    confidently wrong pick shows up as feasible=false with the NLOS budget.
    """
    if grid_step <= 0:
        raise ConfigurationError("grid step must be positive")
    if p0 is None:
        raise ConfigurationError("statistical baseline needs the initial point p0")
    L = frame.L
    p0 = np.asarray(p0, dtype=float)
    d0_cap = float(critical_distance_batch(p0[None, :], L)[0])
    cap = (
        altitude_cap
        if altitude_cap is not None
        else math.sqrt(max(d0_cap ** 2 - L ** 2 / 4.0, 0.0))
    )
    pts, rows = _cap_grid(frame, d0_cap, env.h_min, cap, grid_step)
    if len(pts) == 0:
        raise ConfigurationError("empty statistical grid")
    length = _boustrophedon_length(rows, grid_step)

    half = L / 2.0
    worst = np.full(len(pts), -np.inf)
    dists = []
    for sign in (-1.0, 1.0):  # user 1 at y=-L/2, user 2 at y=+L/2
        r = np.hypot(pts[:, 0], pts[:, 1] - sign * half)
        d = np.sqrt(r * r + pts[:, 2] ** 2)
        p_los = los_probability(params, pts[:, 2], r)
        pl_ave = p_los * relay.path_loss(d, los=True) + (1.0 - p_los) * (
            relay.path_loss(d, los=False)
        )
        worst = np.maximum(worst, pl_ave)
        dists.append(d)

    order = np.lexsort((pts[:, 2], pts[:, 1], pts[:, 0], worst))
    k = order[0]
    chosen = pts[k]
    world = frame.to_world(chosen)
    los1 = env.los_visible(world, frame.u1)
    los2 = env.los_visible(world, frame.u2)
    feasible = bool(los1 and los2 and chosen[2] >= env.h_min - _TOL)
    objective = min(
        relay.capacity_with_condition(float(dists[0][k]), los=los1),
        relay.capacity_with_condition(float(dists[1][k]), los=los2),
    )
    d0 = float(max(dists[0][k], dists[1][k]))
    return PlacementResult(
        scheme="statistical", pair_id=pair_id, position=world,
        objective=float(objective), search_length=length, feasible=feasible,
        d0=d0,
    )
