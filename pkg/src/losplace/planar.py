"""Dynamic search trajectory on the middle perpendicular plane.

The search alternates two moves: descend one step whenever the current
position is double-LOS, otherwise slide along the circle of constant radius
around the midpoint.  A clockwise stage runs until the altitude reaches
H_min, then the search restarts below the initial point at the incumbent
radius and sweeps anticlockwise.  Because double-LOS columns on the plane
are upward-closed, the closest double-LOS point to the midpoint encountered
this way is the plane optimum, and the trajectory length stays linear in the
initial altitude.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .environment import Environment
from .errors import InvalidStartError
from .geometry import Frame, deviation_angle, polar_to_s_point

_Z_TOL = 1e-9


@dataclass(frozen=True)
class PlanarSearchConfig:
    step: float = 5.0
    h_min: float | None = None  # defaults to the environment's flight floor
    max_theta: float = np.pi / 2.0
    altitude_cap: float = 1000.0
    value_fn: object = None  # optional f(d) used only to report F

    def __post_init__(self):
        if self.step <= 0:
            raise ValueError("step must be positive")


@dataclass
class Trajectory:
    """Flown waypoints with their double-LOS flags.

    `stage_breaks` marks indices where a new stage starts; the jump between
    stages is a reset, not flown distance, so lengths accumulate only within
    stages.
    """

    waypoints: list = field(default_factory=list)
    flags: list = field(default_factory=list)
    stage_breaks: list = field(default_factory=list)

    def append(self, p: np.ndarray, flag: bool):
        self.waypoints.append(np.asarray(p, dtype=float).copy())
        self.flags.append(bool(flag))

    def begin_stage(self):
        self.stage_breaks.append(len(self.waypoints))

    @property
    def total_length(self) -> float:
        pts = np.asarray(self.waypoints)
        if len(pts) < 2:
            return 0.0
        seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
        for brk in self.stage_breaks:
            if 0 < brk < len(pts):
                seg[brk - 1] = 0.0
        return float(seg.sum())

    def cumulative_lengths(self) -> np.ndarray:
        pts = np.asarray(self.waypoints)
        if len(pts) == 0:
            return np.zeros(0)
        seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
        for brk in self.stage_breaks:
            if 0 < brk < len(pts):
                seg[brk - 1] = 0.0
        return np.concatenate([[0.0], np.cumsum(seg)])

    def csv_rows(self):
        """Rows of (x, y, z, double_los, cum_length) for external plotting."""
        cum = self.cumulative_lengths()
        return [
            (p[0], p[1], p[2], flag, c)
            for p, flag, c in zip(self.waypoints, self.flags, cum)
        ]


@dataclass(frozen=True)
class PlanarResult:
    best: np.ndarray
    value: float
    trajectory: Trajectory
    radius: float


def run_planar_search(env: Environment, frame: Frame, p0, cfg: PlanarSearchConfig
                      ) -> PlanarResult:
    """Find the double-LOS point of minimum radius on plane S.

    `p0` must be a double-LOS frame point on S at or above the flight floor.
    """
    p0 = np.asarray(p0, dtype=float)
    h_min = env.h_min if cfg.h_min is None else cfg.h_min
    if abs(p0[1]) > 1e-6:
        raise InvalidStartError("initial point must lie on plane S")
    if p0[2] < h_min - _Z_TOL:
        raise InvalidStartError("initial point below the flight floor")

    def is_dlos(p) -> bool:
        return env.double_los(frame.to_world(p), frame.u1, frame.u2)

    if not is_dlos(p0):
        raise InvalidStartError("initial point is not double-LOS")

    traj = Trajectory()
    best = p0.copy()
    best_r = float(np.linalg.norm(p0))

    def run_stage(start: np.ndarray, direction: float):
        nonlocal best, best_r
        traj.begin_stage()
        p = start.copy()
        theta0 = 0.0 if np.linalg.norm(start) <= _Z_TOL else deviation_angle(start)
        theta = theta0
        while True:
            dlos = is_dlos(p)
            traj.append(p, dlos)
            if dlos:
                r = float(np.linalg.norm(p))
                if r < best_r - _Z_TOL:
                    best = p.copy()
                    best_r = r
                if p[2] <= h_min + _Z_TOL:
                    return  # reached the floor while double-LOS
                p = np.array([p[0], 0.0, max(p[2] - cfg.step, h_min)])
                theta = deviation_angle(p) if np.linalg.norm(p) > _Z_TOL else 0.0
            else:
                if p[2] <= h_min + _Z_TOL:
                    return  # floor reached on an arc
                rho = float(np.linalg.norm(p))
                dtheta = direction * cfg.step / rho
                theta_next = theta + dtheta
                # land exactly on the floor crossing of the circle
                theta_floor = direction * float(np.arccos(np.clip(h_min / rho, -1.0, 1.0)))
                if direction * theta_next > direction * theta_floor:
                    theta_next = theta_floor
                if abs(theta_next) > cfg.max_theta + 1e-12:
                    return  # sweep cutoff (only reachable when h_min is 0)
                theta = theta_next
                p = polar_to_s_point(rho, theta)

    # clockwise stage from p0
    run_stage(p0, +1.0)
    # restart below p0 at the incumbent radius, then anticlockwise
    x0 = p0[0]
    if best_r >= abs(x0):
        z_restart = float(np.sqrt(max(best_r * best_r - x0 * x0, 0.0)))
        restart = np.array([x0, 0.0, max(z_restart, h_min)])
    else:
        restart = p0.copy()
    run_stage(restart, -1.0)

    d0 = float(np.sqrt(best_r ** 2 + (frame.L / 2.0) ** 2))
    value = cfg.value_fn(d0) if cfg.value_fn is not None else -d0
    return PlanarResult(best=best, value=value, trajectory=traj, radius=best_r)
