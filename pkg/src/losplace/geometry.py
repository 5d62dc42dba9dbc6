"""Coordinate frames and the geometric primitives shared by all search modules.

The user pair defines a local frame: origin at the midpoint between the two
users, e2 pointing from user 1 to user 2, e3 straight up, e1 completing a
right-handed basis.  In frame coordinates user 1 sits at (0, -L/2, 0) and
user 2 at (0, +L/2, 0); the middle perpendicular plane S is y = 0 and the
minimum-altitude horizontal plane H is z = H_min.  All searches operate in
frame coordinates and convert to world coordinates only for visibility
queries against the environment.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateFrameError,
    InvalidReferenceError,
    NoCrossingError,
    UndefinedAngleError,
    UnsupportedInputError,
)

# Exact-arithmetic domain (isometries, closed forms).
GEOM_TOL = 1e-9
# Residual tolerance for ray/plane intersection style checks.
RESIDUAL_TOL = 1e-6

UP = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True)
class Frame:
    """User-pair coordinate frame.

    u1/u2 are the world positions of the users, o the midpoint, e1/e2/e3 the
    orthonormal basis, L the inter-user separation in meters.
    """

    u1: np.ndarray
    u2: np.ndarray
    o: np.ndarray
    e1: np.ndarray
    e2: np.ndarray
    e3: np.ndarray
    L: float

    @property
    def u1_frame(self) -> np.ndarray:
        return np.array([0.0, -self.L / 2.0, 0.0])

    @property
    def u2_frame(self) -> np.ndarray:
        return np.array([0.0, self.L / 2.0, 0.0])

    def to_world(self, p):
        """Map frame coordinates to world coordinates (single point or (N,3))."""
        p = np.asarray(p, dtype=float)
        basis = np.stack([self.e1, self.e2, self.e3])  # rows are basis vectors
        return p @ basis + self.o

    def to_frame(self, w):
        """Map world coordinates to frame coordinates (single point or (N,3))."""
        w = np.asarray(w, dtype=float)
        basis = np.stack([self.e1, self.e2, self.e3])
        return (w - self.o) @ basis.T


def build_frame(u1, u2) -> Frame:
    """Build the user-pair frame from two distinct ground-level positions."""
    u1 = np.asarray(u1, dtype=float)
    u2 = np.asarray(u2, dtype=float)
    if u1.shape != (3,) or u2.shape != (3,):
        raise UnsupportedInputError("user positions must be 3-vectors")
    if abs(u1[2]) > GEOM_TOL or abs(u2[2]) > GEOM_TOL:
        raise UnsupportedInputError("users must be at ground altitude (z = 0)")
    diff = u2 - u1
    L = float(np.linalg.norm(diff))
    if L <= GEOM_TOL:
        raise DegenerateFrameError("coincident users: cannot orient the frame")
    e2 = diff / L
    e3 = UP.copy()
    e1 = np.cross(e2, e3)
    e1 /= np.linalg.norm(e1)
    o = (u1 + u2) / 2.0
    return Frame(u1=u1, u2=u2, o=o, e1=e1, e2=e2, e3=e3, L=L)


def link_distances(p, frame: Frame):
    """Distances from a frame point to both users.

    Returns (d1, d2, d0, r) where d0 = max(d1, d2) is the critical distance
    and r the radius to the midpoint.
    """
    p = np.asarray(p, dtype=float)
    half = frame.L / 2.0
    d1 = float(np.sqrt(p[0] ** 2 + (p[1] + half) ** 2 + p[2] ** 2))
    d2 = float(np.sqrt(p[0] ** 2 + (p[1] - half) ** 2 + p[2] ** 2))
    r = float(np.linalg.norm(p))
    return d1, d2, max(d1, d2), r


def critical_distance_batch(pts: np.ndarray, L: float) -> np.ndarray:
    """Vectorized d0 = max(d1, d2) for an (N,3) array of frame points."""
    half = L / 2.0
    hx = pts[:, 0] ** 2 + pts[:, 2] ** 2
    d1 = np.sqrt(hx + (pts[:, 1] + half) ** 2)
    d2 = np.sqrt(hx + (pts[:, 1] - half) ** 2)
    return np.maximum(d1, d2)


def deviation_angle(p) -> float:
    """Signed angle of a point on S measured from the vertical through o.

    Positive on the -x side (sign(-p.e1)), zero straight above the midpoint.
    """
    p = np.asarray(p, dtype=float)
    if abs(p[1]) > RESIDUAL_TOL:
        raise UnsupportedInputError("deviation angle is defined on plane S only")
    norm = np.linalg.norm(p)
    if norm <= GEOM_TOL:
        raise UndefinedAngleError("deviation angle undefined at the midpoint")
    # sign(-p.e1) with the tie at x == 0 resolved to +1 for determinism
    sign = -1.0 if p[0] > 0.0 else 1.0
    return float(sign * np.arccos(np.clip(p[2] / norm, -1.0, 1.0)))


def polar_to_s_point(rho: float, theta: float) -> np.ndarray:
    """Inverse of the (r, theta) parameterization of plane S."""
    return np.array([-rho * np.sin(theta), 0.0, rho * np.cos(theta)])


def colinear_map_to_S(p_prime, user_index: int, frame: Frame) -> np.ndarray:
    """Project a point onto plane S along the ray from the given user.

    The image shares its per-user LOS status with the input by the colinear
    invariance contract.  Requires the ray from the user towards the point to
    cross S moving away from the user.
    """
    p = np.asarray(p_prime, dtype=float)
    half = frame.L / 2.0
    if user_index == 1:
        u = np.array([0.0, -half, 0.0])
        denom = p[1] + half
    elif user_index == 2:
        u = np.array([0.0, half, 0.0])
        denom = half - p[1]
    else:
        raise ValueError("user_index must be 1 or 2")
    if denom <= GEOM_TOL:
        raise NoCrossingError(
            "ray from user %d through the point does not cross S going away "
            "from the user" % user_index
        )
    lam = half / denom
    return u + lam * (p - u)


def central_project_to_H(foot, user_index: int, frame: Frame, h_min: float) -> np.ndarray:
    """Push a point on S outward along the user's ray onto the plane z = H_min.

    Inverse of :func:`colinear_map_to_S` for feet strictly below H_min.
    """
    p = np.asarray(foot, dtype=float)
    if p[2] <= GEOM_TOL:
        raise NoCrossingError("foot must be strictly above the ground")
    half = frame.L / 2.0
    u = np.array([0.0, -half, 0.0]) if user_index == 1 else np.array([0.0, half, 0.0])
    rho = h_min / p[2]
    return u + rho * (p - u)


@dataclass(frozen=True)
class CapRegion:
    """Bounded region known to contain the global optimum.

    b_tilde_radius is the enlarged-cap critical distance bound; h_prime_min
    the lowest S-plane altitude whose rays can still reach points in the cap.
    """

    d0_ref: float
    L: float
    H_min: float
    b_tilde_radius: float
    h_prime_min: float

    def contains(self, p, frame: Frame) -> bool:
        _, _, d0, _ = link_distances(p, frame)
        return d0 <= self.b_tilde_radius + GEOM_TOL


def cap_region(p_ref, frame: Frame, h_min: float) -> CapRegion:
    """Cap region anchored at a double-LOS reference point."""
    _, _, d0, _ = link_distances(p_ref, frame)
    return cap_region_from_d0(d0, frame.L, h_min)


def cap_region_from_d0(d0_ref: float, L: float, h_min: float) -> CapRegion:
    if d0_ref <= h_min:
        raise InvalidReferenceError(
            "cap region requires d0(reference) > H_min (got d0=%.6g, H_min=%.6g)"
            % (d0_ref, h_min)
        )
    if d0_ref <= np.sqrt(2.0) * L / 2.0 or d0_ref >= L:
        radius = d0_ref
    else:
        radius = L * L / (2.0 * np.sqrt(L * L - d0_ref * d0_ref))
    h_prime = L * h_min / (2.0 * np.sqrt(d0_ref * d0_ref - h_min * h_min))
    return CapRegion(
        d0_ref=float(d0_ref),
        L=float(L),
        H_min=float(h_min),
        b_tilde_radius=float(radius),
        h_prime_min=float(h_prime),
    )
