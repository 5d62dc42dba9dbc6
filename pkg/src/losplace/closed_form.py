"""Closed-form placement solvers for ray and stripe LOS patterns on plane S.

A per-user LOS ray (vertical half-line on the middle perpendicular plane)
pins a vertical plane through the user; two rays on the same side of the
vertical axis give two planes whose intersection is a vertical line, and the
lowest double-LOS point on that line is the optimum for the ray pair.

For horizontal LOS stripes the pair problem is reduced by a change of
variables: parameterize candidates by the ground trace (gx, gy) of the
intersection line.  Then

    foot_1 = gx * (L/2) / (gy + L/2),   foot_2 = gx * (L/2) / (L/2 - gy)

are linear constraints in (gx, gy), the winning lift altitude
max(h1*(1 + 2*gy/L), h2*(1 - 2*gy/L)) is piecewise linear in gy alone, and

    d0^2 = gx^2 + (|gy| + L/2)^2 + altitude^2

is convex.  Eliminating gx in closed form leaves a 1D convex problem in gy
solved by bisection on the (right-)derivative.  An optional altitude floor
(used by the multi-stage search to respect the minimum flight height) keeps
the problem convex: the floored altitude is still a pointwise max.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    GuardViolationError,
    NoCandidateError,
    UnsupportedConfigurationError,
)
from .geometry import Frame, RESIDUAL_TOL

_BISECT_ITERS = 80


@dataclass(frozen=True)
class LosRay:
    """Vertical LOS half-line on plane S with its lowest point `foot`."""

    foot: np.ndarray
    user_index: int

    def __post_init__(self):
        foot = np.asarray(self.foot, dtype=float)
        object.__setattr__(self, "foot", foot)
        if abs(foot[1]) > RESIDUAL_TOL:
            raise ValueError("ray foot must lie on plane S (y = 0)")
        if self.user_index not in (1, 2):
            raise ValueError("user_index must be 1 or 2")


@dataclass(frozen=True)
class LosStripe:
    """Vertical LOS stripe on plane S bounded below by the segment a-b.

    Both endpoints share the same height and the same side of the vertical
    axis, ordered so |a.x| <= |b.x|.
    """

    a: np.ndarray
    b: np.ndarray
    user_index: int

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        b = np.asarray(self.b, dtype=float)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        if abs(a[1]) > RESIDUAL_TOL or abs(b[1]) > RESIDUAL_TOL:
            raise ValueError("stripe endpoints must lie on plane S (y = 0)")
        if abs(a[2] - b[2]) > RESIDUAL_TOL:
            raise ValueError("stripe bottom segment must be horizontal")
        if a[2] <= 0:
            raise ValueError("stripe height must be positive")
        if a[0] * b[0] <= 0:
            raise ValueError("stripe must not cross or touch the vertical axis")
        if abs(a[0]) > abs(b[0]) + RESIDUAL_TOL:
            raise ValueError("stripe endpoints must be ordered |a.x| <= |b.x|")
        if self.user_index not in (1, 2):
            raise ValueError("user_index must be 1 or 2")

    @property
    def sign(self) -> float:
        return 1.0 if self.a[0] > 0 else -1.0

    @property
    def height(self) -> float:
        return float(self.a[2])

    @property
    def x_inner(self) -> float:
        return float(abs(self.a[0]))

    @property
    def x_outer(self) -> float:
        return float(abs(self.b[0]))


def double_ray_optimum(r1: LosRay, r2: LosRay, frame: Frame) -> np.ndarray:
    """Lowest double-LOS point for a same-side ray pair (frame coordinates).

    Lifts each foot along its user's ray onto the vertical intersection line
    of the two containing planes and returns the higher of the two lifts.
    """
    if r1.user_index != 1 or r2.user_index != 2:
        raise ValueError("double_ray_optimum expects a (user 1, user 2) ray pair")
    a1, a2 = r1.foot, r2.foot
    if a1[0] * a2[0] <= 0:
        raise GuardViolationError(
            "ray feet on opposite sides of the axis (a11*a21 <= 0)"
        )
    half = frame.L / 2.0
    u1 = np.array([0.0, -half, 0.0])
    u2 = np.array([0.0, half, 0.0])
    t = 2.0 * a2[0] / (a1[0] + a2[0])
    s = 2.0 - t
    lift1 = u1 + t * (a1 - u1)
    lift2 = u2 + s * (a2 - u2)
    return lift1 if lift1[2] >= lift2[2] else lift2


# ---------------------------------------------------------------------------
# stripe pairs: 1D convex reduction over the intersection-line ground trace
# ---------------------------------------------------------------------------

def _pair_arrays(s1: LosStripe, s2: LosStripe):
    if s1.user_index != 1 or s2.user_index != 2:
        raise ValueError("expected a (user 1, user 2) stripe pair")
    if s1.sign != s2.sign:
        raise UnsupportedConfigurationError(
            "stripes on opposite half-planes admit no same-side intersection"
        )
    return (
        np.array([s1.x_inner]),
        np.array([s1.x_outer]),
        np.array([s1.height]),
        np.array([s2.x_inner]),
        np.array([s2.x_outer]),
        np.array([s2.height]),
        s1.sign,
    )


def solve_stripe_pairs(a1, b1, h1, a2, b2, h2, L: float, floor: float | None = None):
    """Vectorized stripe-pair optimum on the positive-x side.

    All inputs are same-length arrays of absolute-x stripe bounds and heights
    (0 < a <= b).  Returns (points (P,3), d0 (P,)) with unsigned gx; callers
    apply the stripe side sign to the x coordinate.
    """
    a1, b1, h1, a2, b2, h2 = (np.asarray(v, dtype=float) for v in (a1, b1, h1, a2, b2, h2))
    half = L / 2.0

    gy_lo = L * (a2 - b1) / (2.0 * (b1 + a2))
    gy_hi = L * (b2 - a1) / (2.0 * (a1 + b2))

    def gx_min(gy):
        return np.maximum(a1 * (2.0 * gy + L) / L, a2 * (L - 2.0 * gy) / L)

    def altitude(gy):
        z = np.maximum(h1 * (1.0 + 2.0 * gy / L), h2 * (1.0 - 2.0 * gy / L))
        if floor is not None:
            z = np.maximum(z, floor)
        return z

    def phi(gy):
        g = gx_min(gy)
        return g * g + (np.abs(gy) + half) ** 2 + altitude(gy) ** 2

    def dphi(gy):
        # Right-derivative of the convex reduced objective.
        l1 = a1 * (2.0 * gy + L) / L
        l2 = a2 * (L - 2.0 * gy) / L
        use1 = l1 >= l2
        g = np.where(use1, l1, l2)
        gs = np.where(use1, 2.0 * a1 / L, -2.0 * a2 / L)
        out = 2.0 * g * gs
        out = out + 2.0 * (np.abs(gy) + half) * np.where(gy >= 0.0, 1.0, -1.0)
        z1 = h1 * (1.0 + 2.0 * gy / L)
        z2 = h2 * (1.0 - 2.0 * gy / L)
        usez1 = z1 >= z2
        z = np.where(usez1, z1, z2)
        zs = np.where(usez1, 2.0 * h1 / L, -2.0 * h2 / L)
        if floor is not None:
            below = z < floor
            at = np.abs(z - floor) <= 0.0
            zs = np.where(below, 0.0, zs)
            z = np.maximum(z, floor)
            zs = np.where(at, np.maximum(zs, 0.0), zs)
        return out + 2.0 * z * zs

    lo = gy_lo.copy()
    hi = gy_hi.copy()
    at_lo = dphi(gy_lo) >= 0.0
    at_hi = dphi(gy_hi) <= 0.0
    for _ in range(_BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        neg = dphi(mid) < 0.0
        lo = np.where(neg, mid, lo)
        hi = np.where(neg, hi, mid)
    gy = 0.5 * (lo + hi)
    gy = np.where(at_lo, gy_lo, gy)
    gy = np.where(at_hi & ~at_lo, gy_hi, gy)

    # Evaluate the kink locations as well; bisection already converges, this
    # pins exact-arithmetic cases (coincident rays, axis-symmetric stripes).
    cands = [gy, gy_lo, gy_hi,
             np.clip(np.zeros_like(gy), gy_lo, gy_hi),
             np.clip(L * (a2 - a1) / (2.0 * (a1 + a2)), gy_lo, gy_hi),
             np.clip(L * (h2 - h1) / (2.0 * (h1 + h2)), gy_lo, gy_hi)]
    if floor is not None:
        with np.errstate(divide="ignore", invalid="ignore"):
            cands.append(np.clip(half * (floor / h1 - 1.0), gy_lo, gy_hi))
            cands.append(np.clip(half * (1.0 - floor / h2), gy_lo, gy_hi))
    best_gy = cands[0]
    best_val = phi(cands[0])
    for c in cands[1:]:
        v = phi(c)
        better = v < best_val
        best_gy = np.where(better, c, best_gy)
        best_val = np.where(better, v, best_val)

    gx = gx_min(best_gy)
    z = altitude(best_gy)
    pts = np.stack([gx, best_gy, z], axis=-1)
    return pts, np.sqrt(best_val)


def double_stripe_optimum(s1: LosStripe, s2: LosStripe, frame: Frame, f=None,
                          floor: float | None = None) -> np.ndarray:
    """Optimum of the min-link objective over a same-side stripe pair.

    `f` only decorates the reported value elsewhere; the optimum itself is
    the critical-distance minimizer.  `floor`, when given, clamps candidate
    altitudes from below (certified by upward invariance).
    """
    a1, b1, h1, a2, b2, h2, sign = _pair_arrays(s1, s2)
    pts, _ = solve_stripe_pairs(a1, b1, h1, a2, b2, h2, frame.L, floor=floor)
    out = pts[0]
    out[0] *= sign
    return out


def best_over_intervals(I1, I2, frame: Frame, f=None, floor: float | None = None):
    """Best stripe-pair solution over two interval collections.

    Pairs on opposite half-planes contribute no candidate.  Ties are broken
    lexicographically by (d0, x, y, z) for determinism.
    """
    I1 = list(I1)
    I2 = list(I2)
    if not I1 or not I2:
        raise NoCandidateError("both interval sets must be non-empty")
    best = None
    best_key = None
    for s1 in I1:
        for s2 in I2:
            if s1.sign != s2.sign:
                continue
            p = double_stripe_optimum(s1, s2, frame, floor=floor)
            d1 = np.sqrt(p[0] ** 2 + (p[1] + frame.L / 2) ** 2 + p[2] ** 2)
            d2 = np.sqrt(p[0] ** 2 + (p[1] - frame.L / 2) ** 2 + p[2] ** 2)
            key = (max(d1, d2), p[0], p[1], p[2])
            if best_key is None or key < best_key:
                best = p
                best_key = key
    if best is None:
        raise NoCandidateError("no same-side stripe pair produced a candidate")
    return best
