"""Multi-stage sweep search for the 3D-optimal placement.

Starting from a double-LOS point, the global optimum is confined to the cap
of positions whose critical distance does not exceed the start's.  Horizontal
sweep lines across that cap, on the middle perpendicular plane S and (below
the flight floor) on the horizontal plane H, harvest per-user LOS intervals.
Every same-side interval pair yields a closed-form candidate; the best
candidate becomes the incumbent.

Stages halve the vertical spacing: stage m sweeps 2^(M-m) * delta apart, and
from stage 2 on only the gap directly below each surviving interval is
probed, which bisects the per-column LOS boundary down to delta resolution.
Intervals whose best pair solution is provably dominated at the current
resolution (the distance-gap bound) are pruned between stages.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .closed_form import LosStripe, solve_stripe_pairs
from .environment import Environment
from .errors import InvalidStartError
from .geometry import Frame, cap_region_from_d0, link_distances

_TOL = 1e-9


# ---------------------------------------------------------------------------
# stage arithmetic
# ---------------------------------------------------------------------------

def lambert_w(x: float, tol: float = 1e-12) -> float:
    """Principal-branch Lambert W for x >= 0, by Newton iteration."""
    if x < 0:
        raise ValueError("principal branch evaluated for x >= 0 only")
    if x == 0.0:
        return 0.0
    w = math.log(x) - math.log(math.log(x)) if x > math.e else x / math.e
    for _ in range(200):
        ew = math.exp(w)
        step = (w * ew - x) / (ew * (w + 1.0))
        w -= step
        if abs(step) <= tol * max(1.0, abs(w)):
            break
    return w


@dataclass(frozen=True)
class StagePlan:
    """Vertical schedule of an M-stage search."""

    M: int
    delta: float
    H0: float
    h_prime_min: float

    def spacing(self, m: int) -> float:
        if not 1 <= m <= self.M:
            raise ValueError("stage index out of range")
        return 2.0 ** (self.M - m) * self.delta


def optimal_stage_count(H0: float, delta: float) -> int:
    """Stage count minimizing the total critical-trajectory length."""
    if H0 <= 0 or delta <= 0:
        raise ValueError("H0 and delta must be positive")
    m = lambert_w(H0 * math.log(2.0) / delta) / math.log(2.0)
    return max(1, int(round(m)))


def gap_bound(d0_tilde: float, delta_eff: float, L: float, h_min: float) -> float:
    """Distance gap bound to the global optimum at vertical resolution delta."""
    if d0_tilde < h_min:
        raise ValueError("gap bound requires d0 >= H_min")
    return 2.0 * delta_eff * math.sqrt(d0_tilde ** 2 - h_min ** 2) / L


# ---------------------------------------------------------------------------
# interval bookkeeping
# ---------------------------------------------------------------------------

@dataclass
class IntervalStore:
    """Per-user LOS stripes, kept disjoint in x per sweep height."""

    I1: list = field(default_factory=list)
    I2: list = field(default_factory=list)

    def of(self, user_index: int) -> list:
        return self.I1 if user_index == 1 else self.I2

    def add(self, stripe: LosStripe):
        """Insert a stripe, merging with same-height same-side overlaps."""
        bucket = self.of(stripe.user_index)
        lo, hi = stripe.x_inner, stripe.x_outer
        height, sign = stripe.height, stripe.sign
        merged = []
        for other in bucket:
            if (
                abs(other.height - height) <= 1e-6
                and other.sign == sign
                and other.x_inner <= hi + 1e-9
                and lo <= other.x_outer + 1e-9
            ):
                lo = min(lo, other.x_inner)
                hi = max(hi, other.x_outer)
            else:
                merged.append(other)
        merged.append(_make_stripe(lo, hi, height, sign, stripe.user_index))
        bucket[:] = merged

    def arrays(self, user_index: int):
        bucket = self.of(user_index)
        if not bucket:
            return None
        return (
            np.array([s.x_inner for s in bucket]),
            np.array([s.x_outer for s in bucket]),
            np.array([s.height for s in bucket]),
            np.array([s.sign for s in bucket]),
        )


def _make_stripe(x_lo_abs: float, x_hi_abs: float, height: float, sign: float,
                 user_index: int) -> LosStripe:
    a = np.array([sign * x_lo_abs, 0.0, height])
    b = np.array([sign * x_hi_abs, 0.0, height])
    return LosStripe(a=a, b=b, user_index=user_index)


def _runs(mask: np.ndarray):
    """Index ranges [i, j] of maximal True runs."""
    out = []
    i = 0
    n = len(mask)
    while i < n:
        if mask[i]:
            j = i
            while j + 1 < n and mask[j + 1]:
                j += 1
            out.append((i, j))
            i = j + 1
        else:
            i += 1
    return out


def _stripes_from_run(xs: np.ndarray, height: float, user_index: int):
    """Split an LOS run of foot x's into sign-homogeneous stripes.

    Returns (stripes, axis_hit): a lattice point exactly on the vertical axis
    cannot join a stripe (the pair guard needs a definite side) and is
    reported separately.
    """
    stripes = []
    axis_hit = False
    for sign in (1.0, -1.0):
        sel = xs * sign > _TOL
        if sel.any():
            vals = np.abs(xs[sel])
            stripes.append(
                _make_stripe(float(vals.min()), float(vals.max()), height, sign,
                             user_index)
            )
    if np.any(np.abs(xs) <= _TOL):
        axis_hit = True
    return stripes, axis_hit


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepConfig:
    lattice_step: float
    h_min: float
    d0_cap: float


@dataclass
class SweepResult:
    stripes: list = field(default_factory=list)
    axis_hits: dict = field(default_factory=lambda: {1: False, 2: False})
    segments: list = field(default_factory=list)  # (start, end) frame points
    length: float = 0.0


def _lattice(lo: float, hi: float, step: float) -> np.ndarray:
    """Integer-multiples-of-step lattice inside [lo, hi] (includes 0 if valid)."""
    if hi < lo:
        return np.zeros(0)
    k0 = int(np.ceil(lo / step - 1e-9))
    k1 = int(np.floor(hi / step + 1e-9))
    if k1 < k0:
        return np.zeros(0)
    return step * np.arange(k0, k1 + 1, dtype=float)


def sweep_segment(env: Environment, frame: Frame, h_j: float, x_range,
                  cfg: SweepConfig, users=(1, 2)) -> SweepResult:
    """Harvest per-user LOS stripes along one horizontal sweep line.

    `x_range` is the requested range of S-plane foot x coordinates at height
    h_j.  At or above the flight floor the sweep walks plane S directly and
    one flown line serves both users.  Below the floor each user gets its own
    line on plane H (the central projection of the S line from that user),
    clipped to the cap constraint, and discovered runs are mapped back to
    their S feet.
    """
    if h_j <= 0:
        raise ValueError("sweep height must be positive")
    res = SweepResult()
    L = frame.L
    lo, hi = float(x_range[0]), float(x_range[1])
    if hi < lo:
        return res

    if h_j >= cfg.h_min:
        xs = _lattice(lo, hi, cfg.lattice_step)
        if xs.size == 0:
            return res
        pts = np.stack([xs, np.zeros_like(xs), np.full_like(xs, h_j)], axis=1)
        world = frame.to_world(pts)
        start, end = pts[0], pts[-1]
        res.segments.append((start, end))
        res.length += float(np.linalg.norm(end - start))
        for user in users:
            anchor = frame.u1 if user == 1 else frame.u2
            flags = env.los_visible_batch(anchor, world)
            for i, j in _runs(flags):
                stripes, axis_hit = _stripes_from_run(xs[i:j + 1], h_j, user)
                res.stripes.extend(stripes)
                res.axis_hits[user] |= axis_hit
        return res

    # below the floor: per-user central projection onto plane H
    rho = cfg.h_min / h_j
    radicand = cfg.d0_cap ** 2 - cfg.h_min ** 2 - (L * cfg.h_min) ** 2 / (4.0 * h_j ** 2)
    if radicand <= 0:
        return res
    x_cap = math.sqrt(radicand)
    h_lo = max(lo * rho, -x_cap)
    h_hi = min(hi * rho, x_cap)
    if h_hi < h_lo:
        return res
    xs_h = _lattice(h_lo, h_hi, cfg.lattice_step)
    if xs_h.size == 0:
        return res
    for user in users:
        y_line = (rho - 1.0) * L / 2.0 * (1.0 if user == 1 else -1.0)
        pts = np.stack(
            [xs_h, np.full_like(xs_h, y_line), np.full_like(xs_h, cfg.h_min)], axis=1
        )
        world = frame.to_world(pts)
        start, end = pts[0], pts[-1]
        res.segments.append((start, end))
        res.length += float(np.linalg.norm(end - start))
        anchor = frame.u1 if user == 1 else frame.u2
        flags = env.los_visible_batch(anchor, world)
        feet = xs_h / rho  # S-plane foot x of each observed H point
        for i, j in _runs(flags):
            stripes, axis_hit = _stripes_from_run(feet[i:j + 1], h_j, user)
            res.stripes.extend(stripes)
            res.axis_hits[user] |= axis_hit
    return res


# ---------------------------------------------------------------------------
# the M-stage search
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MultistageConfig:
    lattice_step: float | None = None  # defaults to min(delta, 5 m)
    value_fn: object = None
    altitude_cap: float = 1000.0
    prune: bool = True


@dataclass
class StageDiagnostics:
    stage: int
    spacing: float
    sweeps: int
    intervals_total: int
    intervals_pruned: int
    incumbent_d0: float
    bounded_regime: bool
    cap_radius: float


@dataclass
class MultistageResult:
    p_tilde: np.ndarray
    value: float
    total_search_length: float
    swept_length: float
    d0: float
    diagnostics: list
    store: IntervalStore
    plan: StagePlan


def _pair_matrix(store: IntervalStore, L: float, floor: float):
    """Solve every same-side stripe pair; returns candidate points and d0s."""
    arr1 = store.arrays(1)
    arr2 = store.arrays(2)
    if arr1 is None or arr2 is None:
        return None
    in1, out1, h1, sg1 = arr1
    in2, out2, h2, sg2 = arr2
    n1, n2 = len(in1), len(in2)
    I, J = np.meshgrid(np.arange(n1), np.arange(n2), indexing="ij")
    same = sg1[I] == sg2[J]
    d0 = np.full((n1, n2), np.inf)
    pts = np.zeros((n1, n2, 3))
    if same.any():
        ii, jj = np.nonzero(same)
        p, d = solve_stripe_pairs(
            in1[ii], out1[ii], h1[ii], in2[jj], out2[jj], h2[jj], L, floor=floor
        )
        p[:, 0] *= sg1[ii]
        d0[ii, jj] = d
        pts[ii, jj] = p
    return d0, pts


def _subtract_intervals(lo: float, hi: float, holes):
    """Remove a list of [lo, hi] holes from one interval; returns remainders."""
    pieces = [(lo, hi)]
    for h_lo, h_hi in holes:
        nxt = []
        for p_lo, p_hi in pieces:
            if h_hi <= p_lo or h_lo >= p_hi:
                nxt.append((p_lo, p_hi))
                continue
            if h_lo > p_lo:
                nxt.append((p_lo, min(h_lo, p_hi)))
            if h_hi < p_hi:
                nxt.append((max(h_hi, p_lo), p_hi))
        pieces = nxt
        if not pieces:
            break
    return pieces


def _signed_interval(stripe: LosStripe):
    if stripe.sign > 0:
        return stripe.x_inner, stripe.x_outer
    return -stripe.x_outer, -stripe.x_inner


def _chain_length(segments, start: np.ndarray) -> float:
    """Greedy nearest-neighbor connection length through segment endpoints."""
    pos = np.asarray(start, dtype=float)
    remaining = list(segments)
    total = 0.0
    while remaining:
        dists = []
        for k, (a, b) in enumerate(remaining):
            da = float(np.linalg.norm(pos - a))
            db = float(np.linalg.norm(pos - b))
            dists.append((min(da, db), k, da <= db))
        _, k, enter_at_a = min(dists, key=lambda t: t[0])
        a, b = remaining.pop(k)
        entry, exit_ = (a, b) if enter_at_a else (b, a)
        total += float(np.linalg.norm(pos - entry))
        pos = exit_
    return total


def run_multistage(env: Environment, frame: Frame, p0, delta: float, M: int,
                   cfg: MultistageConfig | None = None) -> MultistageResult:
    """Run the M-stage sweep search from a double-LOS start point."""
    cfg = cfg or MultistageConfig()
    if delta <= 0 or M < 1:
        raise ValueError("need delta > 0 and M >= 1")
    p0 = np.asarray(p0, dtype=float)
    if not env.double_los(frame.to_world(p0), frame.u1, frame.u2):
        raise InvalidStartError("initial point is not double-LOS")

    L = frame.L
    h_min = env.h_min
    lattice = cfg.lattice_step if cfg.lattice_step is not None else min(delta, 5.0)
    _, _, d0_start, _ = link_distances(p0, frame)

    def sweep_radius(d0_val: float) -> float:
        # Enlarged-cap radius: the plane/floor projections of cap points can
        # have larger critical distance than the points themselves outside the
        # bounded regime.  Capped at 2*d0 to keep the blow-up near d0 = L at
        # bay; inside the guarantee regime this equals d0 exactly.
        r = cap_region_from_d0(d0_val, L, h_min).b_tilde_radius
        return min(r, 2.0 * d0_val)

    r0 = sweep_radius(d0_start)
    H0 = math.sqrt(max(r0 ** 2 - L ** 2 / 4.0, 0.0))
    plan = StagePlan(
        M=M, delta=delta, H0=H0,
        h_prime_min=cap_region_from_d0(r0, L, h_min).h_prime_min,
    )

    store = IntervalStore()
    axis_low = {1: None, 2: None}  # lowest certified on-axis LOS height per user
    incumbent = p0.copy()
    d0_inc = d0_start
    diagnostics = []
    total_length = 0.0
    swept_length = 0.0
    chain_anchor = p0.copy()

    def register(res: SweepResult, height: float):
        for s in res.stripes:
            store.add(s)
        for user in (1, 2):
            if res.axis_hits[user]:
                if axis_low[user] is None or height < axis_low[user]:
                    axis_low[user] = height

    for m in range(1, M + 1):
        spacing = plan.spacing(m)
        r_cap = sweep_radius(d0_inc)
        h_prime = cap_region_from_d0(r_cap, L, h_min).h_prime_min
        stage_segments = []
        sweeps = 0

        if m == 1:
            # Clamp the coarse spacing when the cap band is thinner than the
            # schedule so the first stage explores at least one line.
            band = H0 - max(h_prime, 0.0)
            sp1 = spacing if band <= 0 else min(spacing, band)
            j = 1
            while True:
                h_j = H0 - j * sp1
                if h_j < h_prime - _TOL or h_j <= _TOL:
                    break
                x_half = math.sqrt(max(r_cap ** 2 - L ** 2 / 4.0 - h_j ** 2, 0.0))
                res = sweep_segment(
                    env, frame, h_j, (-x_half, x_half),
                    SweepConfig(lattice_step=lattice, h_min=h_min, d0_cap=r_cap),
                )
                register(res, h_j)
                stage_segments.extend(res.segments)
                total_length += res.length
                swept_length += res.length
                sweeps += 1
                j += 1
        else:
            for user in (1, 2):
                stripes = list(store.of(user))
                for stripe in stripes:
                    h_new = stripe.height - spacing
                    if h_new < h_prime or h_new <= _TOL:
                        continue
                    x_half = math.sqrt(
                        max(r_cap ** 2 - L ** 2 / 4.0 - h_new ** 2, 0.0)
                    )
                    s_lo, s_hi = _signed_interval(stripe)
                    s_lo = max(s_lo, -x_half)
                    s_hi = min(s_hi, x_half)
                    if s_hi < s_lo:
                        continue
                    # Probe only columns where this stripe is the lowest known
                    # LOS cover: below deeper stripes the status is implied.
                    holes = [
                        _signed_interval(o)
                        for o in stripes
                        if o is not stripe and o.height < stripe.height - 1e-6
                    ]
                    for p_lo, p_hi in _subtract_intervals(s_lo, s_hi, holes):
                        res = sweep_segment(
                            env, frame, h_new, (p_lo, p_hi),
                            SweepConfig(lattice_step=lattice, h_min=h_min,
                                        d0_cap=r_cap),
                            users=(user,),
                        )
                        register(res, h_new)
                        stage_segments.extend(res.segments)
                        total_length += res.length
                        swept_length += res.length
                        sweeps += 1

        total_length += _chain_length(stage_segments, chain_anchor)
        if stage_segments:
            chain_anchor = np.asarray(stage_segments[-1][1], dtype=float)

        # candidates: stripe pairs (floored to the flight level) and the axis
        solved = _pair_matrix(store, L, floor=h_min)
        if solved is not None:
            d0_mat, pts_mat = solved
            finite = np.isfinite(d0_mat)
            if finite.any():
                flat = np.nonzero(finite.ravel())[0]
                cand_d0 = d0_mat.ravel()[flat]
                cand_pts = pts_mat.reshape(-1, 3)[flat]
                order = np.lexsort(
                    (cand_pts[:, 2], cand_pts[:, 1], cand_pts[:, 0], cand_d0)
                )
                k = order[0]
                if cand_d0[k] < d0_inc - _TOL:
                    incumbent = cand_pts[k].copy()
                    d0_inc = float(cand_d0[k])
        if axis_low[1] is not None and axis_low[2] is not None:
            z_axis = max(axis_low[1], axis_low[2], h_min)
            d0_axis = math.sqrt(z_axis ** 2 + L ** 2 / 4.0)
            if d0_axis < d0_inc - _TOL:
                incumbent = np.array([0.0, 0.0, z_axis])
                d0_inc = d0_axis

        # pruning: drop intervals whose isolated best is provably dominated
        pruned = 0
        if cfg.prune and solved is not None:
            d0_mat, _ = solved
            thresh_delta = 2.0 ** (M - m + 1) * delta
            for user, axis in ((1, 1), (2, 0)):
                mins = np.min(d0_mat, axis=axis)
                keep = []
                for k, stripe in enumerate(store.of(user)):
                    dk = float(mins[k])
                    if not np.isfinite(dk):
                        keep.append(stripe)
                        continue
                    bound = thresh_delta * math.sqrt(max(dk ** 2 - h_min ** 2, 0.0)) / L
                    if dk - d0_inc > bound + _TOL:
                        pruned += 1
                    else:
                        keep.append(stripe)
                store.of(user)[:] = keep

        diagnostics.append(
            StageDiagnostics(
                stage=m,
                spacing=spacing,
                sweeps=sweeps,
                intervals_total=len(store.I1) + len(store.I2),
                intervals_pruned=pruned,
                incumbent_d0=d0_inc,
                bounded_regime=bool(d0_inc <= math.sqrt(2.0) * L / 2.0),
                cap_radius=r_cap,
            )
        )

    value = cfg.value_fn(d0_inc) if cfg.value_fn is not None else -d0_inc
    return MultistageResult(
        p_tilde=incumbent,
        value=value,
        total_search_length=total_length,
        swept_length=swept_length,
        d0=d0_inc,
        diagnostics=diagnostics,
        store=store,
        plan=plan,
    )


def diagnostics_csv_rows(result: MultistageResult):
    header = (
        "stage,spacing,sweeps,intervals_total,intervals_pruned,incumbent_d0,"
        "bounded_regime"
    )
    rows = [header]
    for d in result.diagnostics:
        rows.append(
            "%d,%.6f,%d,%d,%d,%.6f,%s"
            % (
                d.stage,
                d.spacing,
                d.sweeps,
                d.intervals_total,
                d.intervals_pruned,
                d.incumbent_d0,
                "true" if d.bounded_regime else "false",
            )
        )
    return rows
