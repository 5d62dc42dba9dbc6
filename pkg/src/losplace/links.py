"""Link-quality value functions and the min-link placement objective.

Two families are supported: Shannon capacity of a decode-and-forward relay
link under a log-distance path loss model, and a linear energy-harvesting
model for wireless power transfer.  Both are strictly decreasing in distance,
which is what ties maximizing the worse link to minimizing the critical
distance d0.

Shadow fading is applied as a deterministic worst-case margin added to the
path loss rather than as a random draw, so every search and benchmark is
reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import Frame, link_distances


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watts_to_dbm(w: float) -> float:
    return 10.0 * np.log10(w) + 30.0


@dataclass(frozen=True)
class RelayLinkModel:
    """Millimeter-wave relay link budget.

    los_pl / nlos_pl are (intercept dB, slope dB/decade, shadow margin dB).
    """

    bandwidth_hz: float = 1e9
    tx_power_dbm: float = 30.0
    noise_dbm_hz: float = -169.0
    los_pl: tuple = (61.4, 20.0, 1.0)
    nlos_pl: tuple = (72.0, 29.2, 5.0)

    def __post_init__(self):
        if self.bandwidth_hz <= 0:
            raise ValueError("bandwidth must be positive")
        for intercept, slope, sf in (self.los_pl, self.nlos_pl):
            if slope <= 0:
                raise ValueError("path loss slope must be positive")
            if sf < 0:
                raise ValueError("shadow margin must be non-negative")

    def path_loss(self, d, los: bool = True):
        """Path loss in dB including the deterministic shadow margin."""
        d = np.asarray(d, dtype=float)
        if np.any(d <= 0):
            raise ValueError("path loss undefined for non-positive distance")
        intercept, slope, sf = self.los_pl if los else self.nlos_pl
        out = intercept + slope * np.log10(d) + sf
        return float(out) if out.ndim == 0 else out

    def capacity(self, d):
        """Shannon capacity in bits/s under LOS path loss."""
        return self.capacity_with_condition(d, los=True)

    def capacity_with_condition(self, d, los: bool):
        """Capacity evaluated under an explicit LOS/NLOS condition."""
        pl = self.path_loss(d, los=los)
        rx_w = dbm_to_watts(self.tx_power_dbm) * 10.0 ** (-np.asarray(pl) / 10.0)
        noise_w = self.bandwidth_hz * dbm_to_watts(self.noise_dbm_hz)
        out = self.bandwidth_hz * np.log2(1.0 + rx_w / noise_w)
        return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class WptLinkModel:
    """Linear RF energy harvesting: f(d) = eta * P * beta / d^alpha."""

    efficiency: float = 0.6
    tx_power_w: float = 10.0
    ref_gain: float = 1e-3
    exponent: float = 3.0

    def __post_init__(self):
        if not (0.0 < self.efficiency <= 1.0):
            raise ValueError("efficiency must lie in (0, 1]")
        if self.exponent <= 0:
            raise ValueError("path loss exponent must be positive")
        if self.tx_power_w <= 0 or self.ref_gain <= 0:
            raise ValueError("power and reference gain must be positive")

    def power(self, d):
        """Harvested power in watts; defined for d >= 1 m (reference distance)."""
        d = np.asarray(d, dtype=float)
        if np.any(d < 1.0):
            raise ValueError("harvesting model undefined below the 1 m reference")
        out = self.efficiency * self.tx_power_w * self.ref_gain / d ** self.exponent
        return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class StatLosParams:
    """Environmental (a, b) pair of the logistic LOS-probability model."""

    a: float
    b: float
    degenerate: bool = False

    def __post_init__(self):
        if self.b < 0:
            raise ValueError("b must be non-negative")
        if self.a <= 0:
            raise ValueError("a must be positive")


def objective(f, p, frame: Frame) -> float:
    """Min-link objective F(p) = min(f(d1), f(d2)); equals f(d0)."""
    d1, d2, _, _ = link_distances(p, frame)
    return min(f(d1), f(d2))


def los_probability(params: StatLosParams, altitude, horizontal_dist):
    """Logistic LOS probability as a function of elevation geometry.

    The model reuses `a` both as scale and as angle offset; the horizontal
    distance 0 case is handled through the arctan -> pi/2 limit.
    """
    altitude = np.asarray(altitude, dtype=float)
    horizontal_dist = np.asarray(horizontal_dist, dtype=float)
    with np.errstate(divide="ignore"):
        angle = np.arctan2(altitude, horizontal_dist)
    expo = np.exp(-params.b * (angle - params.a))
    out = 1.0 / (1.0 + params.a * expo)
    return float(out) if out.ndim == 0 else out


def average_path_loss(params: StatLosParams, relay: RelayLinkModel, d, altitude,
                      horizontal_dist):
    """LOS-probability-weighted mean of the LOS and NLOS path losses."""
    p_los = los_probability(params, altitude, horizontal_dist)
    return p_los * relay.path_loss(d, los=True) + (1.0 - p_los) * relay.path_loss(
        d, los=False
    )


def statistical_objective(params: StatLosParams, relay: RelayLinkModel, p,
                          frame: Frame) -> float:
    """Max over users of the average path loss at p (smaller is better)."""
    p = np.asarray(p, dtype=float)
    d1, d2, _, _ = link_distances(p, frame)
    worst = -np.inf
    for d, u in ((d1, frame.u1_frame), (d2, frame.u2_frame)):
        r = float(np.hypot(p[0] - u[0], p[1] - u[1]))
        worst = max(worst, average_path_loss(params, relay, d, p[2], r))
    return worst


def fit_statistical_params(env, n_samples: int, seed: int,
                           relay: RelayLinkModel | None = None) -> StatLosParams:
    """Least-squares fit of (a, b) against empirical LOS frequency.

    Samples ground/aerial point pairs, bins them by elevation angle, and
    minimizes the squared error between the logistic model and the empirical
    per-bin LOS rate.  Falls back to a flagged boundary fit when every sample
    is LOS or every sample is NLOS.
    """
    from scipy.optimize import minimize

    rng = np.random.default_rng(seed)
    xmin, ymin, xmax, ymax = env.bounds
    ground = []
    while len(ground) < n_samples:
        g = np.array([rng.uniform(xmin, xmax), rng.uniform(ymin, ymax), 0.0])
        if not env.ground_blocked(g):
            ground.append(g)
    ground = np.asarray(ground)
    radius = rng.uniform(10.0, max(xmax - xmin, ymax - ymin) / 2.0, size=n_samples)
    bearing = rng.uniform(0.0, 2.0 * np.pi, size=n_samples)
    altitude = rng.uniform(env.h_min, env.h_min + 150.0, size=n_samples)
    aerial = np.stack(
        [
            ground[:, 0] + radius * np.cos(bearing),
            ground[:, 1] + radius * np.sin(bearing),
            altitude,
        ],
        axis=1,
    )
    los = np.array(
        [env.los_visible(g, p) for g, p in zip(ground, aerial)], dtype=float
    )
    if los.all():
        return StatLosParams(a=1e-6 + 0.0, b=0.0, degenerate=True)
    if not los.any():
        return StatLosParams(a=1e6, b=0.0, degenerate=True)

    angles = np.arctan2(altitude, radius)
    bins = np.linspace(0.0, np.pi / 2.0, 13)
    which = np.digitize(angles, bins) - 1
    centers, rates = [], []
    for k in range(len(bins) - 1):
        mask = which == k
        if mask.sum() >= 3:
            centers.append(0.5 * (bins[k] + bins[k + 1]))
            rates.append(los[mask].mean())
    centers = np.asarray(centers)
    rates = np.asarray(rates)

    def loss(theta):
        a, b = np.exp(theta[0]), np.exp(theta[1])
        model = 1.0 / (1.0 + a * np.exp(-b * (centers - a)))
        return float(np.sum((model - rates) ** 2))

    best = None
    for a0, b0 in ((2.6, 0.05), (10.0, 1.0), (60.0, 5.0)):
        res = minimize(loss, np.log([a0, b0]), method="Nelder-Mead",
                       options={"xatol": 1e-8, "fatol": 1e-12, "maxiter": 2000})
        if best is None or res.fun < best.fun:
            best = res
    a, b = np.exp(best.x)
    return StatLosParams(a=float(a), b=float(b))
