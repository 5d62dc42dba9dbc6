"""Scenario runner: user-pair batches, scheme dispatch, CSV output, summaries.

A scenario config selects a map (file or generator parameters), a user-pair
batch, one link model, and a list of schemes.  Each (pair, scheme) produces
one result row; rows are sorted by (pair_id, scheme) and formatted with fixed
float rules so identical configs always produce byte-identical CSV.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .baselines import PlacementResult, exhaustive_search, statistical_baseline
from .citygen import CityGenParams, generate_city, sample_user_pairs
from .environment import Environment, find_initial_double_los
from .errors import ConfigurationError, NoInitialPointError
from .geometry import build_frame
from .links import RelayLinkModel, StatLosParams, WptLinkModel, dbm_to_watts
from .multistage import MultistageConfig, run_multistage
from .planar import PlanarSearchConfig, run_planar_search

CSV_COLUMNS = (
    "pair_id,u1x,u1y,u2x,u2y,L,scheme,px,py,pz,feasible,objective,search_length_m"
)

_SCHEME_ALIASES = {
    "alg1": "alg1",
    "alg2": "alg2",
    "ex3d": "exhaustive3d",
    "exhaustive3d": "exhaustive3d",
    "ex2dh": "exhaustive2d_h",
    "exhaustive2d_h": "exhaustive2d_h",
    "ex2dv": "exhaustive2d_v",
    "exhaustive2d_v": "exhaustive2d_v",
    "stat": "statistical",
    "statistical": "statistical",
}


@dataclass(frozen=True)
class Scheme:
    """One benchmark scheme plus its per-kind parameters."""

    kind: str
    step: float = 5.0
    delta: float = 3.0
    stages: int = 4
    h_2d: float = 120.0
    stat_a: float = 2.60
    stat_b: float = 0.05

    def __post_init__(self):
        if self.kind not in _SCHEME_ALIASES.values():
            raise ConfigurationError("unknown scheme kind %r" % self.kind)
        if self.step <= 0:
            raise ConfigurationError("grid/search step must be positive")

    @classmethod
    def from_dict(cls, data: dict) -> "Scheme":
        kind = _SCHEME_ALIASES.get(str(data.get("kind", "")).lower())
        if kind is None:
            raise ConfigurationError("unknown scheme kind %r" % data.get("kind"))
        kwargs = {"kind": kind}
        for key in ("step", "delta", "h_2d", "stat_a", "stat_b"):
            if key in data:
                kwargs[key] = float(data[key])
        if "stages" in data:
            kwargs["stages"] = int(data["stages"])
        if "a" in data:
            kwargs["stat_a"] = float(data["a"])
        if "b" in data:
            kwargs["stat_b"] = float(data["b"])
        return cls(**kwargs)


def load_link_model(link_cfg: dict):
    """Build the value function from the scenario's link section."""
    if "relay" in link_cfg:
        c = link_cfg["relay"]
        sf = c.get("sf", [1.0, 5.0])
        pl_los = list(c.get("pl_los", [61.4, 20.0]))
        pl_nlos = list(c.get("pl_nlos", [72.0, 29.2]))
        model = RelayLinkModel(
            bandwidth_hz=float(c.get("W", 1e9)),
            tx_power_dbm=float(c.get("P_dbm", 30.0)),
            noise_dbm_hz=float(c.get("N0", -169.0)),
            los_pl=(pl_los[0], pl_los[1], float(sf[0])),
            nlos_pl=(pl_nlos[0], pl_nlos[1], float(sf[1])),
        )
        return model, model.capacity
    if "wpt" in link_cfg:
        c = link_cfg["wpt"]
        model = WptLinkModel(
            efficiency=float(c.get("eta", 0.6)),
            tx_power_w=dbm_to_watts(float(c["P_dbm"])) if "P_dbm" in c
            else float(c.get("P_w", 10.0)),
            ref_gain=float(c.get("beta", 1e-3)),
            exponent=float(c.get("alpha", 3.0)),
        )
        return model, model.power
    raise ConfigurationError("link config must contain 'relay' or 'wpt'")


def load_map(map_cfg: dict) -> Environment:
    if "path" in map_cfg:
        return Environment.load(map_cfg["path"])
    if "generate" in map_cfg:
        g = dict(map_cfg["generate"])
        params = CityGenParams(
            seed=int(g.get("seed", 0)),
            bounds=tuple(g.get("bounds", (0.0, 0.0, 500.0, 500.0))),
            target_bcr=float(g.get("target_bcr", g.get("bcr", 0.3))),
            pitch=float(g.get("pitch", 50.0)),
            street=float(g.get("street", 12.0)),
            height_range=tuple(g.get("height_range", (50.0, 80.0))),
        )
        return generate_city(params)
    raise ConfigurationError("map config must contain 'path' or 'generate'")


def run_scheme(scheme: Scheme, env: Environment, frame, f, relay_model,
               pair_id: int, climb_step: float = 5.0) -> PlacementResult:
    """Run one scheme for one pair; infeasible pairs yield a flagged row."""
    needs_p0 = scheme.kind in ("alg1", "alg2", "exhaustive3d", "exhaustive2d_v",
                               "statistical")
    p0 = None
    if needs_p0:
        try:
            p0 = find_initial_double_los(env, frame, (0.0, 0.0), climb_step)
        except NoInitialPointError:
            return PlacementResult(
                scheme=scheme.kind, pair_id=pair_id, position=None,
                objective=math.nan, search_length=0.0, feasible=False,
                d0=math.nan,
            )

    if scheme.kind == "alg1":
        res = run_planar_search(
            env, frame, p0, PlanarSearchConfig(step=scheme.step, value_fn=f)
        )
        d0 = math.sqrt(res.radius ** 2 + frame.L ** 2 / 4.0)
        return PlacementResult(
            scheme="alg1", pair_id=pair_id, position=frame.to_world(res.best),
            objective=float(f(d0)), search_length=res.trajectory.total_length,
            feasible=True, d0=d0,
        )
    if scheme.kind == "alg2":
        res = run_multistage(
            env, frame, p0, scheme.delta, scheme.stages, MultistageConfig(value_fn=f)
        )
        return PlacementResult(
            scheme="alg2", pair_id=pair_id, position=frame.to_world(res.p_tilde),
            objective=float(f(res.d0)), search_length=res.total_search_length,
            feasible=True, d0=res.d0,
        )
    if scheme.kind == "exhaustive3d":
        return exhaustive_search(env, frame, f, "3d", grid_step=scheme.step,
                                 p0=p0, pair_id=pair_id)
    if scheme.kind == "exhaustive2d_v":
        return exhaustive_search(env, frame, f, "2d_v", grid_step=scheme.step,
                                 p0=p0, pair_id=pair_id)
    if scheme.kind == "exhaustive2d_h":
        return exhaustive_search(env, frame, f, "2d_h", grid_step=scheme.step,
                                 h_2d=scheme.h_2d, pair_id=pair_id)
    if scheme.kind == "statistical":
        if relay_model is None:
            raise ConfigurationError(
                "statistical baseline requires a relay link model"
            )
        return statistical_baseline(
            env, frame, relay_model,
            StatLosParams(a=scheme.stat_a, b=scheme.stat_b),
            grid_step=scheme.step, p0=p0, pair_id=pair_id,
        )
    raise ConfigurationError("unhandled scheme kind %r" % scheme.kind)


def _fmt(v: float) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return "nan"
    return "%.10g" % v


def results_to_csv(pairs, results) -> str:
    """Render result rows as CSV, sorted by (pair_id, scheme)."""
    lines = [CSV_COLUMNS]
    rows = sorted(results, key=lambda r: (r.pair_id, r.scheme))
    for r in rows:
        u1, u2 = pairs[r.pair_id]
        L = float(np.linalg.norm(u2 - u1))
        pos = r.position if r.position is not None else (math.nan,) * 3
        lines.append(
            ",".join(
                [
                    str(r.pair_id),
                    _fmt(u1[0]), _fmt(u1[1]), _fmt(u2[0]), _fmt(u2[1]), _fmt(L),
                    r.scheme,
                    _fmt(pos[0]), _fmt(pos[1]), _fmt(pos[2]),
                    "true" if r.feasible else "false",
                    _fmt(r.objective),
                    _fmt(r.search_length),
                ]
            )
        )
    return "\n".join(lines) + "\n"


def run_experiment(config: dict):
    """Run a scenario config; returns (pairs, results, csv_text, summary rows)."""
    env = load_map(config["map"])
    pair_cfg = config["pairs"]
    pairs = sample_user_pairs(
        env,
        int(pair_cfg["n"]),
        float(pair_cfg.get("min_sep", 50.0)),
        float(pair_cfg.get("max_sep", 150.0)),
        int(pair_cfg.get("seed", 0)),
    )
    model, f = load_link_model(config["link"])
    relay_model = model if isinstance(model, RelayLinkModel) else None
    schemes = [Scheme.from_dict(s) for s in config["schemes"]]
    climb_step = float(config.get("climb_step", 5.0))

    results = []
    for pair_id, (u1, u2) in enumerate(pairs):
        frame = build_frame(u1, u2)
        for scheme in schemes:
            results.append(
                run_scheme(scheme, env, frame, f, relay_model, pair_id,
                           climb_step=climb_step)
            )
    csv_text = results_to_csv(pairs, results)
    reference = config.get("reference_scheme", "exhaustive3d")
    have = {r.scheme for r in results}
    summary = summarize(pairs, results, reference) if reference in have else []
    return pairs, results, csv_text, summary


def summarize(pairs, results, reference_scheme: str, buckets=None):
    """Per-scheme statistics plus a per-separation-bucket breakdown.

    Infeasible placements contribute zero objective (no service), which makes
    the ratios penalize schemes without an LOS guarantee.
    """
    schemes = sorted({r.scheme for r in results})
    if reference_scheme not in schemes:
        raise ConfigurationError(
            "reference scheme %r not present in results" % reference_scheme
        )
    if buckets is None:
        seps = [float(np.linalg.norm(u2 - u1)) for u1, u2 in pairs]
        lo = math.floor(min(seps) / 50.0) * 50.0
        hi = math.ceil(max(seps) / 50.0) * 50.0
        buckets = [(b, b + 50.0) for b in np.arange(lo, hi, 50.0)]

    def obj(r):
        return 0.0 if not r.feasible or math.isnan(r.objective) else r.objective

    by_scheme = {s: [r for r in results if r.scheme == s] for s in schemes}
    ref_mean = float(np.mean([obj(r) for r in by_scheme[reference_scheme]]))
    rows = []
    for s in schemes:
        rs = by_scheme[s]
        objs = [obj(r) for r in rs]
        rows.append(
            {
                "scheme": s,
                "bucket": "all",
                "n": len(rs),
                "mean_objective": float(np.mean(objs)) if objs else math.nan,
                "median_objective": float(np.median(objs)) if objs else math.nan,
                "ratio_to_reference": (
                    float(np.mean(objs)) / ref_mean if ref_mean > 0 else math.nan
                ),
                "mean_search_length_m": float(np.mean([r.search_length for r in rs])),
                "feasibility_rate": float(np.mean([r.feasible for r in rs])),
            }
        )
        for blo, bhi in buckets:
            sel = [
                r
                for r in rs
                if blo <= float(np.linalg.norm(pairs[r.pair_id][1] - pairs[r.pair_id][0])) < bhi
            ]
            if not sel:
                continue
            sel_ref = [
                r
                for r in by_scheme[reference_scheme]
                if blo <= float(np.linalg.norm(pairs[r.pair_id][1] - pairs[r.pair_id][0])) < bhi
            ]
            ref_b = float(np.mean([obj(r) for r in sel_ref])) if sel_ref else math.nan
            mean_b = float(np.mean([obj(r) for r in sel]))
            rows.append(
                {
                    "scheme": s,
                    "bucket": "[%g,%g)" % (blo, bhi),
                    "n": len(sel),
                    "mean_objective": mean_b,
                    "median_objective": float(np.median([obj(r) for r in sel])),
                    "ratio_to_reference": mean_b / ref_b if ref_b and ref_b > 0 else math.nan,
                    "mean_search_length_m": float(
                        np.mean([r.search_length for r in sel])
                    ),
                    "feasibility_rate": float(np.mean([r.feasible for r in sel])),
                }
            )
    return rows
