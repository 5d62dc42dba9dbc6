"""HTTP service wrapping the placement toolkit.

Endpoints mirror the CLI: generate a synthetic map, plan one placement for a
user pair on a map, or run a full benchmark scenario.  Request and response
schemas are pydantic models; handlers are plain functions so the CLI can call
them in-process without a running server.
"""

from __future__ import annotations

import math
from typing import List, Optional

import numpy as np
from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from . import __version__
from .bench import Scheme, load_link_model, run_experiment, run_scheme
from .citygen import CityGenParams, generate_city
from .environment import Environment
from .errors import LosPlaceError
from .geometry import build_frame
from .links import RelayLinkModel


class BuildingModel(BaseModel):
    footprint: List[List[float]]
    height: float


class MapModel(BaseModel):
    bounds: List[float] = Field(min_length=4, max_length=4)
    h_min: float
    buildings: List[BuildingModel]

    @classmethod
    def from_env(cls, env: Environment) -> "MapModel":
        return cls(**env.to_dict())

    def to_env(self) -> Environment:
        return Environment.from_dict(self.model_dump())


class GenerateMapRequest(BaseModel):
    seed: int = 0
    bcr: float = 0.3
    bounds: List[float] = [0.0, 0.0, 500.0, 500.0]
    pitch: float = 50.0
    street: float = 12.0
    height_range: List[float] = [50.0, 80.0]


class GenerateMapResponse(BaseModel):
    map: MapModel
    achieved_bcr: float
    far: float
    building_count: int


class SchemeModel(BaseModel):
    kind: str
    step: float = 5.0
    delta: float = 3.0
    stages: int = 4
    h_2d: float = 120.0
    a: float = 2.60
    b: float = 0.05


class PlanRequest(BaseModel):
    map: MapModel
    u1: List[float] = Field(min_length=2, max_length=2)
    u2: List[float] = Field(min_length=2, max_length=2)
    algo: str = "alg2"
    step: float = 5.0
    delta: float = 3.0
    stages: int = 4
    h_2d: float = 120.0
    stat_a: float = 2.60
    stat_b: float = 0.05
    climb_step: float = 5.0
    link: Optional[dict] = None  # defaults to the relay model


class PlanResponse(BaseModel):
    scheme: str
    position: Optional[List[float]]
    feasible: bool
    objective: Optional[float]
    d0: Optional[float]
    search_length_m: float


class BenchRequest(BaseModel):
    config: dict


class BenchResponse(BaseModel):
    csv: str
    summary: List[dict]
    n_pairs: int


def handle_generate_map(req: GenerateMapRequest) -> GenerateMapResponse:
    params = CityGenParams(
        seed=req.seed,
        bounds=tuple(req.bounds),
        target_bcr=req.bcr,
        pitch=req.pitch,
        street=req.street,
        height_range=tuple(req.height_range),
    )
    env = generate_city(params)
    return GenerateMapResponse(
        map=MapModel.from_env(env),
        achieved_bcr=env.bcr(),
        far=env.far(),
        building_count=len(env.buildings),
    )


def handle_plan(req: PlanRequest) -> PlanResponse:
    env = req.map.to_env()
    u1 = np.array([req.u1[0], req.u1[1], 0.0])
    u2 = np.array([req.u2[0], req.u2[1], 0.0])
    frame = build_frame(u1, u2)
    link_cfg = req.link or {"relay": {}}
    model, f = load_link_model(link_cfg)
    relay_model = model if isinstance(model, RelayLinkModel) else None
    scheme = Scheme.from_dict(
        {
            "kind": req.algo,
            "step": req.step,
            "delta": req.delta,
            "stages": req.stages,
            "h_2d": req.h_2d,
            "a": req.stat_a,
            "b": req.stat_b,
        }
    )
    result = run_scheme(scheme, env, frame, f, relay_model, pair_id=0,
                        climb_step=req.climb_step)
    return PlanResponse(
        scheme=result.scheme,
        position=None if result.position is None else [float(v) for v in result.position],
        feasible=result.feasible,
        objective=None if math.isnan(result.objective) else float(result.objective),
        d0=None if math.isnan(result.d0) else float(result.d0),
        search_length_m=float(result.search_length),
    )


def handle_bench(req: BenchRequest) -> BenchResponse:
    pairs, _results, csv_text, summary = run_experiment(req.config)
    return BenchResponse(csv=csv_text, summary=summary, n_pairs=len(pairs))


def create_app() -> FastAPI:
    app = FastAPI(title="losplace", version=__version__)

    @app.get("/health")
    def health():
        return {"status": "ok", "version": __version__}

    @app.post("/maps/generate", response_model=GenerateMapResponse)
    def generate_map(req: GenerateMapRequest):
        try:
            return handle_generate_map(req)
        except (LosPlaceError, ValueError) as exc:
            raise HTTPException(status_code=422, detail=str(exc))

    @app.post("/plan", response_model=PlanResponse)
    def plan(req: PlanRequest):
        try:
            return handle_plan(req)
        except (LosPlaceError, ValueError) as exc:
            raise HTTPException(status_code=422, detail=str(exc))

    @app.post("/bench", response_model=BenchResponse)
    def bench(req: BenchRequest):
        try:
            return handle_bench(req)
        except (LosPlaceError, ValueError, KeyError) as exc:
            raise HTTPException(status_code=422, detail=str(exc))

    return app


app = create_app()
