"""Command-line client.

Every subcommand builds the same request models the HTTP service consumes
and either sends them to a running server (--server URL) or executes the
handler in-process.  Outputs are written to files; the exit code reflects
success.
"""

from __future__ import annotations

import argparse
import json
import sys

from .service import (
    BenchRequest,
    GenerateMapRequest,
    MapModel,
    PlanRequest,
    handle_bench,
    handle_generate_map,
    handle_plan,
)


def _post(server: str, path: str, payload: dict) -> dict:
    import httpx

    resp = httpx.post(server.rstrip("/") + path, json=payload, timeout=3600.0)
    resp.raise_for_status()
    return resp.json()


def cmd_generate_map(args) -> int:
    req = GenerateMapRequest(
        seed=args.seed,
        bcr=args.bcr,
        bounds=[float(v) for v in args.bounds.split(",")],
        pitch=args.pitch,
        street=args.street,
        height_range=[float(v) for v in args.heights.split(",")],
    )
    if args.server:
        data = _post(args.server, "/maps/generate", req.model_dump())
        map_dict = data["map"]
        achieved = data["achieved_bcr"]
        count = data["building_count"]
    else:
        resp = handle_generate_map(req)
        map_dict = resp.map.model_dump()
        achieved = resp.achieved_bcr
        count = resp.building_count
    with open(args.out, "w") as fh:
        json.dump(map_dict, fh)
    print("wrote %s: %d buildings, BCR %.3f" % (args.out, count, achieved))
    return 0


def cmd_plan(args) -> int:
    with open(args.map) as fh:
        map_model = MapModel(**json.load(fh))
    link = None
    if args.link_config:
        with open(args.link_config) as fh:
            link = json.load(fh)
    req = PlanRequest(
        map=map_model,
        u1=[float(v) for v in args.u1.split(",")],
        u2=[float(v) for v in args.u2.split(",")],
        algo=args.algo,
        step=args.step,
        delta=args.delta,
        stages=args.stages,
        h_2d=args.h2d,
        link=link,
    )
    if args.server:
        data = _post(args.server, "/plan", req.model_dump())
    else:
        data = handle_plan(req).model_dump()
    with open(args.out, "w") as fh:
        json.dump(data, fh, indent=2)
    status = "feasible" if data["feasible"] else "INFEASIBLE"
    print(
        "%s: %s at %s, objective=%s, search=%.1f m"
        % (data["scheme"], status, data["position"], data["objective"],
           data["search_length_m"])
    )
    return 0


def cmd_bench(args) -> int:
    with open(args.config) as fh:
        config = json.load(fh)
    req = BenchRequest(config=config)
    if args.server:
        data = _post(args.server, "/bench", req.model_dump())
    else:
        data = handle_bench(req).model_dump()
    with open(args.out, "w", newline="") as fh:
        fh.write(data["csv"])
    summary_path = config.get("summary_out", args.out + ".summary.json")
    with open(summary_path, "w") as fh:
        json.dump(data["summary"], fh, indent=2)
    print(
        "wrote %s (%d pairs) and %s" % (args.out, data["n_pairs"], summary_path)
    )
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    uvicorn.run("losplace.service:app", host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="losplace",
        description="Geometry-based UAV placement with line-of-sight guarantees.",
    )
    parser.add_argument(
        "--server", default=None,
        help="base URL of a running losplace service; omit to run locally",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate-map", help="generate a synthetic city map")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--bcr", type=float, default=0.3)
    g.add_argument("--bounds", default="0,0,500,500",
                   help="xmin,ymin,xmax,ymax in meters")
    g.add_argument("--pitch", type=float, default=50.0)
    g.add_argument("--street", type=float, default=12.0)
    g.add_argument("--heights", default="50,80", help="low,high building heights")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate_map)

    p = sub.add_parser("plan", help="plan one placement for a user pair")
    p.add_argument("--map", required=True)
    p.add_argument("--u1", required=True, help="x,y of user 1")
    p.add_argument("--u2", required=True, help="x,y of user 2")
    p.add_argument("--algo", default="alg2",
                   choices=["alg1", "alg2", "ex3d", "ex2dh", "ex2dv", "stat"])
    p.add_argument("--step", type=float, default=5.0)
    p.add_argument("--delta", type=float, default=3.0)
    p.add_argument("--stages", type=int, default=4)
    p.add_argument("--h2d", type=float, default=120.0)
    p.add_argument("--link-config", default=None,
                   help="JSON file with a 'relay' or 'wpt' section")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_plan)

    b = sub.add_parser("bench", help="run a benchmark scenario")
    b.add_argument("--config", required=True, help="scenario JSON")
    b.add_argument("--out", required=True, help="results CSV path")
    b.set_defaults(func=cmd_bench)

    s = sub.add_parser("serve", help="run the HTTP service")
    s.add_argument("--host", default="127.0.0.1")
    s.add_argument("--port", type=int, default=8000)
    s.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
