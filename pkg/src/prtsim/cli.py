"""Command line entry point: ``prtsim simulate | sweep-saturation | compare-policies``."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .engine import SimConfig, SimulationError, load_config, run
from .experiments import SweepSpec, compare_policies, sweep_saturation
from .merge import PriorityPolicy
from .network import NetworkError, parse_network
from .routing import RoutingConfig, RoutingMode


def _int_list(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def _float_list(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="key = value file applied before the flags")
    p.add_argument("--network", type=Path, help="network file (default: bundled City benchmark)")
    p.add_argument("--vehicles", type=int)
    p.add_argument("--policy", choices=[x.value for x in PriorityPolicy])
    p.add_argument("--demand", type=float, help="groups per hour")
    p.add_argument("--routing", choices=[x.value for x in RoutingMode])
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--duration", type=float, help="simulated seconds")
    p.add_argument("--warmup", type=float, help="seconds excluded from metrics")
    p.add_argument("--dt", type=float, help="tick length in seconds")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", type=Path, default=Path("."), help="output directory")
    p.add_argument("--workers", type=int, default=1, help="parallel replications")


def build_config(args: argparse.Namespace) -> SimConfig:
    cfg = SimConfig()
    if args.config is not None:
        cfg = load_config(args.config.read_text(), cfg)
    if args.network is not None:
        cfg.network = parse_network(args.network.read_text())
    if args.vehicles is not None:
        cfg.n_vehicles = args.vehicles
    if args.policy is not None:
        cfg.policy = PriorityPolicy(args.policy)
    if args.demand is not None:
        cfg.demand = args.demand
    routing = {}
    if args.routing is not None:
        routing["mode"] = RoutingMode(args.routing)
    for k in ("alpha", "beta", "gamma"):
        if getattr(args, k) is not None:
            routing[k] = getattr(args, k)
    if routing:
        cfg.routing = replace(cfg.routing, **routing)
    if args.duration is not None:
        cfg.duration = args.duration
    if args.warmup is not None:
        cfg.warmup = args.warmup
    if args.dt is not None:
        cfg.limits = replace(cfg.limits, dt=args.dt)
    if args.seed is not None:
        cfg.seed = args.seed
    cfg.validate()
    return cfg


def _fmt(x) -> str:
    return "n/a" if x is None else f"{x:.2f}"


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = build_config(args)
    args.out.mkdir(parents=True, exist_ok=True)
    res = run(cfg, trace=args.trace)
    (args.out / "trips.csv").write_text(res.trips_csv())
    print(f"full trips:  {len(res.trips)}")
    print(f"ASD:         {_fmt(res.asd_pct)} %")
    print(f"avg wait:    {_fmt(res.avg_wait_s)} s")
    print(f"served:      {res.served} of {res.generated} groups created after warmup")
    print("at horizon:  " + ", ".join(f"{k}={v}" for k, v in res.status_counts.items()))
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    cfg = build_config(args)
    base_seed = cfg.seed
    spec = SweepSpec(tuple(args.counts), args.threshold, tuple(range(base_seed, base_seed + args.seeds)))
    res = sweep_saturation(cfg, spec, workers=args.workers, out=args.out)
    for n, a in res.mean_asd.items():
        print(f"{n:5d} vehicles  ASD {_fmt(a)} %")
    if res.saturation is None:
        print(f"threshold {spec.threshold:g} % not reached")
    else:
        print(f"saturation at {res.saturation:.1f} vehicles")
    return 0


def cmd_compare(args: argparse.Namespace) -> int:
    cfg = build_config(args)
    seeds = tuple(range(cfg.seed, cfg.seed + args.seeds))
    res = compare_policies(cfg, tuple(PriorityPolicy), args.demands, seeds, workers=args.workers, out=args.out)
    for d in res.demands:
        for p in res.policies:
            print(f"{d:6g} gph  {p.value:8s} wait {_fmt(res.mean_wait(p, d))} s  ASD {_fmt(res.mean_asd(p, d))} %")
    return 0


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="prtsim", description="Autonomous transit network simulator")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one simulation and write trips.csv")
    _common(p)
    p.add_argument("--trace", type=Path, help="per-tick vehicle trace CSV")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep-saturation", help="ASD over fleet sizes and the saturation point")
    _common(p)
    p.add_argument("--counts", type=_int_list, default=list(SweepSpec().counts))
    p.add_argument("--threshold", type=float, default=SweepSpec().threshold)
    p.add_argument("--seeds", type=int, default=3, help="replications per count, seeds seed..seed+k-1")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("compare-policies", help="waiting time and ASD per priority rule and demand")
    _common(p)
    p.add_argument("--demands", type=_float_list, default=[320.0, 480.0, 960.0])
    p.add_argument("--seeds", type=int, default=3, help="paired replications, seeds seed..seed+k-1")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except (NetworkError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SimulationError as exc:
        print(f"simulation aborted: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
