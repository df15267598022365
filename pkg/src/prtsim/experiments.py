"""Saturation sweeps and priority-policy comparisons over replicated runs."""

from __future__ import annotations

import csv
import math
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

from .engine import SimConfig, run
from .merge import PriorityPolicy
from .metrics import SimResult, find_saturation
from . import svg

SWEEP_COLUMNS = ("n_vehicles", "seed", "asd_pct", "avg_wait_s")
COMPARE_COLUMNS = ("policy", "demand_gph", "seed", "asd_pct", "avg_wait_s")


@dataclass(frozen=True)
class SweepSpec:
    counts: tuple[int, ...] = (48, 72, 96, 120, 144, 192, 240, 280, 320)
    threshold: float = 25.0
    seeds: tuple[int, ...] = (0, 1, 2)

    def __post_init__(self) -> None:
        if not self.counts:
            raise ValueError("sweep needs at least one vehicle count")
        if any(b <= a for a, b in zip(self.counts, self.counts[1:])):
            raise ValueError("vehicle counts must be strictly increasing")
        if self.threshold <= 0:
            raise ValueError("threshold must be positive")
        if not self.seeds:
            raise ValueError("sweep needs at least one seed")


@dataclass(frozen=True)
class RunSummary:
    """The scalar outcome of one replication; cheap to ship between processes."""

    asd_pct: float | None
    avg_wait_s: float | None
    trips_csv: str
    generated: int
    served: int
    unserved: int
    status_counts: dict
    join_stats: dict

    @classmethod
    def of(cls, res: SimResult) -> "RunSummary":
        return cls(
            res.asd_pct,
            res.avg_wait_s,
            res.trips_csv(),
            res.generated,
            res.served,
            res.unserved,
            res.status_counts,
            res.join_stats,
        )


def _run_one(cfg: SimConfig) -> RunSummary:
    return RunSummary.of(run(cfg))


def run_many(cfgs: Sequence[SimConfig], workers: int = 1) -> list[RunSummary]:
    """Run every config; results come back in input order whatever ``workers`` is."""
    if workers <= 1 or len(cfgs) <= 1:
        return [_run_one(c) for c in cfgs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_one, cfgs))


def _mean(vals) -> float | None:
    vals = [v for v in vals if v is not None]
    return statistics.fmean(vals) if vals else None


def _fmt(x: float | None) -> str:
    return "" if x is None else f"{x:.4f}"


@dataclass
class SweepResult:
    spec: SweepSpec
    rows: list[tuple[int, int, RunSummary]]
    mean_asd: dict[int, float | None] = field(default_factory=dict)
    saturation: float | None = None

    def write_csv(self, path: Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(SWEEP_COLUMNS)
            for n, seed, r in self.rows:
                w.writerow([n, seed, _fmt(r.asd_pct), _fmt(r.avg_wait_s)])

    def svg(self) -> str:
        pts = [(n, a) for n, a in self.mean_asd.items() if a is not None]
        return svg.line_chart(
            pts,
            title="ASD versus fleet size",
            x_label="vehicles",
            y_label="ASD [%]",
            hline=self.spec.threshold,
        )


def sweep_saturation(
    base: SimConfig, spec: SweepSpec = SweepSpec(), workers: int = 1, out: Path | None = None
) -> SweepResult:
    keys = [(n, s) for n in spec.counts for s in spec.seeds]
    cfgs = [replace(base, n_vehicles=n, seed=s) for n, s in keys]
    results = run_many(cfgs, workers)
    rows = sorted(((n, s, r) for (n, s), r in zip(keys, results)), key=lambda t: (t[0], t[1]))
    res = SweepResult(spec, rows)
    for n in spec.counts:
        res.mean_asd[n] = _mean(r.asd_pct for m, _, r in rows if m == n)
    pts = [(n, a) for n, a in res.mean_asd.items() if a is not None]
    if len(pts) >= 2:
        res.saturation = find_saturation(pts, spec.threshold)
    if out is not None:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        res.write_csv(out / "sweep.csv")
        (out / "sweep.svg").write_text(res.svg())
    return res


@dataclass
class CompareResult:
    rows: list[tuple[PriorityPolicy, float, int, RunSummary]]
    policies: tuple[PriorityPolicy, ...]
    demands: tuple[float, ...]

    def cell(self, policy: PriorityPolicy, demand: float) -> list[RunSummary]:
        return [r for p, d, _, r in self.rows if p is policy and d == demand]

    def mean_wait(self, policy: PriorityPolicy, demand: float) -> float | None:
        return _mean(r.avg_wait_s for r in self.cell(policy, demand))

    def mean_asd(self, policy: PriorityPolicy, demand: float) -> float | None:
        return _mean(r.asd_pct for r in self.cell(policy, demand))

    def improvement(self, policy: PriorityPolicy, demand: float, baseline=PriorityPolicy.HIGHWAY_FIRST) -> float:
        """Relative reduction of mean waiting time against ``baseline`` (0.1 means 10% shorter)."""
        b = self.mean_wait(baseline, demand)
        o = self.mean_wait(policy, demand)
        if b is None or o is None or b == 0:
            return math.nan
        return (b - o) / b

    def write_csv(self, path: Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(COMPARE_COLUMNS)
            for p, d, seed, r in self.rows:
                w.writerow([p.value, f"{d:g}", seed, _fmt(r.asd_pct), _fmt(r.avg_wait_s)])

    def svg(self) -> str:
        groups = [f"{d:g} groups/h" for d in self.demands]
        series = {p.value: [self.mean_wait(p, d) or 0.0 for d in self.demands] for p in self.policies}
        return svg.grouped_bars(groups, series, title="Average waiting time", y_label="wait [s]")


def compare_policies(
    base: SimConfig,
    policies: Sequence[PriorityPolicy] = tuple(PriorityPolicy),
    demands: Sequence[float] = (320.0, 480.0, 960.0),
    seeds: Sequence[int] = (0, 1, 2),
    workers: int = 1,
    out: Path | None = None,
) -> CompareResult:
    """Every (policy, demand) cell runs the same seeds, so cells are paired."""
    if not policies or not demands or not seeds:
        raise ValueError("need at least one policy, demand and seed")
    keys = [(p, float(d), s) for p in policies for d in demands for s in seeds]
    cfgs = [replace(base, policy=p, demand=d, seed=s) for p, d, s in keys]
    results = run_many(cfgs, workers)
    order = {p: i for i, p in enumerate(policies)}
    rows = sorted(
        ((p, d, s, r) for (p, d, s), r in zip(keys, results)), key=lambda t: (order[t[0]], t[1], t[2])
    )
    res = CompareResult(rows, tuple(policies), tuple(float(d) for d in demands))
    if out is not None:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        res.write_csv(out / "compare.csv")
        (out / "compare.svg").write_text(res.svg())
    return res
