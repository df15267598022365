from __future__ import annotations

import csv
import xml.etree.ElementTree as ET

import pytest

from prtsim.cli import main
from prtsim.engine import SimConfig
from prtsim.experiments import (
    COMPARE_COLUMNS,
    SWEEP_COLUMNS,
    SweepSpec,
    compare_policies,
    run_many,
    sweep_saturation,
)
from prtsim.merge import PriorityPolicy
from prtsim.metrics import TRIP_COLUMNS
from prtsim.network import emit_network, parse_network

SMALL = SimConfig(duration=600.0, warmup=120.0, demand=480.0)

NET = """\
node a station
node b station
segment s1 a b 500 road
segment s2 b a 500 road
"""


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_sweep_spec_validation():
    with pytest.raises(ValueError):
        SweepSpec(counts=(96, 48))
    with pytest.raises(ValueError):
        SweepSpec(threshold=0)
    with pytest.raises(ValueError):
        SweepSpec(seeds=())


def test_small_sweep_outputs(tmp_path):
    spec = SweepSpec(counts=(24, 48), threshold=1000.0, seeds=(0, 1))
    res = sweep_saturation(SMALL, spec, out=tmp_path)
    rows = read_csv(tmp_path / "sweep.csv")
    assert tuple(rows[0]) == SWEEP_COLUMNS
    assert [(int(r[0]), int(r[1])) for r in rows[1:]] == [(24, 0), (24, 1), (48, 0), (48, 1)]
    assert set(res.mean_asd) == {24, 48}
    assert res.saturation is None
    ET.fromstring((tmp_path / "sweep.svg").read_text())


def test_small_compare_outputs(tmp_path):
    res = compare_policies(SimConfig(n_vehicles=48, duration=600.0, warmup=120.0),
                           demands=(480.0,), seeds=(3,), out=tmp_path)
    rows = read_csv(tmp_path / "compare.csv")
    assert tuple(rows[0]) == COMPARE_COLUMNS
    assert [r[0] for r in rows[1:]] == [p.value for p in PriorityPolicy]
    assert all(r[2] == "3" for r in rows[1:])
    for p in PriorityPolicy:
        assert len(res.cell(p, 480.0)) == 1
    assert res.improvement(PriorityPolicy.HIGHWAY_FIRST, 480.0) == 0.0
    ET.fromstring((tmp_path / "compare.svg").read_text())


def test_parallel_matches_serial():
    cfgs = [SimConfig(n_vehicles=48, duration=400.0, warmup=60.0, seed=s) for s in (0, 1)]
    serial = [r.trips_csv for r in run_many(cfgs, workers=1)]
    parallel = [r.trips_csv for r in run_many(cfgs, workers=2)]
    assert serial == parallel


def test_cli_simulate(tmp_path, capsys):
    net = tmp_path / "pair.net"
    net.write_text(NET)
    code = main(["simulate", "--network", str(net), "--vehicles", "2", "--demand", "120",
                 "--duration", "900", "--warmup", "0", "--out", str(tmp_path / "o"),
                 "--trace", str(tmp_path / "t.csv")])
    assert code == 0
    rows = read_csv(tmp_path / "o" / "trips.csv")
    assert tuple(rows[0]) == TRIP_COLUMNS
    assert len(rows) > 1
    assert "ASD" in capsys.readouterr().out
    assert (tmp_path / "t.csv").stat().st_size > 0


def test_cli_config_file(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("vehicles = 24\nduration = 300\nwarmup = 0\npolicy = road\n")
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path)]) == 0


def test_cli_bad_network_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.net"
    bad.write_text(NET.replace("500 road\nsegment s2", "500 highway\nsegment s2"))
    assert main(["simulate", "--network", str(bad), "--out", str(tmp_path)]) == 2
    assert "highway" in capsys.readouterr().err


def test_cli_sweep_and_compare(tmp_path, capsys):
    common = ["--duration", "300", "--warmup", "60", "--out", str(tmp_path)]
    assert main(["sweep-saturation", "--counts", "24,48", "--seeds", "1", *common]) == 0
    assert (tmp_path / "sweep.csv").exists()
    assert main(["compare-policies", "--vehicles", "48", "--demands", "480", "--seeds", "1", *common]) == 0
    assert len(read_csv(tmp_path / "compare.csv")) == 4
    assert "slider" in capsys.readouterr().out


def test_bundled_network_emits_and_reparses(tmp_path):
    from prtsim.benchmark import build_city_benchmark

    text = emit_network(build_city_benchmark())
    path = tmp_path / "city.net"
    path.write_text(text)
    assert parse_network(path.read_text()) == build_city_benchmark()
