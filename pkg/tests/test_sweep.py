import json

import pytest

from gridsched import io
from gridsched.cli import main
from gridsched.generator import GeneratorConfig
from gridsched.model import ConfigError, TimeGrid
from gridsched.sweep import SweepSpec, read_summary, run_sweep


@pytest.fixture
def base(tmp_path):
    doc = io.generator_to_dict(GeneratorConfig(fleet_size=3, rng_seed=4, grid=TimeGrid(96, 0.5, "Mon 00:00"),
                                               name="small"))
    path = tmp_path / "gen.json"
    path.write_text(json.dumps(doc))
    return path


def spec_file(tmp_path, base, axes, out="out", **extra):
    doc = {"base_scenario": base.name, "output_dir": out,
           "axes": [{"parameter": p, "values": v} for p, v in axes], **extra}
    path = tmp_path / f"{out}.sweep.json"
    path.write_text(json.dumps(doc))
    return path


def body(path):
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# ")
    return lines[1:]


def test_rows_and_columns(tmp_path, base):
    spec = SweepSpec.load(spec_file(tmp_path, base, [("eta", [None, 0.3]), ("direction_mode", ["uni", "v2g"])]))
    rows = read_summary(run_sweep(spec, jobs=1))
    assert len(rows) == 4
    assert list(rows[0])[:4] == ["run_id", "eta", "direction_mode", "status"]
    assert {"mu_CBD", "xi_Rural", "total_cost"} <= set(rows[0])
    assert all(r["status"] == "ok" for r in rows)
    for r in rows:
        assert (tmp_path / "out" / f"run-{r['run_id']}" / "report.json").exists()


def test_cost_rises_as_eta_falls(tmp_path, base):
    spec = SweepSpec.load(spec_file(tmp_path, base, [("eta", [None, 0.6, 0.3, 0.0])], overrides={
        "direction_mode": "v2g"}))
    rows = read_summary(run_sweep(spec, jobs=1))
    costs = [float(r["total_cost"]) for r in rows if r["status"] == "ok"]
    assert all(a <= b + 1e-6 for a, b in zip(costs, costs[1:]))


def test_degenerate_sweep_matches_solve(tmp_path, base):
    scenario = tmp_path / "s.json"
    main(["generate", str(base), "-o", str(scenario)])
    main(["solve", str(scenario), "--eta", "0.3", "-o", str(tmp_path / "solo")])
    path = tmp_path / "one.sweep.json"
    path.write_text(json.dumps({"base_scenario": "s.json", "output_dir": "one",
                                "axes": [{"parameter": "eta", "values": [0.3]}]}))
    rows = read_summary(run_sweep(SweepSpec.load(path), jobs=1))
    run_dir = tmp_path / "one" / f"run-{rows[0]['run_id']}"
    for f in (tmp_path / "solo").iterdir():
        assert (run_dir / f.name).read_bytes() == f.read_bytes(), f.name


def test_failed_run_is_recorded(tmp_path):
    base = tmp_path / "over.json"
    main(["generate", "overloaded_generator", "-o", str(base)])
    spec = SweepSpec.load(spec_file(tmp_path, base, [("eta", [None, 0.0])]))
    rows = read_summary(run_sweep(spec, jobs=1))
    assert [r["status"] for r in rows] == ["ok", "infeasible"]
    assert "cap[Rural," in rows[1]["message"]


def test_resume_and_determinism(tmp_path, base):
    path = spec_file(tmp_path, base, [("price_profile", ["rt", "nd", "re"])])
    spec = SweepSpec.load(path)
    first = body(run_sweep(spec, jobs=1))
    marker = next((tmp_path / "out").glob("run-*")) / "result.json"
    stamp = marker.stat().st_mtime_ns
    assert body(run_sweep(spec, jobs=1)) == first
    assert marker.stat().st_mtime_ns == stamp  # cached
    assert body(run_sweep(spec, jobs=2, force=True)) == first
    assert marker.stat().st_mtime_ns != stamp


def test_generator_axes(tmp_path, base):
    spec = SweepSpec.load(spec_file(tmp_path, base, [("rng_seed", [1, 2]), ("fleet_size", [2])]))
    rows = read_summary(run_sweep(spec, jobs=1))
    assert len({r["run_id"] for r in rows}) == 2


def test_generator_axis_needs_generator_base(tmp_path, base):
    scenario = tmp_path / "s.json"
    main(["generate", str(base), "-o", str(scenario)])
    path = tmp_path / "x.sweep.json"
    path.write_text(json.dumps({"base_scenario": "s.json", "output_dir": "x",
                                "axes": [{"parameter": "fleet_size", "values": [2]}]}))
    rows = read_summary(run_sweep(SweepSpec.load(path), jobs=1))
    assert rows[0]["status"] == "invalid" and "fleet_size" in rows[0]["message"]


def test_run_limit(tmp_path, base):
    with pytest.raises(ConfigError):
        SweepSpec.load(spec_file(tmp_path, base, [("eta", [0.1, 0.2, 0.3])], max_runs=2))
    assert main(["sweep", str(spec_file(tmp_path, base, [("eta", [0.1, 0.2])], out="o2", max_runs=1))]) == 2


def test_unknown_axis(tmp_path, base):
    with pytest.raises(ConfigError) as err:
        SweepSpec.load(spec_file(tmp_path, base, [("battery", [1])]))
    assert err.value.field == "axes[0].parameter"


def test_cli_sweep(tmp_path, base, capsys):
    path = spec_file(tmp_path, base, [("constrained_zones", ["all", ["CBD"]]), ("eta", [0.0])])
    assert main(["sweep", str(path), "--jobs", "2"]) == 0
    assert "2 runs, 0 not ok" in capsys.readouterr().out
