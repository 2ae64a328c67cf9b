import json
import math
from pathlib import Path

import pytest

from rydsense import __version__, cli, scenarios
from rydsense.errors import ConfigError, SolverError
from rydsense.scenarios import (
    SCENARIOS,
    Table,
    config_hash,
    csv_text,
    emit_csv,
    resolve_config,
    run_scenario,
    run_three_photon,
    write_outputs,
)

GOLDEN = Path(__file__).parent / "golden"

FAST = {"velocity_points": 61, "detuning_points": 21}


def fast(name, **extra):
    doc = {"scenario": name, "numerics": dict(FAST)}
    if name in ("fig3_power", "fig4b_density_response", "fig5_transit"):
        doc["field_grid_mV_cm"] = {"start": 0.0, "stop": 0.5, "points": 3}
    if name == "fig2b_at":
        doc["fields_mV_cm"] = [3.0]
    if name == "fig4a_fwhm_vs_density":
        doc["sweep"] = {"parameter": "conditions.density_cm3", "start": 1e10, "stop": 2e11, "points": 2}
    if name == "fig6_three_photon":
        doc["trace_rf_rabi_kHz"] = [0.0, 100.0]
        doc["response_rf_rabi_kHz"] = [0.0, 1.0]
    doc.update(extra)
    return doc


@pytest.mark.parametrize("name", SCENARIOS)
def test_resolved_defaults_match_golden(name):
    golden = json.loads((GOLDEN / f"{name}.json").read_text())
    assert resolve_config(scenario=name) == golden


def test_presets_carry_caption_parameters():
    cfg = resolve_config(scenario="fig2b_at")
    assert (cfg["scheme"]["probe_rabi_MHz"], cfg["scheme"]["coupling_rabi_MHz"]) == (1.8, 0.5)
    cfg = resolve_config(scenario="fig3_power")
    b = cfg["budget"]
    assert (b["laser_kHz"], b["transit_kHz"], b["collisional_kHz"], b["magnetic_kHz"], b["rydberg_rydberg_kHz"]) == (
        70.0, 300.0, 6.0, 50.0, 0.0)
    couplings = [s["scheme"]["coupling_rabi_MHz"] for s in cfg["series"]]
    assert couplings == [3.3, 3.3, 2.7, 2.7, 2.7]
    for name in ("fig4a_fwhm_vs_density", "fig4b_density_response"):
        cfg = resolve_config(scenario=name)
        assert (cfg["scheme"]["probe_rabi_MHz"], cfg["scheme"]["coupling_rabi_MHz"]) == (1.3, 0.8)
        assert cfg["conditions"]["coupling_diameter_mm"] == 0.5
    cfg = resolve_config(scenario="fig4a_fwhm_vs_density")
    assert (cfg["sweep"]["start"], cfg["sweep"]["stop"]) == (1e10, 2e11)
    cfg = resolve_config(scenario="fig5_transit")
    assert (cfg["scheme"]["probe_rabi_MHz"], cfg["scheme"]["coupling_rabi_MHz"]) == (1.7, 0.7)
    assert [s["conditions"]["coupling_diameter_mm"] for s in cfg["series"]] == [0.32, 0.5, 1.1]
    s = resolve_config(scenario="fig6_three_photon")["scheme"]
    assert (s["probe_rabi_MHz"], s["dressing_rabi_MHz"], s["coupling_rabi_MHz"]) == (1.8, 1.8, 0.05)
    assert (s["probe_detuning_MHz"], s["dressing_detuning_MHz"]) == (500.0, -500.0)
    assert (s["coupling_detuning_MHz"], s["rf_detuning_MHz"]) == (0.005, 0.005)
    c = resolve_config(scenario="fig6_three_photon")["conditions"]
    assert c["coupling_diameter_mm"] == c["probe_diameter_mm"] == 5.0


@pytest.mark.parametrize("doc", [
    {"scenario": "nope"},
    {},
    {"scenario": "custom", "bogus": 1},
    {"scenario": "custom", "scheme": {"bogus_MHz": 1.0}},
    {"scenario": "custom", "sweep": {"parameter": "scheme.rf_rabi_MHz", "start": 0, "stop": 1, "points": 1}},
    {"scenario": "custom", "sweep": {"parameter": "scheme.nope", "start": 0, "stop": 1, "points": 3}},
    {"scenario": "custom", "sweep": {"parameter": "scheme.rf_rabi_MHz", "start": -1, "stop": 1, "points": 3}},
    {"scenario": "custom", "numerics": {"velocity_points": 100}},
    {"scenario": "custom", "numerics": {"detuning_span_MHz": 0}},
    {"scenario": "custom", "conditions": {"length_cm": -1}},
    {"scenario": "custom", "budget": {"laser_kHz": "fast"}},
    {"scenario": "custom", "numerics": {"doppler_free": 1}},
    {"scenario": "fig3_power", "series": [{"label": "x", "colour": "red"}]},
    {"scenario": "fig3_power", "series": [{"scheme": {"probe_rabi_MHz": -1}}]},
    {"scenario": "fig2b_at", "fields_mV_cm": []},
    {"scenario": "fig3_power", "field_grid_mV_cm": {"start": 1, "stop": 0, "points": 5}},
])
def test_schema_violations_raise(doc):
    with pytest.raises(ConfigError):
        resolve_config(doc)


def test_partial_override_keeps_other_defaults():
    cfg = resolve_config({"scenario": "custom", "scheme": {"probe_rabi_MHz": 2.5}})
    assert cfg["scheme"]["probe_rabi_MHz"] == 2.5
    assert cfg["scheme"]["coupling_rabi_MHz"] == 1.0
    assert resolve_config({"scenario": "custom"}, doppler_free=True)["numerics"]["doppler_free"] is True


def test_identical_endpoints_give_identical_rows():
    res = run_scenario(fast("custom", sweep={"parameter": "scheme.rf_rabi_MHz", "start": 0.4, "stop": 0.4,
                                             "points": 2}))
    rows = res.primary.rows
    assert len(rows) == 2 and rows[0] == rows[1]


def test_csv_layout(tmp_path):
    table = Table("t", (("x", "MHz"), ("y", "1")), [(1, 0.1), (2, 1 / 3)])
    path = emit_csv(table, tmp_path / "out.csv", "custom", "abc")
    raw = path.read_bytes()
    assert b"\r" not in raw
    lines = raw.decode("utf-8").split("\n")
    assert lines[0] == f"# rydsense scenario=custom version={__version__} config_hash=abc"
    assert lines[1] == "x (MHz),y (1)"
    assert lines[2:] == ["1,0.1", f"2,{1 / 3!r}", ""]
    assert float(lines[3].split(",")[1]) == 1 / 3


def test_empty_table_creates_no_file(tmp_path):
    target = tmp_path / "empty.csv"
    with pytest.raises(ValueError):
        emit_csv(Table("t", (("x", "1"),)), target)
    assert not target.exists()
    assert list(tmp_path.iterdir()) == []


def test_unwritable_path(tmp_path):
    with pytest.raises(OSError):
        emit_csv(Table("t", (("x", "1"),), [(1,)]), tmp_path / "missing" / "out.csv")


def test_outputs_and_sidecar(tmp_path):
    res = run_scenario(fast("fig2b_at"), threads=1)
    written = write_outputs(res, tmp_path / "at.csv")
    names = sorted(p.name for p in written)
    assert names == ["at.csv", "at.json", "at.traces.csv"]
    side = json.loads((tmp_path / "at.json").read_text())
    assert side["config"] == res.config
    assert side["config_hash"] == config_hash(res.config)
    assert side["config"]["scheme"]["coupling_rabi_MHz"] == 0.5


@pytest.mark.parametrize("name", SCENARIOS)
def test_byte_identical_across_thread_counts(name):
    doc = fast(name)
    a = run_scenario(doc, threads=1)
    b = run_scenario(doc, threads=4)
    for ta, tb in zip(a.tables, b.tables):
        assert csv_text(ta, a.scenario, a.config_hash) == csv_text(tb, b.scenario, b.config_hash)


def test_solver_failure_names_sweep_point(monkeypatch):
    def boom(*args, **kwargs):
        raise SolverError("singular", detuning=1.0)

    monkeypatch.setattr(scenarios, "doppler_averaged_trace", boom)
    with pytest.raises(SolverError, match=r"scheme.rf_rabi_MHz=0.0: singular") as err:
        run_scenario(fast("custom"))
    assert err.value.detuning == 1.0


def test_doppler_free_at_splitting_follows_field():
    doc = {"scenario": "fig2b_at", "fields_mV_cm": [0.9988], "numerics": {"doppler_free": True}}
    res = run_scenario(doc)
    (row,) = res.primary.rows
    assert row[1] == pytest.approx(2.23, rel=1e-3)
    assert row[2] == pytest.approx(row[1], rel=0.02)


def test_three_photon_zero_field_no_change():
    res = run_three_photon(fast("fig6_three_photon"))
    resp = res.table("response")
    assert resp.rows[0][2] == 0.0 and resp.rows[0][3] == 0.0
    assert res.summary["field_at_1kHz_nV_cm"] == pytest.approx(447.867, rel=1e-5)
    assert res.summary["field_at_1kHz_nV_cm"] == pytest.approx(500, rel=0.15)


def test_grid_refinement_changes_summaries_below_one_percent():
    base = {"scenario": "fig4a_fwhm_vs_density",
            "sweep": {"parameter": "conditions.density_cm3", "start": 3e10, "stop": 1e11, "points": 2},
            "numerics": {"velocity_points": 1001}}
    coarse = run_scenario(base)
    fine_doc = json.loads(json.dumps(base))
    fine_doc["numerics"]["detuning_points"] = 2 * coarse.config["numerics"]["detuning_points"] - 1
    fine = run_scenario(fine_doc)
    for col in ("fwhm", "absorbance_fwhm"):
        assert coarse.column(col) == pytest.approx(fine.column(col), rel=0.01)
    at = {"scenario": "fig2b_at", "fields_mV_cm": [2.0, 4.0], "numerics": {"doppler_free": True}}
    c = run_scenario(at).column("splitting")
    at["numerics"]["detuning_points"] = 801
    f = run_scenario(at).column("splitting")
    assert c == pytest.approx(f, rel=0.01)


@pytest.mark.slow
def test_fwhm_density_slope_matches_collisional_coefficient():
    # Linewidth of the transmission peak over 1-20 x 10^10 cm^-3 should rise
    # at the calculated collisional rate of 1.7e-13 cm^3 MHz.
    res = run_scenario({"scenario": "fig4a_fwhm_vs_density"})
    slope = res.summary["fwhm_slope_cm3_MHz"]
    print(f"fwhm slope {slope:.4g} cm^3 MHz, absorbance-width slope "
          f"{res.summary['absorbance_fwhm_slope_cm3_MHz']:.4g}")
    assert slope == pytest.approx(1.7e-13, rel=0.15)


# CLI -----------------------------------------------------------------------

def test_cli_list_and_show(capsys):
    assert cli.main(["list-scenarios"]) == 0
    out = capsys.readouterr().out
    assert all(name in out for name in SCENARIOS)
    assert cli.main(["show-config", "--scenario", "fig5_transit"]) == 0
    shown = json.loads(capsys.readouterr().out)
    assert shown == resolve_config(scenario="fig5_transit")
    assert cli.main(["show-config", "--scenario", "nope"]) == 2


def test_cli_run_to_stdout_and_file(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps(fast("custom")))
    assert cli.main(["run", "--config", str(cfg)]) == 0
    out = capsys.readouterr().out
    assert out.startswith("# rydsense scenario=custom")
    assert cli.main(["run", "--config", str(cfg), "--out", str(tmp_path / "r.csv"), "--threads", "2"]) == 0
    assert (tmp_path / "r.csv").read_text() == out


def test_cli_exit_codes(tmp_path, monkeypatch):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert cli.main(["run", "--config", str(bad)]) == 2
    assert cli.main(["run", "--config", str(tmp_path / "missing.json")]) == 2
    bad.write_text(json.dumps({"scenario": "custom", "bogus": 1}))
    assert cli.main(["run", "--config", str(bad)]) == 2

    good = tmp_path / "good.json"
    good.write_text(json.dumps(fast("custom")))
    assert cli.main(["run", "--config", str(good), "--out", str(tmp_path / "nodir" / "x.csv")]) == 2

    monkeypatch.setenv("RYDSENSE_THREADS", "zero")
    assert cli.main(["run", "--config", str(good)]) == 2
    monkeypatch.setenv("RYDSENSE_THREADS", "2")

    def fail(*a, **k):
        raise SolverError("no unique steady state")

    monkeypatch.setattr(cli, "run_scenario", fail)
    assert cli.main(["run", "--config", str(good)]) == 3


def test_cli_doppler_free_flag(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"scenario": "fig2b_at", "fields_mV_cm": [2.0]}))
    assert cli.main(["run", "--config", str(cfg), "--doppler-free"]) == 0
    lines = capsys.readouterr().out.splitlines()
    split = float(lines[2].split(",")[2])
    assert not math.isnan(split)
    assert split == pytest.approx(4.4656, rel=0.02)
