import json

import pytest

from floquet_well import harness
from floquet_well.cli import main
from floquet_well.errors import NotFound
from floquet_well.tdse import DecayFit

SWEEP_CONFIG = {
    "drive": {"v1": 0.5, "omega": 2.0, "model": "A"},
    "sweep": {"parameter": "omega", "start": 2.0, "stop": 2.0, "steps": 0},
    "seeds": [[3.22, -0.0011]],
}

PAIR_SEEDS = [[3.22052, -0.00110412], [11.1205, -0.25062]]

TDSE_BLOCK = {"dx": 0.01, "dt": 0.02, "x_max": 25.0, "cap_start": 15.0, "record_every": 50}


def write_config(tmp_path, cfg, name="run.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def read_rows(path):
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# floquet-well ")
    header = lines[1].split(",")
    return [dict(zip(header, line.split(","))) for line in lines[2:]]


def test_static_reports_doublet(tmp_path, capsys):
    assert main(["--out", str(tmp_path), "static"]) == 0
    assert "re_E/v0" in capsys.readouterr().out
    rows = read_rows(tmp_path / "static.csv")
    assert abs(float(rows[0]["re_over_v0"]) - 0.322052) < 5e-6
    assert abs(float(rows[0]["im_over_v0"]) + 0.000110412) < 5e-6
    assert abs(float(rows[1]["re_over_v0"]) - 1.11205) < 5e-5
    assert abs(float(rows[1]["im_over_v0"]) + 0.025062) < 5e-5


def test_bad_geometry_exits_one(tmp_path, capsys):
    path = write_config(tmp_path, {"geometry": {"v0": -1.0, "a": 1.0, "b": 2.0}})
    assert main(["--config", path, "static"]) == 1
    assert "CONFIG_ERROR" in capsys.readouterr().err


def test_bad_seed_exits_one(capsys):
    assert main(["--seeds", "3.2+0.1j", "floquet"]) == 1
    assert "Im > 0" in capsys.readouterr().err


def test_sweep_without_block_is_config_error(tmp_path, capsys):
    path = write_config(tmp_path, {"seeds": [[3.22, -0.0011]]})
    assert main(["--config", path, "sweep"]) == 1
    assert "no sweep block" in capsys.readouterr().err


def test_zero_step_sweep_equals_single_root(tmp_path):
    path = write_config(tmp_path, SWEEP_CONFIG)
    assert main(["--config", path, "--out", str(tmp_path / "f"), "floquet"]) == 0
    assert main(["--config", path, "--out", str(tmp_path / "s"), "sweep"]) == 0
    single = (tmp_path / "f" / "floquet.csv").read_text()
    swept = (tmp_path / "s" / "sweep.csv").read_text()
    assert single == swept
    row = read_rows(tmp_path / "s" / "sweep.csv")[0]
    assert row["model"] == "A" and row["n_sidebands"] == "2"


def test_sweep_outputs_are_byte_identical(tmp_path):
    cfg = dict(SWEEP_CONFIG, sweep={"parameter": "omega", "start": 1.9, "stop": 2.1, "steps": 4})
    path = write_config(tmp_path, cfg)
    for out in ("one", "two"):
        assert main(["--config", path, "--out", str(tmp_path / out), "sweep"]) == 0
    for name in ("sweep.csv", "sweep.report.json", "sweep.trace.jsonl"):
        assert (tmp_path / "one" / name).read_bytes() == (tmp_path / "two" / name).read_bytes()
    assert len(read_rows(tmp_path / "one" / "sweep.csv")) == 5


def test_json_format(tmp_path):
    path = write_config(tmp_path, SWEEP_CONFIG)
    assert main(["--config", path, "--format", "json", "--out", str(tmp_path), "floquet"]) == 0
    payload = json.loads((tmp_path / "floquet.json").read_text())
    assert len(payload["rows"]) == 1
    assert payload["rows"][0]["param_name"] == "omega"


def test_sidebands_override(tmp_path):
    path = write_config(tmp_path, SWEEP_CONFIG)
    assert main(["--config", path, "--sidebands", "3", "--out", str(tmp_path), "floquet"]) == 0
    assert read_rows(tmp_path / "floquet.csv")[0]["n_sidebands"] == "3"


def test_version_and_usage():
    with pytest.raises(SystemExit) as info:
        main(["--version"])
    assert info.value.code == 0
    with pytest.raises(SystemExit) as info:
        main(["teleport"])
    assert info.value.code == 2


def test_crossing_below_critical_amplitude_is_direct(tmp_path):
    cfg = {
        "drive": {"v1": 1.0, "omega": 7.9, "model": "A"},
        "sweep": {"parameter": "omega", "start": 6.9, "stop": 8.9, "steps": 50},
        "seeds": PAIR_SEEDS,
    }
    path = write_config(tmp_path, cfg)
    assert main(["--config", path, "--out", str(tmp_path), "crossing"]) == 0
    payload = json.loads((tmp_path / "crossing.json").read_text())
    assert payload["kind"] == "direct"
    assert 7.8 <= payload["omega_star"] <= 8.0
    assert payload["stability_exchanged"] is False


def test_crossing_config_errors(tmp_path, capsys):
    cfg = {
        "drive": {"v1": 1.0, "omega": 7.9},
        "sweep": {"parameter": "omega", "start": 6.9, "stop": 8.9, "steps": 50},
        "seeds": PAIR_SEEDS,
    }
    path = write_config(tmp_path, cfg)
    assert main(["--config", path, "--seeds", "3.22052-0.00110412j", "crossing"]) == 1
    assert "two seeds" in capsys.readouterr().err

    path = write_config(tmp_path, {"drive": {"v1": 1.0, "omega": 7.9}, "seeds": PAIR_SEEDS}, "bare.json")
    assert main(["--config", path, "crossing"]) == 1
    assert "omega sweep block" in capsys.readouterr().err

    amplitude = dict(cfg, sweep={"parameter": "v1", "start": 0.5, "stop": 1.0, "steps": 2})
    path = write_config(tmp_path, amplitude, "v1.json")
    assert main(["--config", path, "crossing"]) == 1


def test_critical_amplitude_report(tmp_path):
    cfg = {
        "drive": {"model": "A"},
        "critical": {
            "v1_start": 1.0, "v1_stop": 2.0, "v1_step": 0.5,
            "omega_start": 6.9, "omega_stop": 8.9, "omega_steps": 50,
        },
        "seeds": PAIR_SEEDS,
    }
    path = write_config(tmp_path, cfg)
    assert main(["--config", path, "--out", str(tmp_path), "critical-amplitude"]) == 0
    payload = json.loads((tmp_path / "critical.json").read_text())
    assert payload["v1_critical"] == 2.0
    assert [r["v1"] for r in payload["reports"]] == [1.0, 1.5, 2.0]
    assert [r["kind"] for r in payload["reports"]] == ["direct", "direct", "avoided"]
    assert "gaps_monotone" in payload and "stays_avoided" in payload


def test_duality_check_on_reference_well_reports_mismatch(tmp_path):
    cfg = {"drive": {"v1": 0.5, "omega": 2.0}, "seeds": PAIR_SEEDS[:1]}
    path = write_config(tmp_path, cfg)
    assert main(["--config", path, "--out", str(tmp_path), "duality-check"]) == 0
    payload = json.loads((tmp_path / "duality.json").read_text())
    assert payload["spectra_agree"] is False
    assert payload["gauge_defect"] is None
    assert payload["delta"] > 0.0


def test_duality_check_on_thick_barrier(tmp_path):
    cfg = {
        "geometry": {"v0": 10.0, "a": 1.0, "b": 4.0},
        "drive": {"v1": 0.5, "omega": 1.0, "sidebands": 10},
        "seeds": [[3.22, -1e-9]],
    }
    path = write_config(tmp_path, cfg)
    assert main(["--config", path, "--out", str(tmp_path), "duality-check"]) == 0
    payload = json.loads((tmp_path / "duality.json").read_text())
    assert payload["spectra_agree"] is True
    assert payload["gauge_defect"] < 1e-6


def test_nondecay_table(tmp_path):
    cfg = {
        "drive": {"v1": 0.5, "omega": 2.0},
        "nondecay": {"periods": 2, "samples_per_period": 8},
        "seeds": PAIR_SEEDS[:1],
    }
    path = write_config(tmp_path, cfg)
    assert main(["--config", path, "--out", str(tmp_path), "nondecay"]) == 0
    rows = read_rows(tmp_path / "nondecay.csv")
    assert len(rows) == 17
    assert float(rows[0]["p"]) == 1.0
    assert all(0.0 < float(r["p"]) <= 1.0 + 1e-9 for r in rows)


def test_tdse_validate_static_well(tmp_path):
    cfg = {
        "tdse": dict(TDSE_BLOCK, t_final=1400.0),
        "seeds": PAIR_SEEDS[:1],
    }
    path = write_config(tmp_path, cfg)
    assert main(["--config", path, "--out", str(tmp_path), "tdse-validate"]) == 0
    payload = json.loads((tmp_path / "tdse.json").read_text())
    assert payload["agree"] is True
    assert payload["relative_error"] <= payload["tolerance"]


def test_tdse_disagreement_exits_three(tmp_path, monkeypatch):
    monkeypatch.setattr(harness, "fit_decay", lambda *args, **kwargs: DecayFit(1.0, 1.0, 10, 0.0))
    cfg = {
        "tdse": dict(TDSE_BLOCK, t_final=10.0),
        "seeds": PAIR_SEEDS[:1],
    }
    path = write_config(tmp_path, cfg)
    assert main(["--config", path, "--out", str(tmp_path), "tdse-validate"]) == 3
    payload = json.loads((tmp_path / "tdse.json").read_text())
    assert payload["agree"] is False


def test_crossing_forwards_allow_strong(tmp_path, monkeypatch):
    seen = {}

    def stop_sweep(*args, **kwargs):
        seen.update(kwargs)
        raise NotFound("no branches")

    monkeypatch.setattr(harness, "sweep", stop_sweep)
    cfg = {
        "drive": {"v1": 1.0, "omega": 7.9, "allow_strong": True},
        "sweep": {"parameter": "omega", "start": 6.9, "stop": 8.9, "steps": 10},
        "seeds": PAIR_SEEDS,
    }
    path = write_config(tmp_path, cfg)
    assert main(["--config", path, "crossing"]) == 2
    assert seen["allow_strong"] is True
