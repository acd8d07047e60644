import csv
import json

import pytest

from tailwalk import cli
from tailwalk.errors import ConfigError
from tailwalk.harness import ExperimentConfig, ExperimentReport, emit_report, run_experiment
from tailwalk.steplaw import CONFIG_A, CONFIG_C


def _cfg(**kw):
    base = {"command": "sample", "step": "C", "b": 1.0, "c": 0.0, "seed": 3, "replications": 50}
    base.update(kw)
    return ExperimentConfig.from_dict(base)


def _write(tmp_path, d, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(d))
    return str(path)


def test_config_validation():
    with pytest.raises(ConfigError):
        _cfg(replications=0)
    with pytest.raises(ConfigError):
        _cfg(command="plot")
    with pytest.raises(ConfigError):
        _cfg(step="Z")
    with pytest.raises(ConfigError):
        _cfg(step={"family": "shifted_lomax", "alpha": 1.5, "sigma": 1.0, "m": 0.5})
    with pytest.raises(ConfigError):
        _cfg(c="large")
    with pytest.raises(ConfigError):
        _cfg(colour="red")
    with pytest.raises(ConfigError):
        _cfg(seed=-1)
    with pytest.raises(ConfigError):
        _cfg(t_grid=[])
    cfg = _cfg(step=CONFIG_A.to_dict())
    assert cfg.step == CONFIG_A


def test_config_hash_ignores_scheduling():
    assert _cfg(workers=1).config_hash() == _cfg(workers=2, out="x").config_hash()
    assert _cfg(seed=1).config_hash() != _cfg(seed=2).config_hash()


def test_sample_rows_and_counts(tmp_path):
    rep = run_experiment(_cfg(out=str(tmp_path)))
    with open(tmp_path / "results.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 50
    assert list(rows[0]) == ["run_id", "tau", "s_tau", "log_lr", "crossed", "guard_hit", "accepted"]
    assert all(r["accepted"] == "1" and r["crossed"] == "1" for r in rows)
    est = rep.estimates
    assert est["accepted"] + est["rejected"] == est["attempts"]
    assert rep.diagnostics["violations"] <= est["attempts"]
    assert rep.exit_code == 0


def test_same_seed_same_bytes(tmp_path):
    for cmd in ("sample", "naive", "crosscheck"):
        a, b = tmp_path / f"{cmd}1", tmp_path / f"{cmd}2"
        run_experiment(_cfg(command=cmd, out=str(a), horizon=200))
        run_experiment(_cfg(command=cmd, out=str(b), horizon=200))
        assert (a / "results.csv").read_bytes() == (b / "results.csv").read_bytes()
        ma, mb = (json.loads((d / "manifest.json").read_text()) for d in (a, b))
        # only the output directory differs
        ma["manifest"]["config"].pop("out")
        mb["manifest"]["config"].pop("out")
        assert ma == mb


def test_parallel_and_serial_agree(tmp_path):
    a = run_experiment(_cfg(command="hitting", b_grid=[1.0, 4.0], replications=600, out=str(tmp_path / "s")))
    b = run_experiment(_cfg(command="hitting", b_grid=[1.0, 4.0], replications=600, workers=2,
                            out=str(tmp_path / "p")))
    assert (tmp_path / "s" / "results.csv").read_bytes() == (tmp_path / "p" / "results.csv").read_bytes()
    assert a.estimates == b.estimates


def test_manifest_roundtrip(tmp_path):
    rep = run_experiment(_cfg(out=str(tmp_path)))
    back = json.loads((tmp_path / "manifest.json").read_text())
    assert back == json.loads(json.dumps(rep.metadata()))
    m = back["manifest"]
    assert m["seed"] == 3 and m["c_resolved"] == 0.0
    assert len(m["config_hash"]) == 64
    assert {"numpy", "scipy", "numba", "tailwalk"} <= set(m["versions"])


def test_empty_report_files(tmp_path):
    rep = ExperimentReport("naive", ("run_id", "tau"), [], {}, {})
    emit_report(rep, tmp_path)
    assert (tmp_path / "results.csv").read_text() == "run_id,tau\n"
    assert json.loads((tmp_path / "manifest.json").read_text())["command"] == "naive"


def test_constants_pipeline():
    rep = run_experiment(_cfg(command="constants"))
    assert rep.estimates["threshold_root"] == pytest.approx(1.5, abs=1e-6)
    assert rep.estimates["signs_agree"]
    assert len(rep.rows) == 9


def test_dichotomy_config_a_negative_beyond_c():
    rep = run_experiment(_cfg(command="dichotomy", step="A", c="auto"))
    c = rep.estimates["c_resolved"]
    assert all(r["difference"] < 0 for r in rep.rows if r["alpha_or_t"] >= c)
    assert list(rep.columns) == ["alpha_or_t", "p", "q", "eps1", "eps2", "difference", "ratio_to_K"]


def test_auto_c_recorded():
    rep = run_experiment(_cfg(command="hitting", step="A", c="auto", replications=20, guard=200))
    assert rep.estimates["c_resolved"] >= 1.0
    assert rep.manifest["c_resolved"] == rep.estimates["c_resolved"]
    assert rep.diagnostics["guard_hits"] > 0
    assert rep.exit_code == 5


def test_cli_success(tmp_path, capsys):
    path = _write(tmp_path, {"command": "naive", "step": CONFIG_C.to_dict(), "b": 1.0, "horizon": 100})
    code = cli.main(["naive", "--config", path, "--out", str(tmp_path / "o"), "--seed", "4",
                     "--replications", "30"])
    assert code == 0
    assert len((tmp_path / "o" / "results.csv").read_text().splitlines()) == 31
    assert "crossing_frequency" in capsys.readouterr().out


@pytest.mark.parametrize("cmd,cfg,expected", [
    ("sample", {"step": "C", "replications": 0}, 2),
    ("sample", {"step": "C", "colour": 1}, 2),
    ("certify-c", {"step": "B"}, 3),
    ("constants", {"step": "B", "alpha_grid": [1.999]}, 4),
    ("naive", {"step": "C", "b": 1e6, "horizon": 5, "max_attempts": 3}, 5),
])
def test_cli_exit_codes(tmp_path, cmd, cfg, expected):
    path = _write(tmp_path, cfg)
    out = tmp_path / "out"
    assert cli.main([cmd, "--config", path, "--out", str(out), "--replications", "2"]
                    if "replications" not in cfg else [cmd, "--config", path, "--out", str(out)]) == expected
    err = json.loads((out / "manifest.json").read_text())
    assert err["exit_code"] == expected


def test_cli_unreadable_config(tmp_path):
    assert cli.main(["sample", "--config", str(tmp_path / "missing.json"), "--out", str(tmp_path)]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert cli.main(["sample", "--config", str(bad), "--out", str(tmp_path)]) == 2
