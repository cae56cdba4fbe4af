import csv
import json

import pytest
import yaml

from dcergm.cli import EXIT_CHECK, EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME, main
from dcergm.config import PRESETS, ConfigError, RunConfig, load_config, threads_from_env
from dcergm.graph import Graph, to_edge_list


def write_cfg(path, cfg):
    path.write_text(yaml.safe_dump(cfg))
    return str(path)


SAMPLE_CFG = {"model": {"n": 8, "theta": 0.4, "beta0": 0.0},
              "sampler": {"kind": "aux", "burnin": 10, "thinning": 1}, "n_samples": 12}


def test_sample_writes_jsonl(tmp_path):
    cfg = write_cfg(tmp_path / "c.yaml", SAMPLE_CFG)
    out = tmp_path / "out"
    assert main(["sample", "--config", cfg, "--seed", "3", "--out", str(out)]) == EXIT_OK
    lines = (out / "samples.jsonl").read_text().splitlines()
    assert len(lines) == 12
    assert {"index", "sum_degrees", "max_centered_degree", "phi_bar"} <= set(json.loads(lines[0]))


def test_sample_is_reproducible(tmp_path):
    cfg = write_cfg(tmp_path / "c.yaml", SAMPLE_CFG)
    for d in ("a", "b"):
        assert main(["sample", "--config", cfg, "--seed", "3", "--out", str(tmp_path / d)]) == EXIT_OK
    assert (tmp_path / "a" / "samples.jsonl").read_text() == (tmp_path / "b" / "samples.jsonl").read_text()


def test_sample_csv(tmp_path):
    cfg = write_cfg(tmp_path / "c.yaml", SAMPLE_CFG)
    assert main(["sample", "--config", cfg, "--format", "csv", "--out", str(tmp_path / "o")]) == EXIT_OK
    rows = list(csv.DictReader((tmp_path / "o" / "samples.csv").open()))
    assert len(rows) == 12


def test_negative_theta_is_config_error(tmp_path, capsys):
    cfg = write_cfg(tmp_path / "c.yaml", {"model": {"n": 8, "theta": -0.4}})
    assert main(["sample", "--config", cfg, "--out", str(tmp_path / "o")]) == EXIT_CONFIG
    assert "theta" in capsys.readouterr().err


def test_unknown_key_is_config_error(tmp_path):
    cfg = write_cfg(tmp_path / "c.yaml", {"modle": {}})
    assert main(["sample", "--config", cfg, "--out", str(tmp_path / "o")]) == EXIT_CONFIG


TEST_CFG = {"model": {"n": 6, "theta": 0.0, "beta0": 0.0, "encoding": "zero_one", "motif": "K12"},
            "detectors": [{"kind": "sum", "threshold": {"mode": "explicit", "value": 0.0}}]}


@pytest.mark.parametrize("graph, decision", [(Graph.empty(6), "accept"), (Graph.complete(6), "reject")])
def test_test_command_decisions(tmp_path, graph, decision):
    (tmp_path / "g.txt").write_text(to_edge_list(graph))
    cfg = write_cfg(tmp_path / "c.yaml", TEST_CFG)
    out = tmp_path / "o"
    assert main(["test", "--config", cfg, "--input", str(tmp_path / "g.txt"), "--out", str(out)]) == EXIT_OK
    assert json.loads((out / "decision.json").read_text())["decision"] == decision


def test_test_command_parse_error(tmp_path, capsys):
    (tmp_path / "g.txt").write_text("6\n0 1\n1 banana\n")
    cfg = write_cfg(tmp_path / "c.yaml", TEST_CFG)
    code = main(["test", "--config", cfg, "--input", str(tmp_path / "g.txt"), "--out", str(tmp_path / "o")])
    assert code == EXIT_RUNTIME
    assert "line 3" in capsys.readouterr().err


def test_oracle_command(tmp_path):
    cfg = write_cfg(tmp_path / "c.yaml", {"model": {"n": 3, "theta": 0.0}})
    out = tmp_path / "o"
    assert main(["oracle", "--config", cfg, "--out", str(out)]) == EXIT_OK
    assert json.loads((out / "oracle.json").read_text())["pass"] is True


def test_oracle_rejects_large_n(tmp_path):
    cfg = write_cfg(tmp_path / "c.yaml", {"model": {"n": 9, "theta": 0.2}})
    assert main(["oracle", "--config", cfg, "--out", str(tmp_path / "o")]) == EXIT_CONFIG


def test_phase_with_figure_preset_has_one_row_per_cell(tmp_path):
    # the full preset at small sizes: 9 cells x 2 sizes x 3 detectors
    cfg = write_cfg(tmp_path / "c.yaml", {
        "preset": ["theta1", "figure1"],
        "grid": {"n_list": [30, 40], "reps": 100},
        "sampler": {"burnin": 20, "thinning": 1, "per_chain": 100},
        "detectors": [
            {"kind": "sum", "threshold": {"mode": "anchored", "replications": 100}},
            {"kind": "max", "threshold": {"mode": "anchored", "replications": 100}},
            {"kind": "total", "threshold": {"mode": "calibrated", "replications": 100}},
        ]})
    out = tmp_path / "o"
    assert main(["phase", "--config", cfg, "--out", str(out)]) == EXIT_OK
    rows = list(csv.DictReader((out / "phase.csv").open()))
    assert len(rows) == 9 * 2 * 3
    assert {r["regime"] for r in rows} == {"Theta1"}


def test_missing_out_dir_created_or_refused(tmp_path, capsys):
    cfg = write_cfg(tmp_path / "c.yaml", {"model": {"n": 3, "theta": 0.0}})
    target = tmp_path / "deep" / "er"
    assert main(["oracle", "--config", cfg, "--out", str(target), "--no-mkdir"]) == EXIT_CONFIG
    assert "does not exist" in capsys.readouterr().err
    assert main(["oracle", "--config", cfg, "--out", str(target)]) == EXIT_OK
    assert target.is_dir()


def test_manifest_roundtrip(tmp_path):
    cfg = write_cfg(tmp_path / "c.yaml", SAMPLE_CFG)
    out = tmp_path / "o"
    assert main(["sample", "--config", cfg, "--seed", "17", "--out", str(out)]) == EXIT_OK
    manifest = json.loads((out / "manifest.json").read_text())
    again = RunConfig.from_dict(manifest["config"]).validate()
    assert again.to_dict() == manifest["config"]
    assert again.seed == 17
    # rerunning from the manifest reproduces the samples
    (tmp_path / "m.json").write_text(json.dumps({**manifest["config"], "out": str(tmp_path / "o2")}))
    assert main(["sample", "--config", str(tmp_path / "m.json")]) == EXIT_OK
    assert (tmp_path / "o2" / "samples.jsonl").read_text() == (out / "samples.jsonl").read_text()


def test_threads_env_override(monkeypatch):
    monkeypatch.setenv("DCERGM_THREADS", "3")
    assert threads_from_env(1) == 3
    monkeypatch.setenv("DCERGM_THREADS", "zero")
    with pytest.raises(ConfigError):
        threads_from_env(1)
    monkeypatch.delenv("DCERGM_THREADS")
    assert threads_from_env(2) == 2


def test_presets_validate():
    for name in PRESETS:
        RunConfig.from_dict({"subcommand": "phase", "preset": name}).validate()


def test_load_config_rejects_non_mapping(tmp_path):
    (tmp_path / "c.yaml").write_text("- 1\n- 2\n")
    with pytest.raises(ConfigError):
        load_config(tmp_path / "c.yaml")


def test_exit_codes_are_distinct():
    assert len({EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_CHECK}) == 4
