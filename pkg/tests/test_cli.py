from __future__ import annotations

import json
from pathlib import Path

import pytest
from filelock import FileLock

from wikichurn.cli import RunConfig, main
from wikichurn.cli.config import parse_value
from wikichurn.errors import ConfigError

FIXTURES = Path(__file__).parent / "fixtures"
PLANTED = ["Pool001", "Pool002", "Pool004", "Pool007", "Pool008", "Pool012", "Pool014", "Pool018"]
STAGES = ("ingest", "curate", "featurize", "train", "evaluate", "ablate", "explain", "score")


def write_config(directory: Path, **extra) -> Path:
    cfg = {
        "seed": 7,
        "source": {"kind": "fixture", "fixture": str(FIXTURES / "pipeline")},
        "explain": {"n_samples": 500, "repeats": 3},
        "hyperparams": {"n_estimators": 30},
        "out": "run",
    }
    cfg.update(extra)
    path = directory / "config.json"
    path.write_text(json.dumps(cfg))
    return path


@pytest.fixture(scope="module")
def pipeline_run(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    cfg = write_config(root)
    codes = {stage: main([stage, "--config", str(cfg)]) for stage in STAGES}
    return root / "run", codes


def test_every_stage_succeeds(pipeline_run):
    _, codes = pipeline_run
    assert codes == {s: 0 for s in STAGES}


def test_artifacts_carry_headers(pipeline_run):
    out, _ = pipeline_run
    expected_hash = json.loads((out / "metrics.json").read_text())["_meta"]["config_hash"]
    for name in ("cohort/cohort.ndjson", "features.ndjson", "local_explanations.ndjson"):
        meta = json.loads((out / name).read_text().splitlines()[0])["_meta"]
        assert meta["config_hash"] == expected_hash and meta["seed"] == 7
    for name in ("ablation.csv", "importance.csv", "scores.csv", "features.csv", "correlation.csv"):
        first = (out / name).read_text().splitlines()[0]
        assert first.startswith(f"# config_hash={expected_hash} seed=7 command=")
    for name in ("ingest_report.json", "curation_report.json", "evaluation.json"):
        assert json.loads((out / name).read_text())["_meta"]["seed"] == 7
    assert f"config_hash={expected_hash}" in (out / "risk_report.md").read_text()
    assert json.loads((out / "model.json").read_text())["header"]["config_hash"] == expected_hash


def test_scores_flag_planted_editors(pipeline_run):
    out, _ = pipeline_run
    lines = (out / "scores.csv").read_text().splitlines()
    assert lines[1] == "editor,probability,flagged"
    flagged = sorted(l.split(",")[0] for l in lines[2:] if l.endswith(",1"))
    assert flagged == PLANTED
    report = (out / "risk_report.md").read_text()
    assert "## Local explanations" in report
    assert all(f"### {name}" in report for name in PLANTED)


def test_ablation_grid(pipeline_run):
    out, _ = pipeline_run
    rows = (out / "ablation.csv").read_text().splitlines()[2:]
    assert len(rows) == 13
    assert rows[0].startswith("G1,")


def test_evaluate_matches_train(pipeline_run):
    out, _ = pipeline_run
    a = json.loads((out / "metrics.json").read_text())
    b = json.loads((out / "evaluation.json").read_text())
    a.pop("_meta"), b.pop("_meta")
    assert a == b


def test_missing_seed_is_usage_error(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"source": {"kind": "fixture", "fixture": str(FIXTURES / "mini")}}))
    assert main(["ingest", "--config", str(cfg)]) == 2
    assert "seed" in capsys.readouterr().err


def test_unknown_override(tmp_path):
    cfg = write_config(tmp_path)
    assert main(["ingest", "--config", str(cfg), "--split.bogus", "1"]) == 2


def test_missing_artifact_names_producer(tmp_path, capsys):
    cfg = write_config(tmp_path)
    assert main(["train", "--config", str(cfg)]) == 1
    err = capsys.readouterr().err
    assert "features.ndjson" in err and "wikichurn featurize" in err


def test_bad_fixture_path(tmp_path):
    cfg = write_config(tmp_path, source={"kind": "fixture", "fixture": "nowhere"})
    assert main(["ingest", "--config", str(cfg)]) == 2


def test_locked_output_directory(tmp_path, capsys):
    cfg = write_config(tmp_path)
    (tmp_path / "run").mkdir()
    with FileLock(str(tmp_path / "run" / ".wikichurn.lock")):
        assert main(["ingest", "--config", str(cfg)]) == 1
    assert "in use" in capsys.readouterr().err


def test_flags_override_config(tmp_path, capsys):
    cfg = write_config(tmp_path)
    assert main(["ingest", "--config", str(cfg), "--out", str(tmp_path / "other"), "--seed", "3"]) == 0
    meta = json.loads((tmp_path / "other" / "ingest_report.json").read_text())["_meta"]
    assert meta["seed"] == 3


def test_make_fixture(tmp_path, capsys):
    assert main(["make-fixture", "pipeline", str(tmp_path / "fx"), "--seed", "7"]) == 0
    assert (tmp_path / "fx" / "editors.ndjson").read_bytes() == (FIXTURES / "pipeline" / "editors.ndjson").read_bytes()
    assert "Pool001" in capsys.readouterr().out


class TestRunConfig:
    def test_hash_ignores_workers_and_out(self, tmp_path):
        base = RunConfig.build(None, {"seed": 1, "source.fixture": "x"})
        other = RunConfig.build(None, {"seed": 1, "source.fixture": "x", "workers": 8, "out": "elsewhere"})
        changed = RunConfig.build(None, {"seed": 2, "source.fixture": "x"})
        assert base.hash() == other.hash() != changed.hash()
        assert len(base.hash()) == 16

    def test_dotted_and_free_form(self):
        cfg = RunConfig.build(None, {"seed": 1, "source.fixture": "x", "hyperparams.max_depth": 3, "split.stratified": False})
        assert cfg["hyperparams"] == {"max_depth": 3}
        assert cfg["split"]["stratified"] is False

    @pytest.mark.parametrize("bad", [
        {"seed": -1}, {"seed": True}, {"classifier": "svm"}, {"groups": "g9"},
        {"min_confidence": 1.5}, {"split.train_fraction": 1.0}, {"workers": 0},
        {"hyperparams.depth": 3}, {"source.kind": "ftp"},
    ])
    def test_validation(self, bad):
        with pytest.raises(ConfigError):
            RunConfig.build(None, {"seed": 1, "source.fixture": "x", **bad})

    def test_relative_paths_follow_config_file(self, tmp_path):
        path = write_config(tmp_path)
        assert RunConfig.build(path).out == tmp_path / "run"

    def test_parse_value(self):
        assert parse_value("3") == 3
        assert parse_value("false") is False
        assert parse_value('["tree"]') == ["tree"]
        assert parse_value("g1,g4") == "g1,g4"
