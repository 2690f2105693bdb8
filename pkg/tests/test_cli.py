import hashlib
import json
import shutil
from pathlib import Path

import pytest

from finsent import cli
from finsent.market import read_aligned_csv
from finsent.pipeline import ARTIFACTS, PipelineConfig, derive_seed, sha256_file


def artifacts(out: Path) -> dict[str, str]:
    return {p.name: sha256_file(p) for p in sorted(out.iterdir()) if not p.name.endswith(".manifest.json")}


def manifests_without_timings(out: Path) -> dict[str, dict]:
    result = {}
    for p in sorted(out.glob("*.manifest.json")):
        data = json.loads(p.read_text())
        data.pop("timings")
        result[p.name] = data
    return result


@pytest.fixture(scope="module")
def sample_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("run") / "out"
    assert cli.main(["run", "--sample", "--out", str(out)]) == 0
    return out


def test_full_pipeline_outputs(sample_run):
    names = {p.name for p in sample_run.iterdir()}
    assert set(ARTIFACTS.values()) <= names
    assert {"chart.svg", "chart.csv"} <= names
    stages = ["ingest", "topics", "filter", "annotate", "lexicon", "train", "predict-lexicon", "predict-boost", "evaluate", "correlate"]
    assert {f"{s}.manifest.json" for s in stages} <= names
    evaluation = json.loads((sample_run / "evaluation.json").read_text())
    assert set(evaluation["all"]) == {"lexicon", "boost", "textblob", "vader"}
    assert "held_out" in evaluation and 0 <= evaluation["agreement_lexicon_boost"] <= 1


def test_rerun_is_byte_identical(sample_run, tmp_path):
    out = tmp_path / "again"
    assert cli.main(["run", "--sample", "--out", str(out)]) == 0
    assert artifacts(out) == artifacts(sample_run)
    assert manifests_without_timings(out) == manifests_without_timings(sample_run)


def test_chart_twin_roundtrip(sample_run):
    table = read_aligned_csv(sample_run / "chart.csv")
    assert len(table) > 0
    rewritten = sample_run.parent / "twin.csv"
    from finsent.market import write_aligned_csv

    write_aligned_csv(table, rewritten)
    assert rewritten.read_bytes() == (sample_run / "chart.csv").read_bytes()


@pytest.mark.parametrize("stage,artifact", [("train", "model.json"), ("evaluate", "evaluation.json"), ("topics", "topics.json")])
def test_stage_isolation(sample_run, tmp_path, stage, artifact):
    out = tmp_path / "copy"
    shutil.copytree(sample_run, out)
    before = sha256_file(out / artifact)
    (out / artifact).unlink()
    assert cli.main([stage, "--sample", "--out", str(out)]) == 0
    assert sha256_file(out / artifact) == before


def test_manifest_completeness(sample_run):
    train = json.loads((sample_run / "train.manifest.json").read_text())
    assert set(train["inputs"]) == {"filtered", "ground_truth"}
    for entry in train["inputs"].values():
        assert entry["sha256"] == sha256_file(sample_run / entry["file"])
    assert train["outputs"] == {"model.json": sha256_file(sample_run / "model.json")}
    assert train["seed"] == derive_seed(2020, "train")
    assert "seconds" in train["timings"]
    correlate = json.loads((sample_run / "correlate.manifest.json").read_text())
    assert {"filtered", "predictions-boost", "prices"} <= set(correlate["inputs"])
    evaluate = json.loads((sample_run / "evaluate.manifest.json").read_text())
    assert {"ground_truth", "predictions-lexicon", "predictions-boost", "model", "scores-textblob", "scores-vader"} <= set(evaluate["inputs"])


def test_missing_input_exit_code(tmp_path, capsys):
    assert cli.main(["train", "--sample", "--out", str(tmp_path)]) == cli.EXIT_MISSING
    assert "filtered.jsonl" in capsys.readouterr().err


def test_missing_corpus_file(tmp_path):
    assert cli.main(["ingest", "--out", str(tmp_path), "--corpus", str(tmp_path / "nope.jsonl")]) == cli.EXIT_MISSING


def test_validation_exit_code(sample_run, tmp_path):
    out = tmp_path / "copy"
    shutil.copytree(sample_run, out)
    cfg = tmp_path / "c.ini"
    cfg.write_text("[topics]\nk = 3\n")
    assert cli.main(["filter", "--config", str(cfg), "--out", str(out)]) == cli.EXIT_VALIDATION
    cfg.write_text("[topics]\nbogus = 1\n")
    assert cli.main(["ingest", "--config", str(cfg), "--out", str(out)]) == cli.EXIT_VALIDATION


def test_single_class_train_fails(sample_run, tmp_path, capsys):
    out = tmp_path / "copy"
    shutil.copytree(sample_run, out)
    gt = json.loads((out / "ground_truth.json").read_text())
    gt["labels"] = {d: "positive" for d in gt["labels"]}
    (out / "ground_truth.json").write_text(json.dumps(gt))
    code = cli.main(["train", "--sample", "--out", str(out)])
    assert code != 0 and code == cli.EXIT_VALIDATION
    assert "single" in capsys.readouterr().err


def test_internal_error_exit_code(tmp_path, monkeypatch):
    def boom(cfg):
        raise RuntimeError("unexpected")

    monkeypatch.setattr(cli, "cmd_ingest", boom)
    assert cli.main(["ingest", "--sample", "--out", str(tmp_path)]) == cli.EXIT_INTERNAL


def test_flags_override_config(tmp_path):
    cfg_path = tmp_path / "c.ini"
    cfg_path.write_text("[paths]\ncorpus = docs.jsonl\n[topics]\nk = 4\nkeep = 1, 3\n[boost]\nn_rounds = 7\n[run]\nseed = 5\n")
    args = cli.build_parser().parse_args(["run", "--config", str(cfg_path), "--k", "6", "--n-rounds", "9", "--seed", "11"])
    cfg = cli.config_from_args(args)
    assert cfg.k == 6 and cfg.keep == (1, 3) and cfg.boost.n_rounds == 9 and cfg.seed == 11
    assert cfg.corpus == tmp_path / "docs.jsonl"
    plain = PipelineConfig.from_ini(cfg_path)
    assert plain.k == 4 and plain.boost.n_rounds == 7 and plain.seed == 5


def test_seed_derivation_scheme():
    expected = int.from_bytes(hashlib.sha256(b"2020/train").digest()[:4], "big")
    assert derive_seed(2020, "train") == expected
    assert derive_seed(2020, "train") != derive_seed(2020, "topics")
    assert derive_seed(2020, "train") != derive_seed(2021, "train")


def test_sample_config_is_bundled():
    assert cli.sample_config_path().is_file()
