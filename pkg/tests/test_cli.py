"""End-to-end checks for the command-line interface."""

import json

import pytest
from click.testing import CliRunner

from emofusion.cli import main
from emofusion.fusion import ScoreSet, read_score_file, write_score_file

SPEC = {
    "num_classes": 3,
    "utterances_per_class": 8,
    "num_speakers": 6,
    "vocab_size": 25,
    "mean_tokens": 4.0,
    "mean_frames": 3.0,
    "feature_dim": 4,
}

CONFIG = {
    "seed": 9,
    "data": {"manifest": "corpus/manifest.jsonl"},
    "folds": 3,
    "text": {
        "kernel_sizes": [1, 2],
        "embed_dim": 6,
        "filters_per_module": 3,
        "batch_size": 8,
        "n_epochs": 2,
        "learning_rate": 0.05,
        "weight_grid": [0.0, 0.1],
    },
    "acoustic": {
        "lstm_units": [4],
        "dense_units": 4,
        "dropout": 0.0,
        "batch_size": 8,
        "n_epochs": 2,
        "learning_rate": 0.05,
    },
    "evector": {},
    "svm": {"n_epochs": 5},
}


def invoke(args):
    return CliRunner().invoke(main, [str(a) for a in args])


def invoke_ok(args):
    result = invoke(args)
    assert result.exit_code == 0, (result.output, result.stderr, result.exception)
    return result


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    """Run the whole pipeline once into a temp tree: synth, train, fuse."""
    work = tmp_path_factory.mktemp("cli")
    (work / "spec.json").write_text(json.dumps(SPEC), encoding="utf-8")
    corpus_dir = work / "corpus"
    synth = invoke_ok(["synth-data", "--spec", work / "spec.json", "--seed", 9,
                       "--out", corpus_dir])
    cfg = work / "config.json"
    cfg.write_text(json.dumps(CONFIG), encoding="utf-8")
    run = work / "run"
    text = invoke_ok(["train-text", "--config", cfg, "--out", run])
    acoustic = invoke_ok(["train-acoustic", "--config", cfg, "--out", run])
    evector = invoke_ok(["train-evector", "--config", cfg, "--out", run])
    fuse = invoke_ok(["fuse", "--config", cfg, "--scores-root", run / "scores",
                      "--out", run])
    return {
        "work": work, "cfg": cfg, "corpus": corpus_dir, "run": run,
        "results": {"synth": synth, "text": text, "acoustic": acoustic,
                    "evector": evector, "fuse": fuse},
    }


def test_version_flag():
    result = invoke_ok(["--version"])
    assert "version" in result.output


def test_synth_data_writes_corpus(pipeline):
    corpus_dir = pipeline["corpus"]
    assert (corpus_dir / "manifest.jsonl").is_file()
    assert (corpus_dir / "synth_spec.json").is_file()
    csvs = list((corpus_dir / "features").glob("*.csv"))
    assert len(csvs) == 24
    assert "wrote 24 utterances" in pipeline["results"]["synth"].output


def test_train_text_outputs(pipeline):
    run = pipeline["run"]
    for r in range(3):
        assert (run / "scores" / "mcnn" / f"round{r}.jsonl").is_file()
        assert (run / "models" / f"mcnn_round{r}.json").is_file()
        doc = json.loads((run / "history" / f"mcnn_round{r}.json").read_text())
        assert doc["round"] == r
        assert isinstance(doc["history"], list) and doc["history"]
    assert "best val UA" in pipeline["results"]["text"].output


def test_train_acoustic_outputs(pipeline):
    run = pipeline["run"]
    for r in range(3):
        assert (run / "scores" / "lstm" / f"round{r}.jsonl").is_file()
        assert (run / "models" / f"lstm_round{r}.json").is_file()
        assert (run / "history" / f"lstm_round{r}.json").is_file()


def test_train_evector_outputs(pipeline):
    run = pipeline["run"]
    for r in range(3):
        assert (run / "scores" / "evector" / f"round{r}.jsonl").is_file()
        assert (run / "models" / f"evector_round{r}.jsonl").is_file()


def test_score_files_cover_corpus(pipeline):
    # every system scores all 24 utterances with 3 classes each
    for system in ("mcnn", "lstm", "evector"):
        score_set = read_score_file(pipeline["run"] / "scores" / system / "round0.jsonl")
        assert score_set.system == system
        assert score_set.dim == 3
        assert len(score_set.scores) == 24


def test_fuse_outputs(pipeline):
    run = pipeline["run"]
    doc = json.loads((run / "results.json").read_text())
    systems = [row["system"] for row in doc["systems"]]
    assert set(systems) == {"evector", "lstm", "mcnn", "evector+lstm+mcnn"}
    assert doc["audits"]
    assert all(a["id_overlap"] == 0 and a["speaker_overlap"] == 0
               for a in doc["audits"])
    table = (run / "results.txt").read_text()
    assert "UA" in table and "mcnn" in table
    assert table.rstrip("\n") in pipeline["results"]["fuse"].output


def test_fuse_explicit_combinations(pipeline, tmp_path):
    result = invoke_ok(["fuse", "--config", pipeline["cfg"],
                        "--scores-root", pipeline["run"] / "scores",
                        "--out", tmp_path,
                        "--combinations", "mcnn,evector,mcnn+evector"])
    doc = json.loads((tmp_path / "results.json").read_text())
    assert [row["system"] for row in doc["systems"]] == ["mcnn", "evector", "mcnn+evector"]
    assert result.exit_code == 0


def test_run_log_written(pipeline):
    log = (pipeline["run"] / "run.log").read_text()
    for needle in ("train-text", "train-acoustic", "train-evector", "fuse"):
        assert needle in log


def test_select_weight_records_selection(pipeline, tmp_path):
    result = invoke_ok(["train-text", "--config", pipeline["cfg"], "--out", tmp_path,
                        "--round", 0, "--select-weight"])
    assert "selected verification weight" in result.output
    doc = json.loads((tmp_path / "history" / "mcnn_round0.json").read_text())
    table = doc["weight_selection"]
    assert [row["verification_weight"] for row in table] == [0.0, 0.1]
    assert all("val_ua" in row for row in table)
    assert (tmp_path / "scores" / "mcnn" / "round0.jsonl").is_file()
    assert not (tmp_path / "scores" / "mcnn" / "round1.jsonl").exists()


def test_round_option_restricts_rounds(pipeline, tmp_path):
    invoke_ok(["train-evector", "--config", pipeline["cfg"], "--out", tmp_path,
               "--round", 1])
    assert (tmp_path / "scores" / "evector" / "round1.jsonl").is_file()
    assert not (tmp_path / "scores" / "evector" / "round0.jsonl").exists()


def test_rerun_is_byte_identical(pipeline, tmp_path):
    first = tmp_path / "a"
    second = tmp_path / "b"
    for out in (first, second):
        invoke_ok(["train-evector", "--config", pipeline["cfg"], "--out", out])
    for r in range(3):
        rel = f"scores/evector/round{r}.jsonl"
        assert (first / rel).read_bytes() == (second / rel).read_bytes()
    # and matches the main run of the same config
    assert (first / "scores/evector/round0.jsonl").read_bytes() == (
        pipeline["run"] / "scores/evector/round0.jsonl"
    ).read_bytes()


def test_evaluate_prints_table(pipeline):
    result = invoke_ok(["evaluate", "--scores",
                        pipeline["run"] / "scores" / "mcnn" / "round0.jsonl",
                        "--manifest", pipeline["corpus"] / "manifest.jsonl"])
    assert "mcnn" in result.output
    assert "UA" in result.output and "WA" in result.output
    hidden = invoke_ok(["evaluate", "--scores",
                        pipeline["run"] / "scores" / "mcnn" / "round0.jsonl",
                        "--manifest", pipeline["corpus"] / "manifest.jsonl",
                        "--no-show-wa"])
    assert "WA" not in hidden.output


def test_evaluate_ids_subset(pipeline, tmp_path):
    from emofusion.data import load_corpus

    corpus = load_corpus(pipeline["corpus"] / "manifest.jsonl")
    # one utterance per class so every recall stays defined
    ids = []
    for c in range(corpus.num_classes):
        ids.append(next(u.uid for u in corpus if u.label == c))
    ids_file = tmp_path / "ids.txt"
    ids_file.write_text("\n".join(ids) + "\n", encoding="utf-8")
    result = invoke_ok(["evaluate", "--scores",
                        pipeline["run"] / "scores" / "mcnn" / "round0.jsonl",
                        "--manifest", pipeline["corpus"] / "manifest.jsonl",
                        "--ids", ids_file])
    assert "mcnn" in result.output


def test_evaluate_dim_mismatch(pipeline, tmp_path):
    bad = tmp_path / "bad.jsonl"
    score_set = read_score_file(pipeline["run"] / "scores" / "mcnn" / "round0.jsonl")
    two_dim = {uid: vec[:2] for uid, vec in score_set.scores.items()}
    write_score_file(bad, ScoreSet(system="mcnn", scores=two_dim))
    result = invoke(["evaluate", "--scores", bad,
                     "--manifest", pipeline["corpus"] / "manifest.jsonl"])
    assert result.exit_code == 2
    assert "ERROR ConfigError:" in result.stderr


def test_sweep_modules(pipeline, tmp_path):
    result = invoke_ok(["sweep-modules", "--config", pipeline["cfg"],
                        "--out", tmp_path, "--max-modules", 2])
    doc = json.loads((tmp_path / "sweep.json").read_text())
    assert [row["kernel_sizes"] for row in doc] == [[1], [1, 2]]
    assert all(0.0 <= row["ua"] <= 1.0 for row in doc)
    assert "modules" in result.output


def test_invalid_json_config_reports_format_error(pipeline, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json", encoding="utf-8")
    result = invoke(["train-text", "--config", bad, "--out", tmp_path / "out"])
    assert result.exit_code == 2
    assert "ERROR FormatError:" in result.stderr
    assert not (tmp_path / "out").exists()


def test_unknown_config_key_reports_config_error(pipeline, tmp_path):
    doc = dict(CONFIG, bogus=1)
    doc["data"] = {"synth": SPEC}
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(doc), encoding="utf-8")
    result = invoke(["train-evector", "--config", bad, "--out", tmp_path / "out"])
    assert result.exit_code == 2
    assert "ERROR ConfigError:" in result.stderr
    assert "bogus" in result.stderr


def test_fuse_empty_scores_root(pipeline, tmp_path):
    empty = tmp_path / "scores"
    empty.mkdir()
    result = invoke(["fuse", "--config", pipeline["cfg"],
                     "--scores-root", empty, "--out", tmp_path / "out"])
    assert result.exit_code == 2
    assert "ERROR CoverageError:" in result.stderr


def test_synth_data_rejects_bad_spec(tmp_path):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"num_classes": 3, "nonsense": True}), encoding="utf-8")
    result = invoke(["synth-data", "--spec", spec, "--out", tmp_path / "out"])
    assert result.exit_code == 2
    assert "ERROR ConfigError:" in result.stderr
