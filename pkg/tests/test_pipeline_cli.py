"""End-to-end pipeline runs driven through the command-line entry point.

The full ``reproduce`` flow runs once per module on a small synthetic
corpus with shrunken models, then individual tests inspect the artifacts
it leaves behind.  Error paths get their own throwaway working
directories.
"""

import json
from pathlib import Path

import pytest

from hyst.cli import (
    PipelineError,
    RunConfig,
    Workspace,
    load_run_config,
    main,
)
from hyst.toydata import ToyDataConfig, write_toy_corpus

CLI_DATA_CONFIG = ToyDataConfig(n_train=30, n_dev=10, n_test=10, seed=5)


@pytest.fixture(scope="module")
def cli_data(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli-corpus")
    write_toy_corpus(root, CLI_DATA_CONFIG)
    return root


@pytest.fixture(scope="module")
def cli_config(tmp_path_factory):
    path = tmp_path_factory.mktemp("cli-config") / "run.yaml"
    path.write_text(
        "desk_scale: true\n"
        "desk_fraction: 1.0\n"
        "desk_epochs: 3\n"
        "batch_size: 16\n"
        "learning_rate: 0.005\n"
        "seeds: [13, 29]\n",
        encoding="utf-8")
    return path


@pytest.fixture(scope="module")
def reproduced(cli_data, cli_config, tmp_path_factory):
    workdir = tmp_path_factory.mktemp("cli-runs")
    rc = main(["reproduce", "--config", str(cli_config),
               "--workdir", str(workdir), "--data", str(cli_data)])
    assert rc == 0
    return workdir


class TestReproduce:
    def test_artifact_inventory(self, reproduced):
        expected = [
            "corpus.train.jsonl", "corpus.dev.jsonl", "corpus.test.jsonl",
            "ontology.json", "values.json",
            "stats.json", "stats.txt",
            "reachability.json", "reachability.txt",
            "ov.seed13.pt", "ov.seed29.pt", "jst.seed13.pt", "jst.seed29.pt",
            "ov.seed13.loss.csv", "jst.seed29.loss.csv",
            "preds.majority.dev.jsonl", "preds.oracle.test.jsonl",
            "preds.ov.seed13.dev.jsonl", "preds.jst.seed29.test.jsonl",
            "preds.ov.ens.dev.jsonl", "preds.jst.ens.test.jsonl",
            "ensemble.ov.json", "ensemble.jst.json",
            "assignment.json", "selection.txt",
            "preds.hyst.dev.jsonl", "preds.hyst.test.jsonl",
            "eval.majority.dev.json", "eval.hyst.test.txt",
            "summary.json", "summary.txt", "manifest.jsonl",
        ]
        missing = [name for name in expected
                   if not (reproduced / name).exists()]
        assert not missing

    def test_summary_scoreboard(self, reproduced):
        summary = json.loads((reproduced / "summary.json").read_text())
        assert summary["schema_version"] == 1
        assert summary["seeds"] == [13, 29]
        methods = summary["methods"]
        assert set(methods) == {"majority", "oracle", "ov", "jst",
                                "ov_ensemble", "jst_ensemble", "hyst"}
        for accs in methods.values():
            assert set(accs) == {"dev", "test"}
            assert all(0.0 <= v <= 1.0 for v in accs.values())
        # The oracle scorer tracks the candidate-reachability ceiling, which
        # no trained open-vocabulary run can beat.
        for split in ("dev", "test"):
            assert methods["ov"][split] <= methods["oracle"][split]
            assert methods["ov_ensemble"][split] <= methods["oracle"][split]

    def test_loss_trace_has_one_row_per_epoch(self, reproduced):
        lines = (reproduced / "ov.seed13.loss.csv").read_text().splitlines()
        assert lines[0] == "epoch,train_loss,dev_loss"
        assert len(lines) == 1 + 3  # desk_epochs: 3

    def test_manifest_records_commands_and_inputs(self, reproduced):
        records = [json.loads(line) for line in
                   (reproduced / "manifest.jsonl").read_text().splitlines()]
        assert records, "manifest should not be empty"
        by_artifact = {r["artifact"]: r for r in records}
        assert by_artifact["ontology.json"]["command"] == "reproduce"
        assert by_artifact["ontology.json"]["inputs"] == ["corpus.train.jsonl"]
        assert "assignment.json" in by_artifact
        hashes = {r["config"] for r in records}
        assert len(hashes) == 1  # one configuration produced everything

    def test_rerun_is_idempotent(self, reproduced, cli_data, cli_config):
        manifest = (reproduced / "manifest.jsonl").read_bytes()
        summary = (reproduced / "summary.json").read_bytes()
        rc = main(["reproduce", "--config", str(cli_config),
                   "--workdir", str(reproduced), "--data", str(cli_data)])
        assert rc == 0
        assert (reproduced / "manifest.jsonl").read_bytes() == manifest
        assert (reproduced / "summary.json").read_bytes() == summary

    def test_assignment_is_valid_and_selection_readable(self, reproduced):
        from hyst.hybrid import METHODS, load_assignment

        assignment = load_assignment(reproduced / "assignment.json")
        assert set(assignment.values()) <= set(METHODS)
        text = (reproduced / "selection.txt").read_text()
        assert "hotel.area" in text

    def test_predictions_align_with_corpus(self, reproduced):
        from hyst.corpus import load_corpus_jsonl
        from hyst.evaluator import joint_goal_accuracy
        from hyst.predictions import load_predictions_jsonl

        dev = load_corpus_jsonl(reproduced / "corpus.dev.jsonl")
        preds = load_predictions_jsonl(reproduced / "preds.hyst.dev.jsonl")
        acc = joint_goal_accuracy(preds, dev)
        report = json.loads((reproduced / "eval.hyst.dev.json").read_text())
        assert acc == report["overall"]


class TestSingleSeed:
    def test_reproduce_without_ensembles(self, cli_data, tmp_path):
        rc = main(["reproduce", "--workdir", str(tmp_path / "runs"),
                   "--data", str(cli_data), "--desk-scale",
                   "--seeds", "13", "--epochs", "2",
                   "--batch-size", "16", "--learning-rate", "0.005"])
        assert rc == 0
        summary = json.loads(
            (tmp_path / "runs" / "summary.json").read_text())
        assert "ov_ensemble" not in summary["methods"]
        assert "hyst" in summary["methods"]
        assert not (tmp_path / "runs" / "preds.ov.ens.dev.jsonl").exists()


@pytest.fixture(scope="module")
def stepwise_dir(cli_data, tmp_path_factory):
    workdir = tmp_path_factory.mktemp("stepwise")
    rc = main(["ingest", "--workdir", str(workdir), "--data", str(cli_data)])
    assert rc == 0
    return workdir


class TestStepwiseCommands:
    def test_stats_and_candidates(self, stepwise_dir, cli_data):
        args = ["--workdir", str(stepwise_dir), "--data", str(cli_data)]
        assert main(["stats"] + args) == 0
        assert main(["candidates", "--dump-sets"] + args) == 0
        stats = json.loads((stepwise_dir / "stats.json").read_text())
        assert stats["splits"]["train"]["n_dialogues"] == 30
        assert (stepwise_dir / "candidates.dev.jsonl").exists()
        reach = json.loads((stepwise_dir / "reachability.json").read_text())
        assert set(reach["splits"]) == {"dev", "test"}

    def test_gold_predict_then_evaluate(self, stepwise_dir, cli_data):
        args = ["--workdir", str(stepwise_dir), "--data", str(cli_data)]
        assert main(["predict", "--method", "gold", "--split", "dev"]
                    + args) == 0
        assert main(["evaluate", "--pred", "preds.gold.dev.jsonl",
                     "--split", "dev"] + args) == 0
        report = json.loads(
            (stepwise_dir / "eval.gold.dev.json").read_text())
        assert report["overall"] == 1.0


class TestErrorPaths:
    def test_missing_data_root(self, tmp_path, monkeypatch, capsys):
        monkeypatch.delenv("HYST_DATA", raising=False)
        rc = main(["ingest", "--workdir", str(tmp_path / "w")])
        assert rc == 2
        assert "HYST_DATA" in capsys.readouterr().err

    def test_predict_before_ingest(self, tmp_path, capsys):
        rc = main(["predict", "--method", "majority", "--split", "dev",
                   "--workdir", str(tmp_path / "w")])
        assert rc == 2
        assert "run `hyst ingest` first" in capsys.readouterr().err

    def test_predict_before_training(self, cli_data, tmp_path, capsys):
        workdir = tmp_path / "w"
        assert main(["ingest", "--workdir", str(workdir),
                     "--data", str(cli_data)]) == 0
        rc = main(["predict", "--method", "ov", "--split", "dev",
                   "--workdir", str(workdir)])
        assert rc == 2
        assert "train-ov" in capsys.readouterr().err

    def test_conflicting_rewrite_is_refused(self, cli_data, tmp_path,
                                            capsys):
        workdir = tmp_path / "w"
        assert main(["ingest", "--workdir", str(workdir),
                     "--data", str(cli_data)]) == 0
        rc = main(["ingest", "--workdir", str(workdir),
                   "--data", str(cli_data), "--desk-scale"])
        assert rc == 2
        err = capsys.readouterr().err
        assert "different contents" in err
        assert "--workdir" in err

    def test_evaluate_missing_prediction_file(self, cli_data, tmp_path,
                                              capsys):
        workdir = tmp_path / "w"
        assert main(["ingest", "--workdir", str(workdir),
                     "--data", str(cli_data)]) == 0
        rc = main(["evaluate", "--pred", "preds.nope.jsonl",
                   "--split", "dev", "--workdir", str(workdir)])
        assert rc == 2
        assert "not found" in capsys.readouterr().err

    def test_unknown_config_key(self, tmp_path, capsys):
        config = tmp_path / "bad.yaml"
        config.write_text("learning_rte: 0.1\n", encoding="utf-8")
        rc = main(["stats", "--config", str(config),
                   "--workdir", str(tmp_path / "w")])
        assert rc == 2
        assert "learning_rte" in capsys.readouterr().err

    def test_bad_threshold_rejected(self, tmp_path, capsys):
        rc = main(["stats", "--workdir", str(tmp_path / "w"),
                   "--threshold", "1.5"])
        assert rc == 2
        assert "threshold" in capsys.readouterr().err


class TestRunConfig:
    def test_precedence_defaults_yaml_flags(self, tmp_path):
        config = tmp_path / "run.yaml"
        config.write_text("epochs: 7\nbatch_size: 64\n", encoding="utf-8")
        cfg = load_run_config(str(config), {"batch_size": 8})
        assert cfg.epochs == 7          # YAML beats default (20)
        assert cfg.batch_size == 8      # flag beats YAML
        assert cfg.learning_rate == 0.001  # untouched default

    def test_seeds_string_parsing(self):
        cfg = load_run_config(None, {"seeds": "13,29,47"})
        assert cfg.seeds == (13, 29, 47)

    def test_primary_seed_forced_into_seeds(self):
        cfg = load_run_config(None, {"seed": 99, "seeds": "13,29"})
        assert cfg.seeds[0] == 99

    def test_desk_scale_shrinks_encoders(self):
        desk = RunConfig(desk_scale=True).encoder_config("ov")
        full = RunConfig().encoder_config("ov")
        assert desk.token_embed_dim < full.token_embed_dim
        assert desk.max_turn_tokens == full.max_turn_tokens == 30

    def test_bad_seeds_rejected(self):
        with pytest.raises(PipelineError, match="bad configuration"):
            load_run_config(None, {"seeds": "13,abc"})


class TestWorkspace:
    def test_identical_rewrite_is_noop(self, tmp_path):
        ws = Workspace(RunConfig(workdir=str(tmp_path / "w")), "test")
        ws.write("a.txt", "hello\n")
        ws.write("a.txt", "hello\n")
        manifest = (tmp_path / "w" / "manifest.jsonl").read_text()
        assert manifest.count('"a.txt"') == 1

    def test_divergent_rewrite_raises(self, tmp_path):
        from hyst.cli import ArtifactError

        ws = Workspace(RunConfig(workdir=str(tmp_path / "w")), "test")
        ws.write("a.txt", "hello\n")
        with pytest.raises(ArtifactError, match="different contents"):
            ws.write("a.txt", "goodbye\n")

    def test_require_names_producer(self, tmp_path):
        ws = Workspace(RunConfig(workdir=str(tmp_path / "w")), "test")
        with pytest.raises(PipelineError, match="hyst ingest"):
            ws.require("corpus.train.jsonl", "ingest")

    def test_checkpoint_skip_if_present(self, tmp_path):
        ws = Workspace(RunConfig(workdir=str(tmp_path / "w")), "test")
        calls = []
        ws.write_checkpoint("m.pt", lambda p: (calls.append(1),
                                               Path(p).write_text("x")))
        ws.write_checkpoint("m.pt", lambda p: calls.append(2))
        assert calls == [1]
