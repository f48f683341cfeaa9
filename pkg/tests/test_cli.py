import json
import os

import pytest

from minidapt.checkpoint import Checkpoint
from minidapt.cli import main
from minidapt.metrics import EvalReport
from minidapt.tokenizer import Vocabulary

TINY = [
    "--set", "encoder.num_layers=1",
    "--set", "encoder.d_model=16",
    "--set", "encoder.num_heads=2",
    "--set", "encoder.d_ff=32",
    "--set", "encoder.max_len=64",
    "--set", "encoder.head_hidden=[8,4]",
    "--set", "chunk_size=32",
    "--set", "mlm.epochs=2",
    "--set", "mlm.batch_size=8",
    "--set", "mlm.peak_lr=0.001",
    "--set", "finetune.stage1_epochs=2",
    "--set", "finetune.stage2_epochs=1",
    "--set", "finetune.batch_size=8",
    "--set", "finetune.lr_frozen=0.001",
    "--set", "finetune.lr_unfrozen=0.0001",
    "--set", "baseline.epochs=20",
]


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def ws(tmp_path_factory):
    """Run the whole pipeline once; tests inspect the artifacts."""
    root = tmp_path_factory.mktemp("cli")
    d = {k: str(root / k) for k in
         ("fix", "vocab", "adapt", "ft_vanilla", "ft_adapted", "base", "cmp",
          "eval")}
    assert run("fixtures", "generate", "--seed", 7, "--out", d["fix"]) == 0
    corpora = [os.path.join(d["fix"], f"{n}.jsonl")
               for n in ("corpus_a", "corpus_b", "dataset")]
    assert run("vocab", "--corpus", *corpora, "--target-size", 200,
               "--seed", 7, "--out", d["vocab"], *TINY) == 0
    vocab_path = os.path.join(d["vocab"], "vocab.json")
    corpus_b = os.path.join(d["fix"], "corpus_b.jsonl")
    dataset = os.path.join(d["fix"], "dataset.jsonl")
    assert run("adapt", "--vocab", vocab_path, "--corpus", corpus_b,
               "--seed", 7, "--out", d["adapt"], *TINY) == 0
    adapted = os.path.join(d["adapt"], "adapted.ckpt")
    assert run("finetune", "--vocab", vocab_path, "--dataset", dataset,
               "--base", "vanilla", "--seed", 7, "--out", d["ft_vanilla"],
               *TINY) == 0
    assert run("finetune", "--vocab", vocab_path, "--dataset", dataset,
               "--base", adapted, "--seed", 7, "--out", d["ft_adapted"],
               *TINY) == 0
    assert run("baseline", "--dataset", dataset, "--seed", 7,
               "--out", d["base"], *TINY) == 0
    d.update(vocab_path=vocab_path, corpus_b=corpus_b, dataset=dataset,
             adapted=adapted)
    return d


def read_manifest(out_dir):
    with open(os.path.join(out_dir, "manifest.json"), encoding="utf-8") as f:
        return json.load(f)


def csv_rows(path):
    with open(path, encoding="utf-8") as f:
        return f.read().strip().split("\n")


class TestFixturesCommand:
    def test_writes_all_corpora(self, ws):
        for name in ("corpus_a", "corpus_b", "dataset", "separable"):
            path = os.path.join(ws["fix"], f"{name}.jsonl")
            assert os.path.exists(path) and os.path.getsize(path) > 0

    def test_rerun_is_byte_identical(self, ws, tmp_path):
        assert run("fixtures", "generate", "--seed", 7, "--out", tmp_path) == 0
        for name in ("corpus_a", "corpus_b", "dataset", "separable"):
            a = open(os.path.join(ws["fix"], f"{name}.jsonl"), "rb").read()
            b = open(tmp_path / f"{name}.jsonl", "rb").read()
            assert a == b


class TestVocabCommand:
    def test_vocab_loads_and_has_target_size(self, ws):
        vocab = Vocabulary.load(ws["vocab_path"])
        assert vocab.size == 200

    def test_stats_report_high_coverage(self, ws):
        with open(os.path.join(ws["vocab"], "vocab_stats.json")) as f:
            stats = json.load(f)
        assert stats["vocab_size"] == 200
        assert stats["coverage"] > 0.99

    def test_manifest_has_input_hashes(self, ws):
        m = read_manifest(ws["vocab"])
        assert len(m["inputs"]) == 3
        assert all(len(h) == 64 for h in m["inputs"].values())

    def test_too_small_target_exits_2(self, ws, tmp_path, capsys):
        code = run("vocab", "--corpus", ws["corpus_b"], "--target-size", 3,
                   "--seed", 7, "--out", tmp_path)
        assert code == 2
        assert "error:" in capsys.readouterr().err


class TestSeedHandling:
    def test_missing_seed_exits_2(self, ws, tmp_path, capsys):
        code = run("fixtures", "generate", "--out", tmp_path)
        assert code == 2
        assert "seed" in capsys.readouterr().err

    def test_seed_from_config_file(self, ws, tmp_path):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps({"seed": 7}))
        assert run("fixtures", "generate", "--config", cfg_path,
                   "--out", tmp_path / "out") == 0


class TestAdaptCommand:
    def test_outputs_exist(self, ws):
        for name in ("adapted.ckpt", "curves.csv", "report.json",
                     "manifest.json"):
            assert os.path.exists(os.path.join(ws["adapt"], name))

    def test_curves_have_one_row_per_epoch(self, ws):
        rows = csv_rows(os.path.join(ws["adapt"], "curves.csv"))
        assert len(rows) == 1 + 2  # header + mlm epochs
        assert all(r.startswith("mlm,") for r in rows[1:])

    def test_report_is_mlm_with_finite_perplexity(self, ws):
        rep = EvalReport.load(os.path.join(ws["adapt"], "report.json"))
        assert rep.task == "mlm"
        assert rep.perplexity >= 1.0

    def test_manifest_records_overrides(self, ws):
        m = read_manifest(ws["adapt"])
        assert m["config"]["chunk_size"] == 32
        assert m["config"]["seed"] == 7
        assert m["provenance"]["stage"] == "mlm"

    def test_rerun_byte_identical(self, ws, tmp_path):
        assert run("adapt", "--vocab", ws["vocab_path"], "--corpus",
                   ws["corpus_b"], "--seed", 7, "--out", tmp_path, *TINY) == 0
        for name in ("adapted.ckpt", "curves.csv", "report.json"):
            a = open(os.path.join(ws["adapt"], name), "rb").read()
            b = open(tmp_path / name, "rb").read()
            assert a == b, name


class TestFinetuneCommand:
    def test_both_paths_produce_outputs(self, ws):
        for out in (ws["ft_vanilla"], ws["ft_adapted"]):
            for name in ("classifier.ckpt", "curves.csv", "report.json"):
                assert os.path.exists(os.path.join(out, name))

    def test_curves_cover_both_stages(self, ws):
        rows = csv_rows(os.path.join(ws["ft_vanilla"], "curves.csv"))
        assert len(rows) == 1 + 2 + 1  # header + stage1 + stage2 epochs
        assert rows[1].startswith("frozen,") and rows[3].startswith("unfrozen,")

    def test_reports_are_schema_valid(self, ws):
        for out in (ws["ft_vanilla"], ws["ft_adapted"]):
            rep = EvalReport.load(os.path.join(out, "report.json"))
            assert rep.task == "classify"
            for v in (rep.accuracy, rep.precision, rep.recall, rep.f1):
                assert 0.0 <= v <= 1.0

    def test_checkpoint_loads(self, ws):
        ckpt = Checkpoint.load(os.path.join(ws["ft_vanilla"], "classifier.ckpt"))
        assert ckpt.provenance["stage"] in ("frozen", "unfrozen")

    def test_unlabeled_dataset_rejected(self, ws, tmp_path, capsys):
        bad = tmp_path / "bad.jsonl"
        bad.write_text('{"text": "no label here"}\n')
        code = run("finetune", "--vocab", ws["vocab_path"], "--dataset", bad,
                   "--base", "vanilla", "--seed", 7, "--out", tmp_path, *TINY)
        assert code == 2
        assert "label" in capsys.readouterr().err


class TestBaselineCommand:
    def test_outputs_and_lambda(self, ws):
        m = read_manifest(ws["base"])
        assert m["chosen_lambda"] in m["config"]["baseline"]["lambda_grid"]
        assert os.path.exists(os.path.join(ws["base"], "baseline.json"))

    def test_shares_test_split_with_finetune(self, ws):
        m_ft = read_manifest(ws["ft_vanilla"])
        m_bl = read_manifest(ws["base"])
        assert m_ft["test_indices"] == m_bl["test_indices"]
        assert len(m_bl["test_indices"]) == 24  # 20% of 120

    def test_single_class_split_exits_1(self, ws, tmp_path, capsys):
        bad = tmp_path / "oneclass.jsonl"
        bad.write_text("".join(json.dumps({"text": f"doc number {i}", "label": 1})
                               + "\n" for i in range(20)))
        code = run("baseline", "--dataset", bad, "--seed", 7, "--out", tmp_path)
        assert code == 1
        assert "single class" in capsys.readouterr().err


class TestEvaluateCommand:
    def test_mlm_evaluation_runs(self, ws, capsys):
        code = run("evaluate", "--vocab", ws["vocab_path"],
                   "--ckpt", ws["adapted"], "--data", ws["corpus_b"],
                   "--task", "mlm", "--seed", 7, "--out", ws["eval"], *TINY)
        assert code == 0
        out = capsys.readouterr().out
        assert '"perplexity"' in out
        rep = EvalReport.load(os.path.join(ws["eval"], "report.json"))
        assert rep.task == "mlm"

    def test_classify_evaluation_runs(self, ws, tmp_path):
        code = run("evaluate", "--vocab", ws["vocab_path"],
                   "--ckpt", os.path.join(ws["ft_vanilla"], "classifier.ckpt"),
                   "--data", ws["dataset"], "--task", "classify",
                   "--seed", 7, "--out", tmp_path, *TINY)
        assert code == 0
        rep = EvalReport.load(tmp_path / "report.json")
        assert rep.task == "classify"


class TestCompareCommand:
    def test_renders_table_and_csv(self, ws, capsys):
        code = run("compare",
                   os.path.join(ws["ft_vanilla"], "report.json"),
                   os.path.join(ws["ft_adapted"], "report.json"),
                   os.path.join(ws["base"], "report.json"),
                   "--seed", 7, "--out", ws["cmp"])
        assert code == 0
        out = capsys.readouterr().out
        assert "F1-score" in out and "**" in out
        rows = csv_rows(os.path.join(ws["cmp"], "comparison.csv"))
        assert rows[0] == "Model,Precision,Recall,F1-score,Accuracy"
        assert len(rows) == 4

    def test_single_report_exits_2(self, ws, tmp_path):
        code = run("compare", os.path.join(ws["base"], "report.json"),
                   "--seed", 7, "--out", tmp_path)
        assert code == 2

    def test_mlm_report_rejected(self, ws, tmp_path):
        code = run("compare",
                   os.path.join(ws["adapt"], "report.json"),
                   os.path.join(ws["base"], "report.json"),
                   "--seed", 7, "--out", tmp_path)
        assert code == 1
