import hashlib
import json

import pytest

from hatelab.cli import main


def digest(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    assert main(["synth", "--out", str(root / "data"), "--train", "300", "--test", "100", "--seed", "4"]) == 0
    return root


@pytest.fixture(scope="module")
def trained(workspace):
    cfg = workspace / "run.cfg"
    cfg.write_text(
        "data.train = data/train.csv\n"
        "data.test = data/test.csv\n"
        "data.task = hasoc-a\n"
        "model.kind = cnn\n"
        "model.filters = 16\n"
        "train.epochs = 3\n"
        "train.seeds = 1,2\n"
        "output.dir = runs/cnn\n"
    )
    before = {p.name: digest(p) for p in (workspace / "data").iterdir()}
    code = main(["train", "--config", str(cfg)])
    after = {p.name: digest(p) for p in (workspace / "data").iterdir()}
    return code, workspace / "runs" / "cnn", before, after


class TestTrain:
    def test_outputs(self, trained):
        code, out, before, after = trained
        assert code == 0
        assert before == after
        names = {p.name for p in out.iterdir()}
        assert {"cnn_seed1.npz", "cnn_seed2.npz", "history.jsonl", "report.txt", "results.json", "manifest.json", "run.cfg"} <= names

    def test_manifest(self, trained, workspace):
        _, out, before, _ = trained
        m = json.loads((out / "manifest.json").read_text())
        assert m["seeds"] == [1, 2]
        assert m["config"]["model.kind"] == "cnn"
        assert m["inputs"]["data.train"]["sha256"] == before["train.csv"]
        assert m["inputs"]["data.test"]["sha256"] == before["test.csv"]

    def test_history_and_report(self, trained):
        _, out, _, _ = trained
        lines = [json.loads(l) for l in (out / "history.jsonl").read_text().splitlines()]
        assert len(lines) == 2 * (3 + 1)
        report = (out / "report.txt").read_text()
        assert "hasoc2021-a | " in report and "confusion matrix" in report

    def test_rerun_from_manifest_config(self, trained, tmp_path):
        _, out, _, _ = trained
        assert main(["train", "--config", str(out / "run.cfg"), "--out", str(tmp_path / "again")]) == 0
        a = json.loads((out / "results.json").read_text())
        b = json.loads((tmp_path / "again" / "results.json").read_text())
        assert a == b


class TestEvalExplainReport:
    def test_eval(self, trained, workspace, capsys):
        _, out, _, _ = trained
        capsys.readouterr()
        args = ["eval", "--data", str(workspace / "data" / "test.csv"), "--task", "hasoc-a"]
        for s in (1, 2):
            args += ["--checkpoint", str(out / f"cnn_seed{s}.npz")]
        assert main(args) == 0
        text = capsys.readouterr().out
        assert "macro F1" in text and "weighted F1" in text and "(" in text

    def test_eval_matches_training_report(self, trained, workspace, capsys):
        _, out, _, _ = trained
        res = json.loads((out / "results.json").read_text())
        capsys.readouterr()
        main(["eval", "--data", str(workspace / "data" / "test.csv"), "--task", "hasoc-a",
              "--checkpoint", str(out / "cnn_seed1.npz")])
        text = capsys.readouterr().out
        macro = res["runs"][0]["test"]["macro_f1"] * 100
        assert f"{macro:.2f} (0)" in text

    def test_explain(self, trained, tmp_path, capsys):
        _, out, _, _ = trained
        inp = tmp_path / "texts.txt"
        inp.write_text("some words here\n\nmore words\n")
        code = main(["explain", "--checkpoint", str(out / "cnn_seed1.npz"), "--text", "hello there",
                     "--input", str(inp), "--out", str(tmp_path / "ex"), "--steps", "20"])
        assert code == 0
        files = sorted(p.name for p in (tmp_path / "ex").iterdir())
        assert files == ["index.html", "report_0000.html", "report_0001.html", "report_0002.html"]
        assert "completeness residual" in (tmp_path / "ex" / "report_0000.html").read_text()

    def test_report(self, trained, tmp_path, capsys):
        _, out, _, _ = trained
        capsys.readouterr()
        assert main(["report", str(out), "--out", str(tmp_path / "table.txt")]) == 0
        text = (tmp_path / "table.txt").read_text()
        assert "[cnn]" in text and "hasoc2021-a" in text


class TestPreprocessAugment:
    def test_preprocess(self, workspace, tmp_path):
        src = tmp_path / "in.tsv"
        src.write_text("id\ttweet\tsubtask_a\tsubtask_b\tsubtask_c\n1\t@USER Hello 123 WORLD!! http://x.y\tOFF\tTIN\tIND\n")
        before = digest(src)
        assert main(["preprocess", "--data", str(src), "--format", "olid", "--out", str(tmp_path / "out.tsv")]) == 0
        assert digest(src) == before
        rows = (tmp_path / "out.tsv").read_text().splitlines()
        assert rows[1].split("\t")[1] == "user hello world"

    def test_augment_deletion(self, workspace, tmp_path):
        words = tmp_path / "w.txt"
        words.write_text("zzzzz\n")
        out = tmp_path / "aug.csv"
        code = main(["augment", "--data", str(workspace / "data" / "train.csv"), "--task", "hasoc-a",
                     "--technique", "deletion", "--wordlist", str(words), "--out", str(out)])
        assert code == 0
        lines = out.read_text().splitlines()
        assert lines[0].endswith("provenance")
        assert 300 < len(lines) - 1 <= 600

    def test_augment_generated(self, tmp_path):
        data = tmp_path / "d.csv"
        data.write_text("_id,text,task_1,task_2\na1,SHOOT NOW ASSHOLE,HOF,PRFN\n")
        conts = tmp_path / "c.tsv"
        conts.write_text("a1\tBooking was successful. Reference number is : N0LQRA43.\n")
        out = tmp_path / "aug.csv"
        assert main(["augment", "--data", str(data), "--task", "hasoc-a", "--technique", "generated",
                     "--continuations", str(conts), "--out", str(out)]) == 0
        assert "shoot now asshole booking was successful reference number is nlqra" in out.read_text()

    def test_augment_missing_wordlist(self, workspace, tmp_path, capsys):
        code = main(["augment", "--data", str(workspace / "data" / "train.csv"), "--task", "hasoc-a",
                     "--technique", "deletion", "--out", str(tmp_path / "o.csv")])
        assert code == 1
        assert "--wordlist" in capsys.readouterr().err


class TestErrors:
    def test_unknown_command(self):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == 2

    def test_unreadable_checkpoint(self, tmp_path, capsys):
        bad = tmp_path / "broken.npz"
        bad.write_bytes(b"not a checkpoint")
        assert main(["explain", "--checkpoint", str(bad), "--text", "hi"]) == 1
        assert "broken.npz" in capsys.readouterr().err

    def test_missing_checkpoint(self, tmp_path, capsys):
        assert main(["eval", "--checkpoint", str(tmp_path / "nope.npz"), "--data", "x", "--task", "hasoc-a"]) == 1
        assert "nope.npz" in capsys.readouterr().err

    def test_bad_config(self, tmp_path, capsys):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("train.nonsense = 1\n")
        assert main(["train", "--config", str(cfg)]) == 1
        assert "unknown key" in capsys.readouterr().err
