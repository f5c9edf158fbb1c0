import json
import os
import subprocess

import pytest

import aec

TWO = "1\thello\thello\tINTJ\tUH\t_\t0\troot\t_\t_\n2\tworld\tworld\tNOUN\tNN\t_\t1\tdiscourse\t_\t_\n"


def test_parse_conllu():
    sents = aec.parse_conllu("# sent_id = s1\n" + TWO)
    assert len(sents) == 1
    assert sents[0]["id"] == "s1"
    assert [t["head"] for t in sents[0]["tokens"]] == [0, 1]


def test_malformed_conllu_raises():
    with pytest.raises(aec.FormatError, match="line 1"):
        aec.parse_conllu("1\thello\thello\n")
    two_roots = TWO.replace("\t1\tdiscourse", "\t0\troot")
    with pytest.raises(aec.ValidationError):
        aec.parse_conllu(two_roots)
    assert len(aec.parse_conllu(two_roots, strict=False)) == 1


def test_features():
    feats = dict(aec.extract_features("# sent_id = s1\n" + TWO, "hello\tjoy\t1\n"))
    assert feats["s1"] == {
        "conv:greeting": 0.5,
        "dep:ROOT-UH-UH": 0.5,
        "dep:discourse-UH-NN": 0.5,
        "emo:joy": 0.5,
    }


def test_metrics():
    assert aec.gini_impurity(3, 1) == pytest.approx(0.375)
    assert aec.uncertainty_score([0.5, 0.3, 0.2]) == pytest.approx(0.5)
    truth = {"a": True, "b": False, "c": True}
    assert aec.precision_at_k(["a", "b", "c"], truth, 2) == 0.5


def test_pipeline_round_trip(tmp_path):
    aec.synth(str(tmp_path / "fx"), n=400, seed=3)
    cfg = str(tmp_path / "fx" / "config.json")
    out = tmp_path / "fx" / "out"
    stages = aec.run(cfg)
    assert stages[0] == "prepare:done" and stages[-1] == "report:done"
    assert all(s.endswith(":skipped") for s in aec.run(cfg))
    table = json.loads((out / "evaluation.json").read_text())
    assert [r["k"] for r in table["rows"]] == [10, 20, 30, 40, 50]
    before = (out / "report.md").read_text()
    aec.report(str(out))
    assert (out / "report.md").read_text() == before


def test_missing_artifacts(tmp_path):
    with pytest.raises(aec.ConfigError):
        aec.report(str(tmp_path))


@pytest.mark.skipif("AEC_BIN" not in os.environ, reason="CLI path not provided")
def test_cli_missing_lexicon(tmp_path):
    aec.synth(str(tmp_path / "fx"), n=200, seed=1)
    cfg = tmp_path / "fx" / "config.json"
    doc = json.loads(cfg.read_text())
    doc["paths"]["lexicon"] = "gone.txt"
    cfg.write_text(json.dumps(doc))
    proc = subprocess.run([os.environ["AEC_BIN"], "run", "--config", str(cfg)], capture_output=True, text=True)
    assert proc.returncode == 2
    assert "gone.txt" in proc.stderr
