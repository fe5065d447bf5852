import json
import os
import sys
from importlib import resources
from pathlib import Path

import httpx
import pytest

from nsdvqa import __version__
from nsdvqa.annotations import AnnotatorClient, AnnotatorConfig, PromptTemplate
from nsdvqa.cli import main
from nsdvqa.forge import read_dataset

FIX = Path(__file__).parent / "fixtures"
PROVIDER = FIX / "planted_provider.py"


def forge_args(out, *extra):
    return ["forge", "--annotations-a", str(FIX / "annotations_a.jsonl"),
            "--annotations-b", str(FIX / "annotations_b.jsonl"),
            "--embeddings", str(FIX / "embeddings.jsonl"),
            "--min-support", "5", "--seed", "3", "--output", str(out), *extra]


@pytest.fixture(autouse=True)
def _clean_env(monkeypatch):
    for k in list(os.environ):
        if k.startswith("NSDVQA_"):
            monkeypatch.delenv(k)
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "0")


@pytest.fixture
def dataset(tmp_path):
    out = tmp_path / "qa.jsonl"
    assert main(forge_args(out)) == 0
    return out


def write_predictions(path, dataset, subject, every=3):
    rows = [json.loads(l) for l in open(dataset)]
    with open(path, "w") as fh:
        fh.write(json.dumps({"run_id": "m", "subject_id": subject}) + "\n")
        for i, r in enumerate(rows):
            pred = r["answer"] if i % every else "wrong"
            fh.write(json.dumps({"question_id": r["question_id"], "prediction": pred}) + "\n")


def test_no_args_usage(capsys):
    assert main([]) == 2
    assert "usage" in capsys.readouterr().err


def test_version(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert f"nsdvqa {__version__} (file format 1)" in capsys.readouterr().out


def test_unknown_verb():
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


def test_forge_golden(tmp_path):
    out = tmp_path / "qa.jsonl"
    assert main(forge_args(out, "--stats", str(tmp_path / "stats.json"))) == 0
    assert out.read_bytes() == (FIX / "golden_qa.jsonl").read_bytes()
    manifest = json.loads((tmp_path / "qa.jsonl.manifest.json").read_text())
    assert manifest["version"] == __version__ and manifest["command"] == "forge"
    assert str(FIX / "annotations_a.jsonl") in manifest["inputs"]
    assert str(out) in manifest["outputs"]
    stats = json.loads((tmp_path / "stats.json").read_text())
    assert stats["n_pairs"] == len(read_dataset(out))


def test_forge_jobs_and_repeat_identical(tmp_path):
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    assert main(forge_args(a, "--jobs", "1")) == 0
    assert main(forge_args(b, "--jobs", "4")) == 0
    assert a.read_bytes() == b.read_bytes()
    ma = json.loads((tmp_path / "a.jsonl.manifest.json").read_text())
    mb = json.loads((tmp_path / "b.jsonl.manifest.json").read_text())
    assert list(ma["outputs"].values()) == list(mb["outputs"].values())


def test_config_error_exit_2(tmp_path, capsys):
    assert main(forge_args(tmp_path / "x.jsonl", "--max-share", "1.5")) == 2
    assert "max_share" in capsys.readouterr().err
    cfg = tmp_path / "c.yaml"
    cfg.write_text("bogus: 1\n")
    assert main(forge_args(tmp_path / "x.jsonl", "--config", str(cfg))) == 2


def test_data_error_exit_3(tmp_path):
    args = forge_args(tmp_path / "x.jsonl")
    args[2] = str(tmp_path / "missing.jsonl")
    assert main(args) == 3


def test_eval_and_report(tmp_path, dataset, capsys):
    reports = []
    for s, every in zip("1257", (3, 4, 5, 6)):
        pred = tmp_path / f"s{s}.jsonl"
        write_predictions(pred, dataset, s, every)
        rep = tmp_path / f"s{s}.report.json"
        assert main(["eval", "--dataset", str(dataset), "--predictions", str(pred),
                     "--metrics", "accuracy,bleu,rouge_l,meteor,cider", "--per-category",
                     "--output", str(rep)]) == 0
        reports.append(str(rep))
        assert (tmp_path / f"s{s}.report.json.manifest.json").exists()
    d = json.loads(Path(reports[0]).read_text())
    assert d["overall"]["accuracy"] == pytest.approx(1 - 1 / 3, abs=0.01)
    assert {"bleu_1", "bleu_4", "rouge_l", "meteor", "cider", "accuracy_macro"} <= set(d["overall"])
    out1 = tmp_path / "r1"
    out2 = tmp_path / "r2"
    common = ["report", "--runs", *reports, "--baseline", reports[-1], "--bootstrap", "500", "--seed", "1"]
    assert main(common + ["--output", str(out1)]) == 0
    assert main(common + ["--output", str(out2), "--jobs", "3"]) == 0
    assert (tmp_path / "r1.txt").read_bytes() == (tmp_path / "r2.txt").read_bytes()
    assert (tmp_path / "r1.tsv").read_bytes() == (tmp_path / "r2.tsv").read_bytes()
    text = (tmp_path / "r1.txt").read_text()
    assert "S1" in text and "S7" in text and "±" in text


def test_eval_stray_prediction_exit_3(tmp_path, dataset):
    pred = tmp_path / "p.jsonl"
    pred.write_text(json.dumps({"question_id": "nope", "prediction": "x"}) + "\n")
    assert main(["eval", "--dataset", str(dataset), "--predictions", str(pred)]) == 3


def _provider_cmd(dataset):
    return f"{sys.executable} {PROVIDER} --answers {dataset}"


def test_attribute_campaign_and_ledger(tmp_path, dataset):
    outs = []
    for jobs in ("1", "3"):
        d = tmp_path / f"attr{jobs}"
        assert main(["attribute", "--dataset", str(dataset), "--provider", _provider_cmd(dataset),
                     "--trials", "6", "--stimuli", "10", "--clusters", "8", "--seed", "2",
                     "--jobs", jobs, "--output-dir", str(d)]) == 0
        outs.append(d)
    for name in ("ledger.jsonl", "contributions.tsv"):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()
    table = tmp_path / "clusters.json"
    table.write_text(json.dumps({str(k): [f"v{k}_{j}" for j in range(3)] for k in range(8)}))
    fit = tmp_path / "fit"
    assert main(["attribute", "--ledger", str(outs[0] / "ledger.jsonl"), "--lambda", "2",
                 "--cluster-table", str(table), "--output-dir", str(fit)]) == 0
    assert (fit / "lambda.txt").read_text().strip() == "2.0"
    assert len(list((fit / "voxels").glob("*.voxels.tsv"))) > 0


def test_attribute_provider_failure_exit_4(tmp_path, dataset):
    assert main(["attribute", "--dataset", str(dataset), "--provider", "false",
                 "--trials", "2", "--stimuli", "5", "--clusters", "4",
                 "--output-dir", str(tmp_path / "a")]) == 4


def test_annotate_offline(tmp_path, capsys):
    cache = tmp_path / "cache"
    record = {"objects": [{"label": "dog", "count": 2, "semantic_category": "animal"}], "persons": []}
    prompt = PromptTemplate.from_file(resources.files("nsdvqa.data") / "annotation_prompt.txt")
    body = {"choices": [{"message": {"content": json.dumps(record)}}]}
    client = AnnotatorClient(AnnotatorConfig.from_mapping({"cache_dir": str(cache)}, environ={}),
                             transport=httpx.MockTransport(lambda r: httpx.Response(200, json=body)))
    client.request("http://img/a.jpg", prompt)
    images = tmp_path / "images.txt"
    images.write_text("http://img/a.jpg\n")
    outs = []
    for i in range(2):
        out = tmp_path / f"ann{i}.jsonl"
        assert main(["annotate", "--images", str(images), "--offline", "--cache-dir", str(cache),
                     "--output", str(out)]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    assert json.loads(outs[0])["objects"][0]["count"] == 2
    images.write_text("http://img/a.jpg\nhttp://img/uncached.jpg\n")
    assert main(["annotate", "--images", str(images), "--offline", "--cache-dir", str(cache),
                 "--output", str(tmp_path / "x.jsonl")]) == 4


def test_synth(tmp_path):
    assert main(["synth", "--images", "5", "--output-dir", str(tmp_path / "s")]) == 0
    assert len((tmp_path / "s" / "annotations_a.jsonl").read_text().splitlines()) == 5
