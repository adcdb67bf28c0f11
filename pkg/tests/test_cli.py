import json

import pytest
from click.testing import CliRunner

from snipsearch.cli import main

from conftest import form_payload_for, stack_page


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def twin_form_file(tmp_path):
    pages = [stack_page("A", 0, "THLAF"), stack_page("B", 0, "THLAF")]
    path = tmp_path / "twin.json"
    path.write_text(form_payload_for(pages))
    return str(path)


@pytest.fixture
def twin_index(runner, twin_form_file, tmp_path):
    out = str(tmp_path / "twin.idx")
    result = runner.invoke(main, [
        "ingest", "--format", "form", "--alphabet", "publaynet",
        twin_form_file, "--out", out,
    ])
    assert result.exit_code == 0, result.output
    return out


class TestIngestCommand:
    def test_success_reports_pages(self, runner, twin_form_file, tmp_path):
        out = str(tmp_path / "x.idx")
        result = runner.invoke(main, [
            "ingest", "--format", "form", twin_form_file, "--out", out,
        ])
        assert result.exit_code == 0
        assert json.loads(result.output)["n_pages"] == 2

    def test_malformed_input_exits_nonzero_with_json_error(self, runner, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text('{"pages": [{"width": -1, "height": 5, "elements": []}]}')
        out = str(tmp_path / "x.idx")
        result = runner.invoke(main, [
            "ingest", "--format", "form", str(bad), "--out", out,
        ])
        assert result.exit_code == 1
        line = result.output.strip().splitlines()[-1]
        assert json.loads(line)["error"]["code"] == "malformed_annotation"

    def test_deterministic_index_bytes(self, runner, twin_form_file, tmp_path):
        out_a, out_b = str(tmp_path / "a.idx"), str(tmp_path / "b.idx")
        for out in (out_a, out_b):
            result = runner.invoke(main, [
                "ingest", "--format", "form", twin_form_file, "--out", out,
            ])
            assert result.exit_code == 0
        assert open(out_a, "rb").read() == open(out_b, "rb").read()


class TestMineStatsSplit:
    def test_mine_writes_deterministic_jsonl(self, runner, twin_index, tmp_path):
        out_a, out_b = str(tmp_path / "a.jsonl"), str(tmp_path / "b.jsonl")
        for out in (out_a, out_b):
            result = runner.invoke(main, [
                "mine", "--index", twin_index, "--th-sim", "0.92",
                "--min-len", "2", "--max-len", "5", "--seed", "7", "--out", out,
            ])
            assert result.exit_code == 0, result.output
        assert open(out_a, "rb").read() == open(out_b, "rb").read()
        assert json.loads(runner.invoke(main, [
            "mine", "--index", twin_index, "--min-len", "2", "--max-len", "5",
            "--seed", "7", "--out", str(tmp_path / "c.jsonl"),
        ]).output)["n_pairs"] > 0

    def test_stats_and_split(self, runner, twin_index, tmp_path):
        pairs = str(tmp_path / "p.jsonl")
        runner.invoke(main, [
            "mine", "--index", twin_index, "--min-len", "2", "--max-len", "5",
            "--seed", "7", "--out", pairs,
        ])
        stats = runner.invoke(main, ["stats", "--pairs", pairs, "--json"])
        assert stats.exit_code == 0
        body = json.loads(stats.output)
        assert body["n_pairs"] > 0

        labels = str(tmp_path / "labels.jsonl")
        split = runner.invoke(main, [
            "split", "--train", pairs, "--test", pairs, "--out", labels,
        ])
        assert split.exit_code == 0
        assert json.loads(split.output)["unseen"] == 0
        lines = [json.loads(l) for l in open(labels)]
        assert all(l["label"] == "seen" for l in lines)


class TestSearchCommand:
    def test_json_output(self, runner, twin_index):
        result = runner.invoke(main, [
            "search", "--index", twin_index, "--doc", "A", "--page", "0",
            "--bbox", "0,0,136,200", "--json",
        ])
        assert result.exit_code == 0, result.output
        body = json.loads(result.output)
        assert body["query_lstr"] == "THLAF"
        assert body["matches"][0]["score"] == 1.0

    def test_env_var_supplies_index(self, runner, twin_index):
        result = runner.invoke(main, [
            "search", "--doc", "A", "--bbox", "0,0,136,200", "--json",
        ], env={"SNIPSEARCH_INDEX": twin_index})
        assert result.exit_code == 0, result.output

    def test_unknown_doc_fails_cleanly(self, runner, twin_index):
        result = runner.invoke(main, [
            "search", "--index", twin_index, "--doc", "Z",
            "--bbox", "0,0,10,10",
        ])
        assert result.exit_code == 1
        line = result.output.strip().splitlines()[-1]
        assert json.loads(line)["error"]["code"] == "unknown_document"


class TestEvalAndBaseline:
    def test_eval_pipeline(self, runner, twin_index, tmp_path):
        pairs = str(tmp_path / "p.jsonl")
        runner.invoke(main, [
            "mine", "--index", twin_index, "--min-len", "5", "--max-len", "5",
            "--seed", "0", "--out", pairs,
        ])
        # Perfect predictions: echo the gt regions back as detections.
        preds = str(tmp_path / "preds.jsonl")
        with open(preds, "w") as fh:
            for i, line in enumerate(open(pairs)):
                rec = json.loads(line)
                fh.write(json.dumps({
                    "pair_id": i,
                    "detections": [
                        {"bbox": g["bbox"], "score": 0.95} for g in rec["gt"]
                    ],
                }) + "\n")
        report_path = str(tmp_path / "report.json")
        result = runner.invoke(main, [
            "eval", "--pred", preds, "--gt", pairs, "--report", report_path,
        ])
        assert result.exit_code == 0, result.output
        report = json.loads(open(report_path).read())
        assert report["map"] == 100.0
        assert report["ap50"] == 100.0

    def test_baseline_produces_predictions(self, runner, twin_index, tmp_path):
        pairs = str(tmp_path / "p.jsonl")
        runner.invoke(main, [
            "mine", "--index", twin_index, "--min-len", "5", "--max-len", "5",
            "--seed", "0", "--out", pairs,
        ])
        out = str(tmp_path / "ssd.jsonl")
        result = runner.invoke(main, [
            "baseline", "ssd", "--index", twin_index, "--pairs", pairs,
            "--cell", "4", "--out", out,
        ])
        assert result.exit_code == 0, result.output
        lines = [json.loads(l) for l in open(out)]
        assert lines
        assert all("pair_id" in l and "detections" in l for l in lines)
        # Twin pages: the verbatim copy must be found with SSD score 0,
        # i.e. confidence 1.
        assert any(
            d["score"] == 1.0 for l in lines for d in l["detections"]
        )


class TestFusionCheckCommand:
    def test_tiny_profile(self, runner):
        result = runner.invoke(main, ["fusion-check", "--profile", "tiny"])
        assert result.exit_code == 0, result.output
        body = json.loads(result.output)
        assert body["attention_rows_sum_to_one"] is True
        assert body["f_sim"] == [8, 40]
        assert body["f_feat"] == [8, 4, 4]
        assert body["pyramid"] == [[3, 4, 4], [5, 4, 4], [7, 4, 4], [9, 4, 4]]
