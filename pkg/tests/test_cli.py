import json

import pytest

from matextract import cli, codec, corpus, kgraph, llm, scoring
from matextract.cli import main, read_string_lines, write_string_lines
from matextract.records import DopingRecord, SchemaId
from golden_fixtures import DOPING_GOLDEN


@pytest.fixture
def doping_records_file(tmp_path):
    path = tmp_path / "records.json"
    path.write_text(
        json.dumps(
            [
                {"hosts": ["ZnO"], "dopants": ["Al"], "links": [[0, 0]]},
                {"hosts": [], "dopants": ["N"]},
            ]
        )
    )
    return path


class TestEncodeDecode:
    def test_encode_matches_library(self, tmp_path, doping_records_file, capsys):
        out = tmp_path / "completions.txt"
        rc = main(
            [
                "encode",
                "--schema",
                "doping-json",
                "--in",
                str(doping_records_file),
                "--out",
                str(out),
            ]
        )
        assert rc == 0
        completions = read_string_lines(out)
        expected = codec.encode(
            SchemaId.DOPING_JSON,
            DopingRecord(hosts=["ZnO"], dopants=["Al"], links={(0, 0)}),
        )
        assert completions[0] == expected

    def test_decode_reports_unparsable_lines_exit_zero(self, tmp_path, capsys):
        bad = tmp_path / "bad.txt"
        write_string_lines(["[]", "not json", '[{"name":"x"}]'], bad)
        rc = main(
            ["decode", "--schema", "general-json", "--in", str(bad), "--json"]
        )
        assert rc == 0  # parsability is data, not failure
        payload = json.loads(capsys.readouterr().out)
        assert payload["n"] == 3
        assert payload["parsable"] == 2
        assert payload["unparsable"][0]["line"] == 2

    def test_usage_error_exit_two(self):
        with pytest.raises(SystemExit) as exc:
            main(["decode", "--schema", "bogus", "--in", "x"])
        assert exc.value.code == 2

    def test_missing_file_exit_one(self):
        assert main(["decode", "--schema", "mof-json", "--in", "/nope.txt"]) == 1


class TestScore:
    @pytest.fixture
    def files(self, tmp_path):
        gold_path = tmp_path / "gold.txt"
        pred_path = tmp_path / "pred.txt"
        gold, pred = [], []
        for t_sample, p_sample in DOPING_GOLDEN:
            gold.append(codec.encode(SchemaId.DOPING_JSON, t_sample))
            pred.append(codec.encode(SchemaId.DOPING_JSON, p_sample))
        write_string_lines(gold, gold_path)
        write_string_lines(pred, pred_path)
        return gold_path, pred_path, gold, pred

    def test_matches_direct_module_calls(self, files, capsys):
        gold_path, pred_path, gold, pred = files
        rc = main(
            [
                "score",
                "--schema",
                "doping-json",
                "--gold",
                str(gold_path),
                "--pred",
                str(pred_path),
                "--json",
            ]
        )
        assert rc == 0
        payload = json.loads(capsys.readouterr().out)
        direct_seq = scoring.sequence_report(
            SchemaId.DOPING_JSON, list(zip(gold, pred))
        )
        assert payload["sequence"]["exact_match_accuracy"] == pytest.approx(
            direct_seq.exact_match_accuracy
        )
        true_samples = [codec.decode(SchemaId.DOPING_JSON, g).record for g in gold]
        pred_samples = [codec.decode(SchemaId.DOPING_JSON, p).record for p in pred]
        direct = scoring.nerre_prf(
            true_samples, pred_samples, scoring.DOPING_RELATIONS
        )["host-dopant"]
        assert payload["nerre"]["host-dopant"]["f1"] == pytest.approx(direct.f1)
        assert payload["ner"]["host"]["tp"] == scoring.ner_prf(
            true_samples, pred_samples, "host"
        ).tp

    def test_json_schema_stable(self, files, capsys):
        gold_path, pred_path, _, _ = files
        outputs = []
        for _ in range(2):
            main(
                [
                    "score",
                    "--schema",
                    "doping-json",
                    "--gold",
                    str(gold_path),
                    "--pred",
                    str(pred_path),
                    "--json",
                ]
            )
            outputs.append(capsys.readouterr().out)
        assert outputs[0] == outputs[1]

    def test_mismatched_lengths_exit_one(self, files, tmp_path):
        gold_path, _, _, pred = files
        short = tmp_path / "short.txt"
        write_string_lines(pred[:3], short)
        rc = main(
            [
                "score",
                "--schema",
                "doping-json",
                "--gold",
                str(gold_path),
                "--pred",
                str(short),
            ]
        )
        assert rc == 1


class TestExtract:
    def test_replay_extraction(self, tmp_path, capsys):
        store = llm.ReplayBackend()
        prompts = ["Sentence one.", "Sentence two."]
        bodies = [
            codec.encode(
                SchemaId.DOPING_JSON,
                DopingRecord(hosts=["ZnO"], dopants=["Al"], links={(0, 0)}),
            ),
            "truncated nonsense",
        ]
        store.record(codec.wrap_prompt(prompts[0]), bodies[0] + codec.STOP_TOKEN)
        store.record(codec.wrap_prompt(prompts[1]), bodies[1])  # no stop token
        store_path = tmp_path / "store.jsonl"
        store.save(store_path)
        prompts_path = tmp_path / "prompts.txt"
        write_string_lines(prompts, prompts_path)

        rc = main(
            [
                "extract",
                "--schema",
                "doping-json",
                "--backend",
                "replay",
                "--store",
                str(store_path),
                "--in",
                str(prompts_path),
                "--json",
            ]
        )
        assert rc == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["results"][0]["parsable"]
        assert payload["results"][0]["completion"] == bodies[0]
        assert not payload["results"][1]["parsable"]
        assert payload["results"][1]["truncated"]


class TestDatasetCommands:
    def test_filter_build_split_pipeline(self, tmp_path):
        abstracts = [
            corpus.AbstractRecord("1", "t", "ZnO was doped with Al."),
            corpus.AbstractRecord("2", "t", "Dopamine electrodes."),
            corpus.AbstractRecord("3", "t", "A p-type film."),
        ]
        abs_path = tmp_path / "abs.jsonl"
        corpus.save_abstracts(abstracts, abs_path)
        kept_path = tmp_path / "kept.jsonl"
        rc = main(
            [
                "dataset-filter",
                "--task",
                "doping",
                "--in",
                str(abs_path),
                "--out",
                str(kept_path),
            ]
        )
        assert rc == 0
        kept = corpus.load_abstracts(kept_path)
        assert [a.id for a in kept] == ["1", "3"]

        pairs = [
            {
                "prompt": f"Sentence {i}.",
                "completion": codec.encode(SchemaId.DOPING_JSON, DopingRecord()),
                "schema": "doping-json",
                "split": "train",
            }
            for i in range(10)
        ]
        pairs_path = tmp_path / "pairs.json"
        pairs_path.write_text(json.dumps(pairs))
        ft_path = tmp_path / "ft.jsonl"
        assert main(["dataset-build", "--in", str(pairs_path), "--out", str(ft_path)]) == 0
        assert len(ft_path.read_text().splitlines()) == 10

        out_train = tmp_path / "train.json"
        out_test = tmp_path / "test.json"
        rc = main(
            [
                "split",
                "--in",
                str(pairs_path),
                "--seed",
                "7",
                "--test-fraction",
                "0.1",
                "--out-train",
                str(out_train),
                "--out-test",
                str(out_test),
            ]
        )
        assert rc == 0
        assert len(corpus.load_pairs(out_train)) == 9
        assert len(corpus.load_pairs(out_test)) == 1


class TestGraphExport:
    def test_export_equals_library(self, tmp_path):
        records_path = tmp_path / "one.json"
        records_path.write_text(
            json.dumps([{"hosts": ["ZnO"], "dopants": ["Sm"], "links": [[0, 0]]}])
        )
        out = tmp_path / "graph.json"
        rc = main(
            [
                "graph-export",
                "--schema",
                "doping-json",
                "--in",
                str(records_path),
                "--doc-id",
                "docA",
                "--out",
                str(out),
            ]
        )
        assert rc == 0
        expected = kgraph.graph_from_doping(
            DopingRecord(hosts=["ZnO"], dopants=["Sm"], links={(0, 0)}), "docA"
        )
        assert kgraph.load_graph(out) == expected


class TestCurvePlan:
    def test_epoch_schedule(self, capsys):
        rc = main(["curve-plan", "--sizes", "1,2,4,8,16,32,64,128,256", "--json"])
        assert rc == 0
        payload = json.loads(capsys.readouterr().out)
        assert [j["epochs"] for j in payload["jobs"]] == [2, 2, 2, 2, 2, 2, 4, 4, 7]

    def test_human_output(self, capsys):
        assert main(["curve-plan", "--sizes", "32,256"]) == 0
        out = capsys.readouterr().out
        assert "epochs=2" in out and "epochs=7" in out
