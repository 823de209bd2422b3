import threading

import pytest
from fastapi.testclient import TestClient

from matextract import codec, llm
from matextract.annosvc import (
    AnnotationService,
    InvalidRecords,
    NoResults,
    QueueEmpty,
    SubmissionError,
    create_app,
)
from matextract.records import DopingRecord, MaterialRecord, SchemaId
from matextract.scoring import parsability_rate


def wire(body: str) -> str:
    return body + codec.STOP_TOKEN


def suggestion_backend(prompts_to_records: dict) -> llm.ReplayBackend:
    b = llm.ReplayBackend()
    for prompt, records in prompts_to_records.items():
        body = codec.encode(SchemaId.GENERAL_JSON, records)
        b.record(codec.wrap_prompt(prompt), wire(body))
    return b


class FakeClock:
    def __init__(self, start=1000.0):
        self.now = start

    def __call__(self):
        self.now += 7.5
        return self.now


class TestClaimSubmit:
    def test_queue_of_one(self):
        svc = AnnotationService()
        (tid,) = svc.ingest(["A passage."], SchemaId.GENERAL_JSON)
        task = svc.next_task("alice")
        assert task.task_id == tid
        assert task.status == "in_progress"

    def test_queue_empty_signaled(self):
        svc = AnnotationService()
        with pytest.raises(QueueEmpty):
            svc.next_task("alice")

    def test_fifo_order(self):
        svc = AnnotationService()
        ids = svc.ingest(["P1", "P2", "P3"], SchemaId.GENERAL_JSON)
        got = [svc.next_task("a").task_id for _ in range(3)]
        assert got == ids

    def test_concurrent_single_claim(self):
        svc = AnnotationService()
        svc.ingest(["only one"], SchemaId.GENERAL_JSON)
        outcomes = []

        def worker():
            try:
                outcomes.append(svc.next_task("w").task_id)
            except QueueEmpty:
                outcomes.append(None)

        threads = [threading.Thread(target=worker) for _ in range(2)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert sorted(outcomes, key=str) == [None, "t000000"]

    def test_replay_backed_suggestion(self):
        records = [MaterialRecord(formula="ZnO", applications=["varistor"])]
        svc = AnnotationService(
            backend=suggestion_backend({"The ZnO abstract.": records})
        )
        svc.ingest(["The ZnO abstract."], SchemaId.GENERAL_JSON)
        task = svc.next_task("a")
        assert task.suggestion == codec.encode(SchemaId.GENERAL_JSON, records)

    def test_suggestion_omitted_on_parse_failure(self):
        b = llm.ReplayBackend()
        b.record(codec.wrap_prompt("bad"), wire("utter garbage"))
        svc = AnnotationService(backend=b)
        svc.ingest(["bad"], SchemaId.GENERAL_JSON)
        assert svc.next_task("a").suggestion is None

    def test_suggestion_omitted_on_backend_miss(self):
        svc = AnnotationService(backend=llm.ReplayBackend())
        svc.ingest(["unrecorded"], SchemaId.GENERAL_JSON)
        assert svc.next_task("a").suggestion is None

    def test_submit_timing_derivations(self):
        clock = FakeClock()
        svc = AnnotationService(clock=clock)
        prompt = " ".join(["tok"] * 200)
        (tid,) = svc.ingest([prompt], SchemaId.GENERAL_JSON)
        svc.next_task("a")
        completion = codec.encode(
            SchemaId.GENERAL_JSON,
            [
                MaterialRecord(formula="A1"),
                MaterialRecord(formula="B2"),
                MaterialRecord(formula="C3"),
            ],
        )
        result = svc.submit(tid, "a", completion)
        assert result.seconds_total == pytest.approx(7.5)
        assert result.seconds_per_entry == pytest.approx(7.5 / 3)
        assert result.seconds_per_token == pytest.approx(7.5 / 200)

    def test_duplicate_submit_rejected(self):
        svc = AnnotationService()
        (tid,) = svc.ingest(["P"], SchemaId.GENERAL_JSON)
        svc.next_task("a")
        svc.submit(tid, "a", "[]")
        with pytest.raises(SubmissionError, match="duplicate"):
            svc.submit(tid, "a", "[]")

    def test_unclaimed_submit_rejected(self):
        svc = AnnotationService()
        (tid,) = svc.ingest(["P"], SchemaId.GENERAL_JSON)
        with pytest.raises(SubmissionError):
            svc.submit(tid, "a", "[]")

    def test_wrong_annotator_rejected(self):
        svc = AnnotationService()
        (tid,) = svc.ingest(["P"], SchemaId.GENERAL_JSON)
        svc.next_task("alice")
        with pytest.raises(SubmissionError):
            svc.submit(tid, "bob", "[]")

    def test_invalid_records_rejected_with_diagnostic(self):
        svc = AnnotationService()
        (tid,) = svc.ingest(["P"], SchemaId.GENERAL_JSON)
        svc.next_task("a")
        with pytest.raises(InvalidRecords, match="no root entity"):
            svc.submit(tid, "a", '[{"name":"","formula":""}]')
        # task remains submittable after the rejection
        svc.submit(tid, "a", "[]")


class TestExportAndStats:
    def _run_session(self, n=10):
        svc = AnnotationService()
        prompts = [f"Passage {i} text." for i in range(n)]
        ids = svc.ingest(prompts, SchemaId.DOPING_JSON, model_tag="n=1")
        for i, tid in enumerate(ids):
            svc.next_task("a")
            body = codec.encode(
                SchemaId.DOPING_JSON,
                DopingRecord(hosts=[f"H{i}"], dopants=["X"], links={(0, 0)}),
            )
            svc.submit(tid, "a", body, verify_only=(i % 2 == 0))
        return svc, ids

    def test_export_count_conservation(self):
        svc, ids = self._run_session(10)
        pairs = svc.export_training_set()
        assert len(pairs) == 10
        assert [p.prompt for p in pairs] == [f"Passage {i} text." for i in range(10)]

    def test_export_parsability_is_total(self):
        svc, _ = self._run_session(10)
        pairs = svc.export_training_set()
        assert parsability_rate(
            SchemaId.DOPING_JSON, [p.completion for p in pairs]
        ) == 1.0

    def test_export_round_trips(self):
        svc = AnnotationService()
        (tid,) = svc.ingest(["P"], SchemaId.DOPING_JSON)
        svc.next_task("a")
        record = DopingRecord(hosts=["SnSe"], dopants=["Na"], links={(0, 0)})
        svc.submit(tid, "a", codec.encode(SchemaId.DOPING_JSON, record))
        (pair,) = svc.export_training_set()
        assert codec.decode(pair.schema, pair.completion).record == record

    def test_export_schema_filter(self):
        svc = AnnotationService()
        (t1,) = svc.ingest(["P1"], SchemaId.DOPING_JSON)
        (t2,) = svc.ingest(["P2"], SchemaId.GENERAL_JSON)
        svc.next_task("a")
        svc.next_task("a")
        svc.submit(t1, "a", codec.encode(SchemaId.DOPING_JSON, DopingRecord()))
        svc.submit(t2, "a", "[]")
        assert len(svc.export_training_set(SchemaId.DOPING_JSON)) == 1
        assert len(svc.export_training_set()) == 2

    def test_stats_empty_signaled(self):
        svc = AnnotationService()
        with pytest.raises(NoResults):
            svc.timing_report()

    def test_stats_mean(self):
        clock = FakeClock()
        svc = AnnotationService(clock=clock)
        ids = svc.ingest(["P1", "P2"], SchemaId.GENERAL_JSON)
        # claim/submit interleaved: each takes one 7.5 s tick
        for tid in ids:
            svc.next_task("a")
            svc.submit(tid, "a", "[]")
        report = svc.timing_report()
        assert report["n_results"] == 2
        assert report["correction"]["seconds_total"]["mean"] == pytest.approx(7.5)

    def test_stats_grouped_by_tag_and_verification(self):
        svc = AnnotationService()
        ids1 = svc.ingest(["P1"], SchemaId.GENERAL_JSON, model_tag="n=1")
        ids300 = svc.ingest(["P2"], SchemaId.GENERAL_JSON, model_tag="n=300")
        svc.next_task("a")
        svc.next_task("a")
        svc.submit(ids1[0], "a", "[]")
        svc.submit(ids300[0], "a", "[]", verify_only=True)
        report = svc.timing_report()
        assert set(report["groups"]) == {"n=1", "n=300"}
        assert report["verification"]["seconds_total"]["n"] == 1
        assert report["correction"]["seconds_total"]["n"] == 1


class TestJournal:
    def test_replay_restores_state(self, tmp_path):
        path = tmp_path / "journal.jsonl"
        svc = AnnotationService(journal_path=path)
        ids = svc.ingest(["P1", "P2"], SchemaId.DOPING_JSON)
        svc.next_task("a")
        svc.submit(ids[0], "a", codec.encode(SchemaId.DOPING_JSON, DopingRecord()))
        svc.close()

        restored = AnnotationService(journal_path=path)
        counts = restored.counts()
        assert counts == {"pending": 1, "in_progress": 0, "done": 1}
        assert len(restored.export_training_set()) == 1
        # the restored queue continues where it left off
        task = restored.next_task("b")
        assert task.task_id == ids[1]
        restored.close()

    def test_snapshot(self, tmp_path):
        import json

        svc = AnnotationService()
        (tid,) = svc.ingest(["P"], SchemaId.GENERAL_JSON)
        svc.next_task("a")
        svc.submit(tid, "a", "[]")
        out = tmp_path / "snapshot.json"
        svc.snapshot(out)
        payload = json.loads(out.read_text())
        assert payload["tasks"][0]["status"] == "done"
        assert len(payload["results"]) == 1


class TestIterativeLoop:
    def test_better_intermediate_model_needs_fewer_edits(self):
        """Two replay stores of differing quality; the better pre-fill is
        closer (by similarity) to the gold annotation, as in the
        pre-annotate / correct / retrain loop."""
        from matextract.scoring import jaro_winkler

        prompt = "ZnO films were doped with Al for TCO applications."
        gold = [
            MaterialRecord(
                formula="ZnO",
                description=["Al-doped", "films"],
                applications=["TCO"],
            )
        ]
        gold_body = codec.encode(SchemaId.GENERAL_JSON, gold)

        weak = suggestion_backend({prompt: [MaterialRecord(formula="ZnO")]})
        strong = suggestion_backend(
            {
                prompt: [
                    MaterialRecord(
                        formula="ZnO", description=["Al-doped"], applications=["TCO"]
                    )
                ]
            }
        )
        distances = {}
        for tag, backend in (("weak", weak), ("strong", strong)):
            svc = AnnotationService(backend=backend)
            (tid,) = svc.ingest([prompt], SchemaId.GENERAL_JSON, model_tag=tag)
            task = svc.next_task("expert")
            assert task.suggestion is not None
            distances[tag] = jaro_winkler(task.suggestion, gold_body)
            svc.submit(tid, "expert", gold_body)
            (pair,) = svc.export_training_set()
            assert pair.completion == gold_body
        assert distances["strong"] > distances["weak"]


class TestHttpApi:
    @pytest.fixture
    def client(self):
        records = [MaterialRecord(formula="ZnO")]
        svc = AnnotationService(
            backend=suggestion_backend({"The abstract.": records})
        )
        return TestClient(create_app(svc))

    def test_full_flow(self, client):
        resp = client.post(
            "/tasks",
            json={"prompts": ["The abstract."], "schema": "general-json"},
        )
        assert resp.status_code == 200
        (tid,) = resp.json()["task_ids"]

        resp = client.get("/tasks/next", params={"annotator": "alice"})
        assert resp.status_code == 200
        task = resp.json()
        assert task["task_id"] == tid
        assert task["suggestion"] == '[{"name":"","formula":"ZnO","acronym":"","description":[],"structure_or_phase":[],"applications":[]}]'

        resp = client.post(
            f"/tasks/{tid}/submit",
            json={"annotator": "alice", "completion": task["suggestion"]},
        )
        assert resp.status_code == 200

        resp = client.get("/export", params={"schema": "general-json"})
        assert resp.status_code == 200
        assert len(resp.json()) == 1

        resp = client.get("/stats")
        assert resp.status_code == 200
        assert resp.json()["n_results"] == 1

    def test_queue_empty_http(self, client):
        resp = client.get("/tasks/next", params={"annotator": "a"})
        assert resp.status_code == 404
        assert resp.json() == {"error": "queue-empty"}

    def test_invalid_submission_http(self, client):
        client.post("/tasks", json={"prompts": ["The abstract."], "schema": "general-json"})
        tid = client.get("/tasks/next", params={"annotator": "a"}).json()["task_id"]
        resp = client.post(
            f"/tasks/{tid}/submit",
            json={"annotator": "a", "completion": "not json"},
        )
        assert resp.status_code == 422
        resp = client.post(
            f"/tasks/{tid}/submit", json={"annotator": "b", "completion": "[]"}
        )
        assert resp.status_code == 409

    def test_stats_empty_http(self, client):
        assert client.get("/stats").status_code == 404

    def test_bearer_token(self):
        svc = AnnotationService()
        client = TestClient(create_app(svc, token="hunter2"))
        assert client.get("/stats").status_code == 401
        assert (
            client.get(
                "/stats", headers={"Authorization": "Bearer hunter2"}
            ).status_code
            == 404  # authorized, but no results yet
        )
