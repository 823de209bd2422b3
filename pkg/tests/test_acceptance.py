"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Run with `pytest tests/test_acceptance.py -v -s` to see the lines inline.
Paper-scale headline results are documentation constants (see the final
criterion), not reproduction targets: they required fine-tuning a
commercial 175B-parameter model.
"""

import random
import re
import threading
import time
from contextlib import contextmanager

import pytest
from fastapi.testclient import TestClient

import oracle_scoring as oracle
from freeze_golden import NER_FIELDS, RELATIONS, sample_pairs, sample_texts
from golden_fixtures import GOLDEN
from matextract import codec, llm, scoring
from matextract.annosvc import AnnotationService, create_app
from matextract.baseline import NerSpan, proximity_link
from matextract.records import DopingRecord, Entity, FieldLabel, SchemaId
from matextract.scoring import RelationSpec
from record_gen import random_payload


@contextmanager
def criterion(name):
    try:
        yield
    except BaseException:
        print(f"\nACCEPTANCE FAIL  {name}")
        raise
    print(f"\nACCEPTANCE PASS  {name}")


def test_jaro_winkler_anchor():
    with criterion("jaro-winkler anchor 0.977 +/- 0.001, < 1 ms"):
        got = scoring.jaro_winkler("Bi2Te3 nanoparticles", "Bi2Se3 nanoparticles")
        assert abs(got - 0.977) <= 1e-3
        start = time.perf_counter()
        n = 1000
        for _ in range(n):
            scoring.jaro_winkler("Bi2Te3 nanoparticles", "Bi2Se3 nanoparticles")
        per_call = (time.perf_counter() - start) / n
        assert per_call < 1e-3, f"{per_call * 1e3:.3f} ms per call"


def test_word_match_anchors():
    with criterion("word-match worked examples, exact integers"):
        prf = scoring.entity_prf(
            [Entity("Bi2Te3 thin film", FieldLabel.HOST)],
            [Entity("Bi2Te3 film sample", FieldLabel.HOST)],
            FieldLabel.HOST,
        )
        assert (prf.tp, prf.fn, prf.fp) == (2, 1, 1)
        prf = scoring.entity_prf(
            [Entity("Bi2Te3 thin film", FieldLabel.HOST)],
            [Entity("thin film", FieldLabel.HOST)],
            FieldLabel.HOST,
        )
        assert (prf.tp, prf.fn, prf.fp) == (0, 3, 0)


def test_codec_round_trip_thousand_per_schema():
    with criterion("codec round-trip, 1000 randomized records x 5 schemas, < 10 s"):
        start = time.perf_counter()
        for schema in SchemaId:
            rng = random.Random(f"acceptance-{schema.value}")
            for _ in range(1000):
                payload = random_payload(schema, rng)
                out = codec.decode(schema, codec.encode(schema, payload))
                assert out.parsable
                expect = tuple(payload) if isinstance(payload, list) else payload
                assert out.record == expect
        elapsed = time.perf_counter() - start
        assert elapsed < 10.0, f"{elapsed:.2f} s"


ENG_PARADIGMS = [
    (
        "The host 'SnSe' was doped with 'Na', 'Ag', and 'K'.",
        DopingRecord(
            hosts=["SnSe"], dopants=["Na", "Ag", "K"], links={(0, 0), (0, 1), (0, 2)}
        ),
    ),
    (
        "The host 'SnSe' was doped with 'Na' and 'Ag'.",
        DopingRecord(hosts=["SnSe"], dopants=["Na", "Ag"], links={(0, 0), (0, 1)}),
    ),
    (
        "The host 'ZnO' was doped with 'Al'.",
        DopingRecord(hosts=["ZnO"], dopants=["Al"], links={(0, 0)}),
    ),
    ("'N' is a dopant.", DopingRecord(dopants=["N"])),
    ("The host 'GaN' was doped.", DopingRecord(hosts=["GaN"])),
    (
        "'AlxGa1-xAs' is a possible doped result formula.",
        DopingRecord(results=["AlxGa1-xAs"]),
    ),
    (
        "Modifiers of the doping are 'n-type', '5 at.%'.",
        DopingRecord(modifiers=["n-type", "5 at.%"]),
    ),
    ("There is no doping information.", DopingRecord()),
]


def payload_spans(line):
    """Character index set of entity payloads (text between quote pairs)."""
    spans = set()
    for m in re.finditer(r"'([^']*)'", line):
        spans.update(range(m.start(1), m.end(1)))
    return spans


def test_eng_grammar_conformance():
    with criterion("ENG paradigm strings parse; keyword mutations unparsable"):
        for line, expected in ENG_PARADIGMS:
            out = codec.decode_doping_eng(line)
            assert out.parsable, (line, out.error)
            assert out.record == expected, line
        mutations = 0
        for line, _ in ENG_PARADIGMS:
            payload = payload_spans(line)
            for i, ch in enumerate(line):
                if i in payload:
                    continue
                repl = "x" if ch != "x" else "q"
                mutated = line[:i] + repl + line[i + 1 :]
                out = codec.decode_doping_eng(mutated)
                assert not out.parsable, (line, i, mutated)
                mutations += 1
        assert mutations > 200  # every keyword character of every paradigm


def test_scoring_oracle_equivalence():
    with criterion("nerre/ner vs brute-force oracle on golden fixtures, 1e-12, < 5 s"):
        start = time.perf_counter()
        for task, fixture in GOLDEN.items():
            assert len(fixture) == 20
            true_samples = [t for t, _ in fixture]
            pred_samples = [p for _, p in fixture]
            for root_field, other_field, label in RELATIONS[task]:
                spec = RelationSpec(
                    FieldLabel(root_field), FieldLabel(other_field), label
                )
                got = scoring.nerre_prf(true_samples, pred_samples, spec)[label]
                tp = fp = fn = 0
                for t, p in fixture:
                    d = oracle.nerre_counts(
                        sample_pairs(t, root_field, other_field),
                        sample_pairs(p, root_field, other_field),
                        label,
                        root_field in oracle.FORMULA_FIELDS,
                        other_field in oracle.FORMULA_FIELDS,
                    )
                    tp, fp, fn = tp + d[0], fp + d[1], fn + d[2]
                assert (got.tp, got.fp, got.fn) == (tp, fp, fn)
                expect = oracle.prf(tp, fp, fn)
                assert abs(got.precision - expect[0]) <= 1e-12
                assert abs(got.recall - expect[1]) <= 1e-12
                assert abs(got.f1 - expect[2]) <= 1e-12
            for field in NER_FIELDS[task]:
                got = scoring.ner_prf(true_samples, pred_samples, FieldLabel(field))
                tp = fp = fn = 0
                for t, p in fixture:
                    d = oracle.entity_counts(
                        sample_texts(t, field), sample_texts(p, field), field
                    )
                    tp, fp, fn = tp + d[0], fp + d[1], fn + d[2]
                assert (got.tp, got.fp, got.fn) == (tp, fp, fn)
                expect = oracle.prf(tp, fp, fn)
                assert abs(got.precision - expect[0]) <= 1e-12
                assert abs(got.recall - expect[1]) <= 1e-12
                assert abs(got.f1 - expect[2]) <= 1e-12
        elapsed = time.perf_counter() - start
        assert elapsed < 5.0, f"{elapsed:.2f} s"


def test_sequence_report_algebra():
    with criterion("weighted bin means equal global means (1e-12); EM <= parsability"):
        rng = random.Random("algebra")
        schema = SchemaId.DOPING_JSON
        for trial in range(10):
            pairs = []
            for _ in range(40):
                t = codec.encode(schema, random_payload(schema, rng))
                roll = rng.random()
                if roll < 0.35:
                    p = t
                elif roll < 0.6:
                    p = t[: max(1, len(t) - 5)]
                else:
                    p = codec.encode(schema, random_payload(schema, rng))
                pairs.append((t, p))
            rep = scoring.sequence_report(schema, pairs, bin_edges=[0, 2, 4, 8])
            assert sum(b.n for b in rep.per_bin) == rep.n
            for attr in ("exact_match_accuracy", "mean_similarity", "parsability_rate"):
                weighted = sum(getattr(b, attr) * b.n for b in rep.per_bin) / rep.n
                assert abs(weighted - getattr(rep, attr)) <= 1e-12
            assert rep.exact_match_accuracy <= rep.parsability_rate + 1e-12


def test_baseline_determinism():
    with criterion("proximity links = |hosts| x |dopants| per sentence; order-invariant"):
        rng = random.Random("baseline-acc")
        for _ in range(50):
            sentences = []
            spans = []
            pos = 0
            expected = 0
            for i in range(rng.randint(1, 6)):
                n_h, n_d = rng.randint(0, 3), rng.randint(0, 3)
                words = [f"H{i}w{j}" for j in range(n_h)]
                words += [f"D{i}w{j}" for j in range(n_d)]
                words.append("end.")
                sent = " ".join(words) + " "
                for j in range(n_h):
                    off = pos + sent.index(f"H{i}w{j}")
                    spans.append(NerSpan(f"H{i}w{j}", "host", off, off + len(f"H{i}w{j}")))
                for j in range(n_d):
                    off = pos + sent.index(f"D{i}w{j}")
                    spans.append(
                        NerSpan(f"D{i}w{j}", "dopant", off, off + len(f"D{i}w{j}"))
                    )
                sentences.append((sent, (pos, pos + len(sent))))
                pos += len(sent)
                expected += n_h * n_d
            record = proximity_link(spans, sentences)
            assert len(record.links) == expected
            shuffled = spans[:]
            rng.shuffle(shuffled)
            assert proximity_link(shuffled, sentences) == record


def test_pipeline_determinism():
    with criterion("replay pipeline byte-identical; truncations flagged unparsable"):
        rng = random.Random("pipeline-acc")
        schema = SchemaId.GENERAL_JSON
        backend = llm.ReplayBackend()
        prompts = [f"Abstract number {i} text." for i in range(10)]
        n_truncated = 0
        for i, p in enumerate(prompts):
            body = codec.encode(schema, random_payload(schema, rng))
            if i % 3 == 0:
                backend.record(codec.wrap_prompt(p), body[: max(1, len(body) // 2)])
                n_truncated += 1
            else:
                backend.record(codec.wrap_prompt(p), body + codec.STOP_TOKEN)
        runs = []
        for _ in range(3):
            runs.append(
                [llm.extract_records(p, schema, backend) for p in prompts]
            )
        assert runs[0] == runs[1] == runs[2]
        truncated = [o for o in runs[0] if o.truncated]
        assert len(truncated) == n_truncated
        assert all(not o.parsable for o in truncated)


def test_config_anchors():
    with criterion("finetune defaults (7,1,0.1,0.01)/(4,1,0.1,0.01); epoch schedule"):
        for schema in (SchemaId.DOPING_JSON, SchemaId.DOPING_ENG, SchemaId.DOPING_EXTRA_ENG):
            cfg = llm.default_finetune_config(schema)
            assert (
                cfg.epochs,
                cfg.batch_size,
                cfg.lr_multiplier,
                cfg.prompt_loss_weight,
            ) == (7, 1, 0.1, 0.01)
        for schema in (SchemaId.GENERAL_JSON, SchemaId.MOF_JSON):
            cfg = llm.default_finetune_config(schema)
            assert (
                cfg.epochs,
                cfg.batch_size,
                cfg.lr_multiplier,
                cfg.prompt_loss_weight,
            ) == (4, 1, 0.1, 0.01)
        plan = llm.learning_curve_plan([32, 64, 128, 256])
        assert [j["epochs"] for j in plan] == [2, 4, 4, 7]


def test_service_correctness_racing_clients():
    with criterion("8 racing clients, 100 tasks: one claim each, export == submits, < 30 s"):
        start = time.perf_counter()
        service = AnnotationService()
        client = TestClient(create_app(service))
        prompts = [f"Passage {i} with several tokens." for i in range(100)]
        resp = client.post(
            "/tasks", json={"prompts": prompts, "schema": "general-json"}
        )
        assert resp.status_code == 200
        claims: dict[str, list] = {}
        claims_lock = threading.Lock()
        errors = []

        def run_client(worker: int):
            try:
                while True:
                    r = client.get(
                        "/tasks/next", params={"annotator": f"w{worker}"}
                    )
                    if r.status_code == 404:
                        return
                    task = r.json()
                    with claims_lock:
                        claims.setdefault(task["task_id"], []).append(worker)
                    body = codec.encode(
                        SchemaId.GENERAL_JSON, random_payload(
                            SchemaId.GENERAL_JSON, random.Random(task["task_id"])
                        ),
                    )
                    s = client.post(
                        f"/tasks/{task['task_id']}/submit",
                        json={"annotator": f"w{worker}", "completion": body},
                    )
                    if s.status_code != 200:
                        errors.append((task["task_id"], s.status_code, s.text))
            except Exception as exc:  # surface thread failures in the main test
                errors.append(repr(exc))

        threads = [threading.Thread(target=run_client, args=(w,)) for w in range(8)]
        for t in threads:
            t.start()
        for t in threads:
            t.join(timeout=30)
        assert not errors, errors[:3]
        assert len(claims) == 100
        assert all(len(v) == 1 for v in claims.values()), "task claimed twice"
        exported = client.get("/export").json()
        assert len(exported) == 100
        rate = scoring.parsability_rate(
            SchemaId.GENERAL_JSON, [e["completion"] for e in exported]
        )
        assert rate == 1.0
        elapsed = time.perf_counter() - start
        assert elapsed < 30.0, f"{elapsed:.1f} s"


def test_non_reproducibility_statement():
    with criterion("paper-scale results recorded as documentation constants only"):
        # Headline numbers (Tables 2-7) come from fine-tuning a commercial
        # 175B-parameter model; they are not reproducible at desk scale and
        # the acceptance basis is the property/oracle suites above.
        refs = scoring.REFERENCE_RESULTS
        assert refs["doping-extra-eng/host-dopant-f1"] == 0.849
        assert refs["general-json/exact-match"] == 0.256
        assert refs["doping-json/exact-match"] == 0.649
        assert refs["general-json/manual-formula-f1"] == 0.943
        assert refs["matbert-proximity/host-dopant-precision"] == 0.441
        print(
            "\nNOTE: paper-scale F1/exact-match values are documentation "
            "constants; reproducing them requires commercial fine-tuning."
        )
