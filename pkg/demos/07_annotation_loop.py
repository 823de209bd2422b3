"""The human-in-the-loop annotation session, in process.

An intermediate model pre-fills each claimed task; the expert corrects and
submits; timing telemetry accumulates; the export feeds the next
fine-tuning round. Run the same thing over HTTP with:

    matextract annotate-serve --journal journal.jsonl --backend replay --store store.jsonl
"""

import tempfile
from pathlib import Path

from matextract import codec, corpus, llm
from matextract.annosvc import AnnotationService
from matextract.records import MaterialRecord, SchemaId

prompts = [
    "ZnO films were doped with Al for transparent electrodes.",
    "LiCoO2 remains the dominant Li-ion cathode.",
    "Amorphous silica shows no doping response.",
]

# intermediate model: right on the first prompt, partial on the second,
# unparsable on the third (so no pre-fill is offered)
backend = llm.ReplayBackend()
backend.record(
    codec.wrap_prompt(prompts[0]),
    codec.encode(
        SchemaId.GENERAL_JSON,
        [MaterialRecord(formula="ZnO", description=["Al-doped", "films"])],
    )
    + codec.STOP_TOKEN,
)
backend.record(
    codec.wrap_prompt(prompts[1]),
    codec.encode(SchemaId.GENERAL_JSON, [MaterialRecord(formula="LiCoO2")])
    + codec.STOP_TOKEN,
)
backend.record(codec.wrap_prompt(prompts[2]), "mangled output" + codec.STOP_TOKEN)

with tempfile.TemporaryDirectory() as td:
    journal = Path(td) / "journal.jsonl"
    svc = AnnotationService(journal_path=journal, backend=backend)
    ids = svc.ingest(prompts, SchemaId.GENERAL_JSON, model_tag="n=300")

    corrections = [
        None,  # first suggestion is already right: verify it
        codec.encode(
            SchemaId.GENERAL_JSON,
            [MaterialRecord(formula="LiCoO2", applications=["Li-ion battery", "cathode"])],
        ),
        codec.encode(SchemaId.GENERAL_JSON, []),
    ]
    for tid, correction in zip(ids, corrections):
        task = svc.next_task("expert")
        print(f"claimed {task.task_id}: suggestion={'yes' if task.suggestion else 'none'}")
        if correction is None:
            svc.submit(tid, "expert", task.suggestion, verify_only=True)
        else:
            svc.submit(tid, "expert", correction)

    print("\ntiming report:")
    report = svc.timing_report()
    print(f"  results: {report['n_results']}")
    print(f"  corrections:  n={report['correction']['seconds_total']['n']}")
    print(f"  verifications: n={report['verification']['seconds_total']['n']}")
    print(f"  groups: {list(report['groups'])}")

    pairs = svc.export_training_set()
    print(f"\nexported {len(pairs)} training pairs; all parsable by construction")

    with tempfile.NamedTemporaryFile(suffix=".jsonl", delete=False) as fh:
        corpus.build_finetune_file(pairs, fh.name)
        print(f"fine-tune file ready for the next loop iteration: {len(pairs)} lines")

    svc.close()
    restored = AnnotationService(journal_path=journal)
    print("\njournal replay restores state:", restored.counts())
    restored.close()
