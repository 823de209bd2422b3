"""Human-in-the-loop annotation service.

Serves passages one at a time with a pre-fill suggested by an intermediate
model, records the expert's corrections with timing telemetry, and exports
the growing training set. State is an append-only JSON-lines journal
replayed at startup; task claiming is the only mutating race and is
serialized under a lock. Server wall-clock timestamps are authoritative
for timing; client-reported active seconds are stored alongside.
"""

from __future__ import annotations

import json
import statistics
import threading
import time
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

from fastapi import FastAPI, HTTPException, Query, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from . import codec, llm
from .records import DopingRecord, PromptCompletionPair, SchemaId


class QueueEmpty(Exception):
    """No pending tasks to claim."""


class SubmissionError(Exception):
    """Stale, duplicate, or mis-attributed submission."""


class InvalidRecords(SubmissionError):
    """Submitted completion does not decode under the task schema."""


class NoResults(Exception):
    """Timing report requested before any submission."""


@dataclass
class AnnotationTask:
    task_id: str
    prompt: str
    schema: SchemaId
    model_tag: str = ""
    status: str = "pending"  # pending | in_progress | done
    suggestion: Optional[str] = None  # canonical completion body
    claimed_by: Optional[str] = None
    claim_ts: Optional[float] = None
    ingest_index: int = 0

    def to_dict(self) -> dict:
        return {
            "task_id": self.task_id,
            "prompt": self.prompt,
            "schema": self.schema.value,
            "model_tag": self.model_tag,
            "status": self.status,
            "suggestion": self.suggestion,
        }


@dataclass(frozen=True)
class AnnotationResult:
    task_id: str
    annotator_id: str
    completion: str  # canonical re-encoding of the corrected records
    seconds_total: float
    seconds_per_entry: float
    seconds_per_token: float
    verify_only: bool = False
    client_seconds: Optional[float] = None
    submitted_ts: float = 0.0

    def to_dict(self) -> dict:
        return {
            "task_id": self.task_id,
            "annotator_id": self.annotator_id,
            "completion": self.completion,
            "seconds_total": self.seconds_total,
            "seconds_per_entry": self.seconds_per_entry,
            "seconds_per_token": self.seconds_per_token,
            "verify_only": self.verify_only,
            "client_seconds": self.client_seconds,
        }


def _entry_count(schema: SchemaId, record) -> int:
    if isinstance(record, DopingRecord):
        return len(record.entities())
    return len(record)


class AnnotationService:
    """Task queue, journal, and timing aggregates behind one lock."""

    def __init__(
        self,
        journal_path=None,
        backend: Optional[llm.CompletionBackend] = None,
        params: Optional[llm.InferenceParams] = None,
        clock: Callable[[], float] = time.time,
    ):
        self._lock = threading.Lock()
        self._tasks: dict[str, AnnotationTask] = {}
        self._order: list[str] = []  # ingest order for FIFO claiming
        self._results: dict[str, AnnotationResult] = {}
        self._backend = backend
        self._params = params
        self._clock = clock
        self._journal_path = journal_path
        self._journal_fh = None
        if journal_path is not None:
            self._replay()
            self._journal_fh = open(journal_path, "a", encoding="utf-8")

    # -- journal --------------------------------------------------------

    def _replay(self) -> None:
        try:
            fh = open(self._journal_path, encoding="utf-8")
        except FileNotFoundError:
            return
        with fh:
            for line in fh:
                if line.strip():
                    self._apply(json.loads(line))

    def _append(self, event: dict) -> None:
        if self._journal_fh is not None:
            self._journal_fh.write(json.dumps(event, ensure_ascii=False) + "\n")
            self._journal_fh.flush()

    def _apply(self, event: dict) -> None:
        kind = event["event"]
        if kind == "ingest":
            task = AnnotationTask(
                task_id=event["task_id"],
                prompt=event["prompt"],
                schema=SchemaId(event["schema"]),
                model_tag=event.get("model_tag", ""),
                ingest_index=len(self._order),
            )
            self._tasks[task.task_id] = task
            self._order.append(task.task_id)
        elif kind == "claim":
            task = self._tasks[event["task_id"]]
            task.status = "in_progress"
            task.claimed_by = event["annotator"]
            task.claim_ts = event["ts"]
            task.suggestion = event.get("suggestion")
        elif kind == "submit":
            task = self._tasks[event["task_id"]]
            result = self._make_result(
                task,
                annotator=event["annotator"],
                completion=event["completion"],
                submit_ts=event["ts"],
                verify_only=event.get("verify_only", False),
                client_seconds=event.get("client_seconds"),
            )
            task.status = "done"
            self._results[task.task_id] = result
        else:
            raise ValueError(f"unknown journal event {kind!r}")

    # -- operations -----------------------------------------------------

    def ingest(
        self, prompts: Sequence[str], schema: SchemaId, model_tag: str = ""
    ) -> list[str]:
        """Bulk-add pending tasks; returns their ids in queue order."""
        schema = SchemaId(schema)
        ids = []
        with self._lock:
            for prompt in prompts:
                if not prompt:
                    raise ValueError("prompt must be non-empty")
                task_id = f"t{len(self._order):06d}"
                event = {
                    "event": "ingest",
                    "task_id": task_id,
                    "prompt": prompt,
                    "schema": schema.value,
                    "model_tag": model_tag,
                    "ts": self._clock(),
                }
                self._apply(event)
                self._append(event)
                ids.append(task_id)
        return ids

    def _suggest(self, task: AnnotationTask) -> Optional[str]:
        """Pre-fill from the intermediate model; never a broken one."""
        if self._backend is None:
            return None
        try:
            out = llm.extract_records(
                task.prompt, task.schema, self._backend, self._params
            )
        except llm.BackendError:
            return None
        if not out.parsable:
            return None
        return codec.encode(task.schema, out.record)

    def next_task(self, annotator_id: str) -> AnnotationTask:
        """Atomically claim the oldest pending task."""
        if not annotator_id:
            raise ValueError("annotator_id must be non-empty")
        with self._lock:
            task = next(
                (
                    self._tasks[tid]
                    for tid in self._order
                    if self._tasks[tid].status == "pending"
                ),
                None,
            )
            if task is None:
                raise QueueEmpty("no pending tasks")
            suggestion = self._suggest(task)
            event = {
                "event": "claim",
                "task_id": task.task_id,
                "annotator": annotator_id,
                "suggestion": suggestion,
                "ts": self._clock(),
            }
            self._apply(event)
            self._append(event)
            return task

    def _make_result(
        self,
        task: AnnotationTask,
        annotator: str,
        completion: str,
        submit_ts: float,
        verify_only: bool,
        client_seconds: Optional[float],
    ) -> AnnotationResult:
        out = codec.decode(task.schema, completion)
        if not out.parsable:
            raise InvalidRecords(f"corrected records invalid: {out.error}")
        canonical = codec.encode(task.schema, out.record)
        seconds_total = max(submit_ts - (task.claim_ts or submit_ts), 1e-6)
        entries = max(1, _entry_count(task.schema, out.record))
        tokens = max(1, llm.whitespace_token_count(task.prompt))
        return AnnotationResult(
            task_id=task.task_id,
            annotator_id=annotator,
            completion=canonical,
            seconds_total=seconds_total,
            seconds_per_entry=seconds_total / entries,
            seconds_per_token=seconds_total / tokens,
            verify_only=verify_only,
            client_seconds=client_seconds,
            submitted_ts=submit_ts,
        )

    def submit(
        self,
        task_id: str,
        annotator_id: str,
        completion: str,
        client_seconds: Optional[float] = None,
        verify_only: bool = False,
    ) -> AnnotationResult:
        """Persist a correction; rejects stale, duplicate, or invalid input."""
        with self._lock:
            task = self._tasks.get(task_id)
            if task is None:
                raise SubmissionError(f"unknown task {task_id!r}")
            if task.status == "done":
                raise SubmissionError(f"duplicate submission for {task_id!r}")
            if task.status != "in_progress" or task.claimed_by != annotator_id:
                raise SubmissionError(
                    f"task {task_id!r} is not in progress for {annotator_id!r}"
                )
            event = {
                "event": "submit",
                "task_id": task_id,
                "annotator": annotator_id,
                "completion": completion,
                "client_seconds": client_seconds,
                "verify_only": verify_only,
                "ts": self._clock(),
            }
            self._apply(event)  # raises InvalidRecords before journaling
            self._append(event)
            return self._results[task_id]

    def export_training_set(
        self, schema: Optional[SchemaId] = None
    ) -> list[PromptCompletionPair]:
        """Corrected records as prompt/completion pairs, by completion time."""
        with self._lock:
            done = [
                (self._results[tid].submitted_ts, t.ingest_index, t, self._results[tid])
                for tid, t in self._tasks.items()
                if t.status == "done"
            ]
        done.sort(key=lambda row: (row[0], row[1]))
        pairs = []
        for _, _, task, result in done:
            if schema is not None and task.schema != SchemaId(schema):
                continue
            pairs.append(
                PromptCompletionPair(
                    prompt=task.prompt,
                    completion=result.completion,
                    schema=task.schema,
                )
            )
        return pairs

    def timing_report(self) -> dict:
        """Mean/median of the three timing metrics, grouped by model tag."""
        with self._lock:
            rows = [
                (self._tasks[tid].model_tag, r)
                for tid, r in self._results.items()
            ]
        if not rows:
            raise NoResults("no submissions yet")

        def summarize(results):
            out = {}
            for metric in ("seconds_total", "seconds_per_entry", "seconds_per_token"):
                values = [getattr(r, metric) for r in results]
                out[metric] = {
                    "n": len(values),
                    "mean": statistics.fmean(values),
                    "median": statistics.median(values),
                }
            return out

        corrections = [r for _, r in rows if not r.verify_only]
        verifications = [r for _, r in rows if r.verify_only]
        report = {
            "n_results": len(rows),
            "correction": summarize(corrections) if corrections else None,
            "verification": summarize(verifications) if verifications else None,
            "groups": {},
        }
        tags = sorted({tag for tag, _ in rows})
        for tag in tags:
            report["groups"][tag] = summarize([r for t, r in rows if t == tag])
        return report

    def snapshot(self, path) -> None:
        """Consolidated state export (the journal stays authoritative)."""
        with self._lock:
            payload = {
                "tasks": [self._tasks[tid].to_dict() for tid in self._order],
                "results": [
                    self._results[tid].to_dict()
                    for tid in self._order
                    if tid in self._results
                ],
            }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, ensure_ascii=False, indent=2)
            fh.write("\n")

    def counts(self) -> dict:
        with self._lock:
            by_status = {"pending": 0, "in_progress": 0, "done": 0}
            for t in self._tasks.values():
                by_status[t.status] += 1
            return by_status

    def close(self) -> None:
        if self._journal_fh is not None:
            self._journal_fh.close()
            self._journal_fh = None


class IngestBody(BaseModel):
    model_config = {"populate_by_name": True, "protected_namespaces": ()}
    prompts: list[str]
    schema_id: str = Field(alias="schema")
    model_tag: str = ""


class SubmitBody(BaseModel):
    annotator: str
    completion: str
    client_seconds: Optional[float] = None
    verify_only: bool = False


def create_app(service: AnnotationService, token: Optional[str] = None) -> FastAPI:
    """FastAPI app exposing the service; optional bearer-token auth."""
    app = FastAPI(title="annotation service")

    def check_auth(request: Request) -> None:
        if token is None:
            return
        header = request.headers.get("Authorization", "")
        if header != f"Bearer {token}":
            raise HTTPException(status_code=401, detail="invalid bearer token")

    @app.post("/tasks")
    def ingest(body: IngestBody, request: Request):
        check_auth(request)
        try:
            ids = service.ingest(body.prompts, SchemaId(body.schema_id), body.model_tag)
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return {"task_ids": ids}

    @app.get("/tasks/next")
    def next_task(request: Request, annotator: str = Query(...)):
        check_auth(request)
        try:
            task = service.next_task(annotator)
        except QueueEmpty:
            return JSONResponse(status_code=404, content={"error": "queue-empty"})
        return task.to_dict()

    @app.post("/tasks/{task_id}/submit")
    def submit(task_id: str, body: SubmitBody, request: Request):
        check_auth(request)
        try:
            result = service.submit(
                task_id,
                body.annotator,
                body.completion,
                client_seconds=body.client_seconds,
                verify_only=body.verify_only,
            )
        except InvalidRecords as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        except SubmissionError as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        return {"ack": True, "result": result.to_dict()}

    @app.get("/export")
    def export(request: Request, schema_id: Optional[str] = Query(default=None, alias="schema")):
        check_auth(request)
        schema = SchemaId(schema_id) if schema_id else None
        pairs = service.export_training_set(schema)
        return [
            {
                "prompt": p.prompt,
                "completion": p.completion,
                "schema": p.schema.value,
                "split": p.split,
            }
            for p in pairs
        ]

    @app.get("/stats")
    def stats(request: Request):
        check_auth(request)
        try:
            return service.timing_report()
        except NoResults:
            return JSONResponse(status_code=404, content={"error": "no-results"})

    return app
