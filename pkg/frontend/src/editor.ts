/**
 * Editor state machine: one claimed task, an editable copy of the
 * suggested records, per-field dirty tracking, an active-work timer, and
 * the submit/verify flows. Submitting is impossible while the working
 * records fail schema validation; a network failure queues the submission
 * durably instead of losing it.
 */

import { AnnotationApi, OfflineError, SubmitBody } from "./api.js";
import {
  blankRecords,
  decodeCompletion,
  encodeCompletion,
  validateRecords,
} from "./codec.js";
import { MemoryStorage, RetryQueue, StorageLike } from "./queue.js";
import { ActiveTimer, Clock } from "./timer.js";
import { FieldIssue, TaskView, WorkingRecords } from "./types.js";

export interface EditorState {
  task: TaskView;
  working: WorkingRecords;
  /** Decoded suggestion (or blank) the working copy is diffed against. */
  original: WorkingRecords;
  hadSuggestion: boolean;
  verifyIntent: boolean;
  timer: ActiveTimer;
}

export type SubmitOutcome =
  | { status: "submitted"; next: EditorState | null }
  | { status: "queued" }
  | { status: "invalid"; issues: FieldIssue[] }
  | { status: "rejected"; detail: string };

function deepCopy<T>(value: T): T {
  return JSON.parse(JSON.stringify(value)) as T;
}

/** Top-level form paths whose values differ between two working copies. */
export function diffPaths(a: WorkingRecords, b: WorkingRecords): string[] {
  const out: string[] = [];
  if (a.kind === "doping" && b.kind === "doping") {
    for (const key of ["hosts", "dopants", "links", "results", "modifiers"] as const) {
      if (JSON.stringify(a.record[key]) !== JSON.stringify(b.record[key])) {
        out.push(key);
      }
    }
    return out;
  }
  if (a.kind === "entries" && b.kind === "entries") {
    const n = Math.max(a.entries.length, b.entries.length);
    for (let i = 0; i < n; i++) {
      const ea = a.entries[i] as unknown as Record<string, unknown> | undefined;
      const eb = b.entries[i] as unknown as Record<string, unknown> | undefined;
      if (ea === undefined || eb === undefined) {
        out.push(`entries[${i}]`);
        continue;
      }
      const keys = new Set([...Object.keys(ea), ...Object.keys(eb)]);
      for (const key of keys) {
        if (JSON.stringify(ea[key]) !== JSON.stringify(eb[key])) {
          out.push(`entries[${i}].${key}`);
        }
      }
    }
    return out;
  }
  return ["records"];
}

export class Editor {
  state: EditorState | null = null;
  readonly queue: RetryQueue;

  constructor(
    private api: AnnotationApi,
    private annotator: string,
    opts: { storage?: StorageLike; clock?: Clock } = {},
  ) {
    this.queue = new RetryQueue(opts.storage ?? new MemoryStorage());
    this.clock = opts.clock;
  }

  private clock: Clock | undefined;

  /** Claim the oldest pending task and build the editing state. */
  async loadNext(): Promise<EditorState | null> {
    const task = await this.api.nextTask(this.annotator);
    if (task === null) {
      this.state = null;
      return null;
    }
    let working = blankRecords(task.schema);
    let hadSuggestion = false;
    if (task.suggestion !== null) {
      const decoded = decodeCompletion(task.schema, task.suggestion);
      if (decoded.ok) {
        working = decoded.records;
        hadSuggestion = true;
      }
    }
    const timer = new ActiveTimer(this.clock);
    timer.start();
    this.state = {
      task,
      working,
      original: deepCopy(working),
      hadSuggestion,
      verifyIntent: false,
      timer,
    };
    return this.state;
  }

  /** Apply an edit to the working records; editing clears verify intent. */
  update(mutate: (working: WorkingRecords) => void): void {
    const state = this.requireState();
    mutate(state.working);
    state.verifyIntent = false;
  }

  dirtyFields(): string[] {
    const state = this.requireState();
    return diffPaths(state.original, state.working);
  }

  validationIssues(): FieldIssue[] {
    const state = this.requireState();
    return validateRecords(state.task.schema, state.working);
  }

  canSubmit(): boolean {
    return this.state !== null && this.validationIssues().length === 0;
  }

  /** Verification is only meaningful on an untouched model suggestion. */
  canVerify(): boolean {
    return (
      this.state !== null &&
      this.state.hadSuggestion &&
      this.dirtyFields().length === 0
    );
  }

  setVerifyIntent(on: boolean): void {
    const state = this.requireState();
    if (on && !this.canVerify()) {
      throw new Error("verification requires an unedited suggestion");
    }
    state.verifyIntent = on;
  }

  async submitCorrection(): Promise<SubmitOutcome> {
    return this.submitWith(false);
  }

  /** Submit the untouched suggestion, booking the time as verification. */
  async markVerified(): Promise<SubmitOutcome> {
    if (!this.canVerify()) {
      return {
        status: "rejected",
        detail: "verification requires an unedited suggestion",
      };
    }
    return this.submitWith(true);
  }

  private async submitWith(verifyOnly: boolean): Promise<SubmitOutcome> {
    const state = this.requireState();
    const issues = this.validationIssues();
    if (issues.length) return { status: "invalid", issues };
    const body: SubmitBody = {
      annotator: this.annotator,
      completion: encodeCompletion(state.task.schema, state.working),
      client_seconds: state.timer.finish(),
      verify_only: verifyOnly || state.verifyIntent,
    };
    try {
      await this.api.submit(state.task.task_id, body);
    } catch (exc) {
      if (exc instanceof OfflineError) {
        this.queue.enqueue(state.task.task_id, body);
        this.state = null;
        return { status: "queued" };
      }
      state.timer.start(); // rejection: keep editing, keep timing
      return { status: "rejected", detail: String(exc) };
    }
    const next = await this.loadNext();
    return { status: "submitted", next };
  }

  /** Deliver queued offline submissions; call when connectivity returns. */
  async flushQueue(): Promise<number> {
    return this.queue.flush(async (item) => {
      try {
        await this.api.submit(item.taskId, item.body);
        return true;
      } catch (exc) {
        if (exc instanceof OfflineError) return false;
        return true; // server rejected it (stale/duplicate): drop, don't wedge
      }
    });
  }

  private requireState(): EditorState {
    if (this.state === null) throw new Error("no task loaded");
    return this.state;
  }
}
