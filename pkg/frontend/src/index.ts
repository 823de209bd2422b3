export { AnnotationApi, ApiError, OfflineError } from "./api.js";
export {
  blankRecords,
  decodeCompletion,
  encodeCompletion,
  validateRecords,
} from "./codec.js";
export { Editor, diffPaths } from "./editor.js";
export type { EditorState, SubmitOutcome } from "./editor.js";
export { formSpec, linkCandidates } from "./form.js";
export { MemoryStorage, RetryQueue } from "./queue.js";
export { ActiveTimer } from "./timer.js";
export * from "./types.js";
export { mountApp } from "./dom.js";
