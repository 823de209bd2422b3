/**
 * Active-work timer: accumulates only while the tab has focus.
 * Wall-clock on the server stays authoritative; this client-side count is
 * sent along as the annotator's active seconds. Monotonic by
 * construction: elapsed time only ever grows.
 */

export type Clock = () => number; // seconds

export class ActiveTimer {
  private accumulated = 0;
  private runningSince: number | null = null;

  constructor(private clock: Clock = () => Date.now() / 1000) {}

  start(): void {
    if (this.runningSince === null) this.runningSince = this.clock();
  }

  pause(): void {
    if (this.runningSince !== null) {
      this.accumulated += Math.max(0, this.clock() - this.runningSince);
      this.runningSince = null;
    }
  }

  /** Blur pauses, focus resumes; wire these to window events. */
  onBlur = (): void => this.pause();
  onFocus = (): void => this.start();

  get running(): boolean {
    return this.runningSince !== null;
  }

  elapsedSeconds(): number {
    const active =
      this.runningSince === null ? 0 : Math.max(0, this.clock() - this.runningSince);
    return this.accumulated + active;
  }

  /** Stop and read the final count (used at submit time). */
  finish(): number {
    this.pause();
    return this.accumulated;
  }
}
