/**
 * Offline retry queue for submissions. Entries persist through a
 * localStorage-shaped store so nothing is lost on reload; flush() retries
 * in order and stops at the first delivery failure so ordering holds.
 */

import { SubmitBody } from "./api.js";

export interface StorageLike {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
  removeItem(key: string): void;
}

/** In-memory stand-in used in tests and non-browser contexts. */
export class MemoryStorage implements StorageLike {
  private map = new Map<string, string>();
  getItem(key: string): string | null {
    return this.map.has(key) ? this.map.get(key)! : null;
  }
  setItem(key: string, value: string): void {
    this.map.set(key, value);
  }
  removeItem(key: string): void {
    this.map.delete(key);
  }
}

export interface QueuedSubmission {
  taskId: string;
  body: SubmitBody;
  queuedAt: number;
}

const STORE_KEY = "annoui.retry-queue";

export class RetryQueue {
  private items: QueuedSubmission[];

  constructor(private storage: StorageLike) {
    this.items = JSON.parse(storage.getItem(STORE_KEY) ?? "[]");
  }

  get length(): number {
    return this.items.length;
  }

  peekAll(): QueuedSubmission[] {
    return [...this.items];
  }

  enqueue(taskId: string, body: SubmitBody): void {
    this.items.push({ taskId, body, queuedAt: Date.now() });
    this.persist();
  }

  /**
   * Deliver queued submissions in order via `send`; a false/thrown result
   * stops the pass and keeps the remainder queued. Returns the number
   * delivered.
   */
  async flush(send: (item: QueuedSubmission) => Promise<boolean>): Promise<number> {
    let delivered = 0;
    while (this.items.length) {
      const item = this.items[0];
      let ok = false;
      try {
        ok = await send(item);
      } catch {
        ok = false;
      }
      if (!ok) break;
      this.items.shift();
      this.persist();
      delivered += 1;
    }
    return delivered;
  }

  private persist(): void {
    this.storage.setItem(STORE_KEY, JSON.stringify(this.items));
  }
}
