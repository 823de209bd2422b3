import { describe, expect, it } from "vitest";

import { ActiveTimer } from "../src/timer.js";
import { MemoryStorage, RetryQueue } from "../src/queue.js";

function fakeClock(start = 0) {
  let now = start;
  const clock = () => now;
  return { clock, advance: (s: number) => (now += s) };
}

describe("ActiveTimer", () => {
  it("accumulates only while running", () => {
    const { clock, advance } = fakeClock();
    const t = new ActiveTimer(clock);
    t.start();
    advance(10);
    expect(t.elapsedSeconds()).toBe(10);
    t.pause();
    advance(100);
    expect(t.elapsedSeconds()).toBe(10);
    t.start();
    advance(5);
    expect(t.finish()).toBe(15);
  });

  it("never counts blurred time", () => {
    const { clock, advance } = fakeClock();
    const t = new ActiveTimer(clock);
    t.start();
    advance(3);
    t.onBlur();
    advance(60); // tab in background
    t.onFocus();
    advance(2);
    expect(t.elapsedSeconds()).toBe(5);
  });

  it("is monotonic", () => {
    const { clock, advance } = fakeClock();
    const t = new ActiveTimer(clock);
    let last = 0;
    t.start();
    for (let i = 0; i < 20; i++) {
      advance(1);
      if (i % 3 === 0) t.onBlur();
      if (i % 3 === 1) t.onFocus();
      const now = t.elapsedSeconds();
      expect(now).toBeGreaterThanOrEqual(last);
      last = now;
    }
  });

  it("double start/pause are idempotent", () => {
    const { clock, advance } = fakeClock();
    const t = new ActiveTimer(clock);
    t.start();
    t.start();
    advance(4);
    t.pause();
    t.pause();
    expect(t.elapsedSeconds()).toBe(4);
  });
});

describe("RetryQueue", () => {
  const body = { annotator: "a", completion: "[]" };

  it("persists across reloads", () => {
    const storage = new MemoryStorage();
    const q1 = new RetryQueue(storage);
    q1.enqueue("t1", body);
    q1.enqueue("t2", body);
    const q2 = new RetryQueue(storage); // simulated reload
    expect(q2.length).toBe(2);
    expect(q2.peekAll().map((i) => i.taskId)).toEqual(["t1", "t2"]);
  });

  it("flushes in order and stops at the first failure", async () => {
    const storage = new MemoryStorage();
    const q = new RetryQueue(storage);
    for (const id of ["t1", "t2", "t3"]) q.enqueue(id, body);
    const sent: string[] = [];
    const delivered = await q.flush(async (item) => {
      if (item.taskId === "t3") return false;
      sent.push(item.taskId);
      return true;
    });
    expect(delivered).toBe(2);
    expect(sent).toEqual(["t1", "t2"]);
    expect(q.length).toBe(1);
    // still there after a reload
    expect(new RetryQueue(storage).peekAll()[0].taskId).toBe("t3");
  });

  it("treats thrown errors as delivery failure", async () => {
    const q = new RetryQueue(new MemoryStorage());
    q.enqueue("t1", body);
    const delivered = await q.flush(async () => {
      throw new Error("offline");
    });
    expect(delivered).toBe(0);
    expect(q.length).toBe(1);
  });
});
