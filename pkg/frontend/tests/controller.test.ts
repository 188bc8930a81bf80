import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { LambdaConsole } from "../src/controller.js";
import { flushMicrotasks, makeMockService, makeResponse } from "./helpers.js";

beforeEach(() => {
  vi.useFakeTimers();
});

afterEach(() => {
  vi.useRealTimers();
});

async function settle(): Promise<void> {
  await vi.runAllTimersAsync();
  await flushMicrotasks();
}

describe("slider request discipline", () => {
  it("a rapid drag issues at most one request per debounce window", async () => {
    const service = makeMockService((req) => 20 + req.lambda);
    const console_ = new LambdaConsole(service, { debounceMs: 150 });
    console_.dispatch({ kind: "select-slice", sliceId: "s0" });
    await settle();
    service.requests.length = 0;

    // 30 slider ticks inside one window
    for (let i = 0; i <= 29; i++) {
      console_.onLambdaChange(i / 100);
      vi.advanceTimersByTime(3);
    }
    await settle();
    expect(service.requests).toHaveLength(1);
    expect(service.requests[0]?.lambda).toBe(0.29);
    expect(console_.state.current?.lambda).toBe(0.29);
  });

  it("changes separated by more than the window fetch individually", async () => {
    const service = makeMockService((req) => 20 + req.lambda);
    const console_ = new LambdaConsole(service, { debounceMs: 150 });
    console_.dispatch({ kind: "select-slice", sliceId: "s0" });
    await settle();
    service.requests.length = 0;

    console_.onLambdaChange(0.2);
    await settle();
    console_.onLambdaChange(0.7);
    await settle();
    expect(service.requests.map((r) => r.lambda)).toEqual([0.2, 0.7]);
  });

  it("re-selecting a cached lambda costs no request", async () => {
    const service = makeMockService((req) => 20 + req.lambda);
    const console_ = new LambdaConsole(service, { debounceMs: 150 });
    console_.dispatch({ kind: "select-slice", sliceId: "s0" });
    await settle();
    console_.onLambdaChange(0.4);
    await settle();
    const issued = service.requests.length;

    console_.onLambdaChange(0.8); // moves away but never settles...
    vi.advanceTimersByTime(50);
    console_.onLambdaChange(0.4); // ...and back to the cached value
    await settle();
    expect(service.requests.length).toBe(issued);
    expect(console_.state.current?.lambda).toBe(0.4);
  });

  it("holds (slice, sigma, seed) fixed while lambda moves", async () => {
    const service = makeMockService((req) => 20 + req.lambda);
    const console_ = new LambdaConsole(service, { debounceMs: 150, seed: 42 });
    console_.dispatch({ kind: "select-slice", sliceId: "s0" });
    console_.setSigma(5e-5);
    await settle();
    for (const lambda of [0.1, 0.5, 0.9]) {
      console_.onLambdaChange(lambda);
      await settle();
    }
    const triples = service.requests.map((r) => `${r.slice_id}|${r.sigma}|${r.seed}`);
    expect(new Set(triples).size).toBe(1);
    expect(triples[0]).toBe("s0|0.00005|42");
  });
});

describe("response ordering", () => {
  it("an out-of-order response never overwrites a newer lambda's panels", async () => {
    const service = makeMockService(); // manual resolution
    const console_ = new LambdaConsole(service, { debounceMs: 10 });
    console_.dispatch({ kind: "select-slice", sliceId: "s0" });

    console_.onLambdaChange(0.2);
    await vi.advanceTimersByTimeAsync(20);
    console_.onLambdaChange(0.9);
    await vi.advanceTimersByTimeAsync(20);
    expect(service.pending).toHaveLength(2);

    service.release(1, 18); // newer request resolves first
    await flushMicrotasks();
    expect(console_.state.current?.lambda).toBe(0.9);

    service.release(0, 99); // delayed older response arrives late
    await flushMicrotasks();
    expect(console_.state.current?.lambda).toBe(0.9);
    expect(console_.state.current?.psnr).toBe(18);
  });

  it("displayed metrics equal the service response verbatim", async () => {
    const service = makeMockService((req) => 23.456 + req.lambda);
    const console_ = new LambdaConsole(service, { debounceMs: 10 });
    console_.dispatch({ kind: "select-slice", sliceId: "s0" });
    console_.onLambdaChange(0.31);
    await settle();
    expect(console_.state.current?.psnr).toBe(23.456 + 0.31);
    expect(console_.state.current?.ssim).toBe(0.8);
  });
});

describe("failures and pinning", () => {
  it("service failure raises the banner and retry re-issues", async () => {
    let fail = true;
    const service = makeMockService();
    service.reconstruct = (req) => {
      service.requests.push(req);
      if (fail) return Promise.reject(new Error("connection refused"));
      return Promise.resolve(makeResponse(req, 21));
    };
    const console_ = new LambdaConsole(service, { debounceMs: 10 });
    console_.dispatch({ kind: "select-slice", sliceId: "s0" });
    console_.onLambdaChange(0.5);
    await settle();
    expect(console_.state.error).toContain("connection refused");

    fail = false;
    console_.retry();
    await settle();
    expect(console_.state.error).toBeNull();
    expect(console_.state.current?.psnr).toBe(21);
  });

  it("pinning keeps the pinned panel while the slider moves on", async () => {
    const service = makeMockService((req) => 20 + req.lambda);
    const console_ = new LambdaConsole(service, { debounceMs: 10 });
    console_.dispatch({ kind: "select-slice", sliceId: "s0" });
    console_.onLambdaChange(0.3);
    await settle();
    console_.pinCurrent();
    expect(console_.state.pinnedLambda).toBe(0.3);

    console_.onLambdaChange(0.8);
    await settle();
    expect(console_.state.current?.lambda).toBe(0.8);
    expect(console_.state.pinned?.lambda).toBe(0.3);
    expect(console_.state.pinned?.psnr).toBe(20.3);

    console_.unpin();
    expect(console_.state.pinned).toBeNull();
  });
});
