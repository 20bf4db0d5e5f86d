import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { StudioClient } from "../src/api.js";
import { COMMIT_DEBOUNCE_MS, StudioStore } from "../src/state.js";
import { EventSourceHub, MockService, SAMPLE_DESIGN, flush } from "./mocks.js";

function makeStore() {
  const service = new MockService();
  service.scores = { e1: 0.5, e2: 0.3, e3: 0.7 };
  const hub = new EventSourceHub();
  const client = new StudioClient("", service.fetch);
  const store = new StudioStore(client, hub.factory);
  return { service, hub, client, store };
}

describe("canvas edit commits", () => {
  beforeEach(() => {
    vi.useFakeTimers();
  });
  afterEach(() => {
    vi.useRealTimers();
  });

  it("drag 10 units right PUTs bbox.x increased by 10", async () => {
    const { service, store } = makeStore();
    const id = service.addDesign(SAMPLE_DESIGN);
    await store.load(id);
    store.moveElement("e1", 10, 0);
    await vi.advanceTimersByTimeAsync(COMMIT_DEBOUNCE_MS);
    expect(service.puts).toHaveLength(1);
    const put = service.puts[0]!;
    const e1 = put.design.elements.find((e) => e.id === "e1")!;
    expect(e1.bbox.x).toBe(20);
    expect(e1.bbox.y).toBe(10);
  });

  it("rapid 5-step drag produces exactly one PUT after the debounce window", async () => {
    const { service, store } = makeStore();
    const id = service.addDesign(SAMPLE_DESIGN);
    await store.load(id);
    for (let step = 0; step < 5; step++) {
      store.moveElement("e1", 2, 1);
      await vi.advanceTimersByTimeAsync(50); // inside the 300 ms window
    }
    expect(service.puts).toHaveLength(0);
    await vi.advanceTimersByTimeAsync(COMMIT_DEBOUNCE_MS);
    expect(service.puts).toHaveLength(1);
    const e1 = service.puts[0]!.design.elements.find((e) => e.id === "e1")!;
    expect(e1.bbox.x).toBe(20);
    expect(e1.bbox.y).toBe(15);
  });

  it("re-requests prediction after the commit", async () => {
    const { service, store } = makeStore();
    const id = service.addDesign(SAMPLE_DESIGN);
    await store.load(id);
    const callsAfterLoad = service.predictCalls;
    store.moveElement("e2", -5, 0);
    await vi.advanceTimersByTimeAsync(COMMIT_DEBOUNCE_MS);
    expect(service.predictCalls).toBe(callsAfterLoad + 1);
  });

  it("resize below the minimum is clamped and never PUT invalid", async () => {
    const { service, store } = makeStore();
    const id = service.addDesign(SAMPLE_DESIGN);
    await store.load(id);
    store.resizeElement("e1", 0.2, -3);
    await vi.advanceTimersByTimeAsync(COMMIT_DEBOUNCE_MS);
    expect(service.puts).toHaveLength(1);
    const e1 = service.puts[0]!.design.elements.find((e) => e.id === "e1")!;
    expect(e1.bbox.w).toBe(1);
    expect(e1.bbox.h).toBe(1);
  });

  it("moves are clamped to the canvas", async () => {
    const { service, store } = makeStore();
    const id = service.addDesign(SAMPLE_DESIGN);
    await store.load(id);
    store.moveElement("e1", -1000, 5000);
    await vi.advanceTimersByTimeAsync(COMMIT_DEBOUNCE_MS);
    const e1 = service.puts[0]!.design.elements.find((e) => e.id === "e1")!;
    expect(e1.bbox.x).toBe(0);
    expect(e1.bbox.y).toBe(100 - e1.bbox.h);
  });
});

describe("bar adjustment", () => {
  it("emits a TargetSpec pinning every non-adjusted element to its displayed score", async () => {
    const { service, store } = makeStore();
    const id = service.addDesign(SAMPLE_DESIGN);
    await store.load(id);
    await store.adjustTarget("e2", 0.9);
    expect(service.optimizeBodies).toHaveLength(1);
    expect(service.optimizeBodies[0]!.targets).toEqual({ e1: 0.5, e2: 0.9, e3: 0.7 });
  });

  it("clamps the dragged value into [0, 1]", async () => {
    const { service, store } = makeStore();
    const id = service.addDesign(SAMPLE_DESIGN);
    await store.load(id);
    await store.adjustTarget("e1", 1.7);
    expect(service.optimizeBodies[0]!.targets["e1"]).toBe(1);
  });

  it("shows 'optimization already running' on a 409", async () => {
    const { service, store } = makeStore();
    const id = service.addDesign(SAMPLE_DESIGN);
    await store.load(id);
    service.rejectOptimizeWith409 = true;
    await store.adjustTarget("e1", 0.8);
    expect(store.state.notice).toBe("optimization already running");
    expect(store.state.job).toBeNull();
  });

  it("refuses a second adjustment while a job is running", async () => {
    const { service, store } = makeStore();
    const id = service.addDesign(SAMPLE_DESIGN);
    await store.load(id);
    await store.adjustTarget("e1", 0.8);
    expect(store.jobRunning).toBe(true);
    await store.adjustTarget("e2", 0.4);
    expect(service.optimizeBodies).toHaveLength(1);
    expect(store.state.notice).toBe("optimization already running");
  });

  it("blocks canvas edits while a job is running", async () => {
    const { service, store } = makeStore();
    const id = service.addDesign(SAMPLE_DESIGN);
    await store.load(id);
    await store.adjustTarget("e1", 0.8);
    store.moveElement("e1", 10, 0);
    expect(store.state.notice).toBe("optimization already running");
    expect(store.state.design!.elements[0]!.bbox.x).toBe(10); // unchanged
  });
});

describe("job completion", () => {
  it("commits the streamed best design and refreshes scores", async () => {
    const { service, store, hub } = makeStore();
    const id = service.addDesign(SAMPLE_DESIGN);
    await store.load(id);
    await store.adjustTarget("e1", 0.9);
    const moved = structuredClone(SAMPLE_DESIGN);
    moved.elements[0]!.bbox.x = 33;
    hub.latest.emit("epoch", { epoch: 0, fitness: { mse: 0.1, overlap_penalty: 0, total: 0.1 }, design: moved });
    const job = service.jobs.get("j-1")!;
    job.state = "done";
    hub.latest.emit("end", { state: "done" });
    await flush();
    expect(store.state.job!.state).toBe("done");
    expect(service.puts).toHaveLength(1);
    const e1 = service.puts[0]!.design.elements.find((e) => e.id === "e1")!;
    expect(e1.bbox.x).toBe(33);
    expect(store.state.design!.elements[0]!.bbox.x).toBe(33);
  });

  it("does not commit anything when the job failed before its first epoch", async () => {
    const { service, store, hub } = makeStore();
    const id = service.addDesign(SAMPLE_DESIGN);
    await store.load(id);
    await store.adjustTarget("e1", 0.9);
    hub.latest.emit("end", { state: "failed" });
    await flush();
    expect(service.puts).toHaveLength(0);
    expect(store.state.job!.state).toBe("failed");
  });
});
