import { describe, expect, it } from "vitest";

import { passesConfidenceFilter, ReviewController } from "../src/review.js";
import type { AnnotationDraft } from "../src/types.js";
import { FakeService, MemoryStorage } from "./fakes.js";

const pendingBox = (x: number, score: number | null): AnnotationDraft => ({
  class_id: 1,
  kind: "bbox",
  coords: [x, 10, x + 20, 40],
  detector_score: 0.4,
  verified_score: score,
  source: "auto_verified",
  state: "pending",
});

const acceptedBox = (x: number, score: number | null = null): AnnotationDraft => ({
  class_id: 1,
  kind: "bbox",
  coords: [x, 50, x + 20, 80],
  detector_score: null,
  verified_score: score,
  source: "manual",
  state: "accepted",
});

const seededService = (drafts: AnnotationDraft[]): FakeService => {
  const service = new FakeService({ mode: "detection", classIds: [1] });
  service.addImage({ id: 1, name: "scene.png", width: 400, height: 300 }, drafts);
  return service;
};

describe("accept all", () => {
  it("flips every pending item and the image status to annotated, and it survives a reload", async () => {
    const service = seededService([
      pendingBox(10, 0.9),
      pendingBox(40, 0.8),
      pendingBox(70, 0.7),
      pendingBox(100, 0.6),
      pendingBox(130, 0.5),
    ]);
    const review = new ReviewController(service, 1, new MemoryStorage());
    await review.load(1);
    expect(review.image?.status).toBe("pending_review");
    expect(review.pending.length).toBe(5);

    const outcome = await review.acceptAll();
    expect(outcome.ok).toBe(true);
    expect(review.image?.status).toBe("annotated");
    expect(review.items.every((item) => item.state === "accepted")).toBe(true);

    // a fresh controller sees the same thing: the change is server-side
    const reloaded = new ReviewController(service, 1, new MemoryStorage());
    await reloaded.load(1);
    expect(reloaded.image?.status).toBe("annotated");
    expect(reloaded.items.length).toBe(5);
    expect(reloaded.items.every((item) => item.state === "accepted")).toBe(true);
    expect(reloaded.pending.length).toBe(0);
  });

  it("keeps verification scores on accepted items", async () => {
    const service = seededService([pendingBox(10, 0.87)]);
    const review = new ReviewController(service, 1, new MemoryStorage());
    await review.load(1);
    await review.acceptAll();
    expect(review.items[0]?.verified_score).toBe(0.87);
    expect(review.items[0]?.source).toBe("auto_verified");
  });
});

describe("single accept and reject", () => {
  it("accepting one proposal leaves the rest pending", async () => {
    const service = seededService([pendingBox(10, 0.9), pendingBox(40, 0.8)]);
    const review = new ReviewController(service, 1, new MemoryStorage());
    await review.load(1);
    const target = review.items[0];
    if (target === undefined) throw new Error("seed missing");
    const outcome = await review.accept(target.id);
    expect(outcome.ok).toBe(true);
    // one accepted is enough for the status rule
    expect(review.image?.status).toBe("annotated");
    expect(review.items.filter((i) => i.state === "pending").length).toBe(1);
  });

  it("rejecting deletes the proposal now and after a reload", async () => {
    const service = seededService([pendingBox(10, 0.9), pendingBox(40, 0.2)]);
    const review = new ReviewController(service, 1, new MemoryStorage());
    await review.load(1);
    const victim = review.items[1];
    if (victim === undefined) throw new Error("seed missing");
    const outcome = await review.reject(victim.id);
    expect(outcome.ok).toBe(true);
    expect(review.items.length).toBe(1);
    expect(review.items.some((i) => i.id === victim.id)).toBe(false);

    const reloaded = new ReviewController(service, 1, new MemoryStorage());
    await reloaded.load(1);
    expect(reloaded.items.length).toBe(1);
    expect(reloaded.items.some((i) => i.coords[0] === 40)).toBe(false);
  });
});

describe("confidence slider", () => {
  it("at 0.8 hides pending items with verified score 0.6 and keeps the rest", async () => {
    const service = seededService([
      pendingBox(10, 0.9),
      pendingBox(40, 0.6),
      pendingBox(70, null),
      acceptedBox(100, 0.3),
    ]);
    const review = new ReviewController(service, 1, new MemoryStorage());
    await review.load(1);
    review.setMinConfidence(0.8);
    const visible = review.visibleItems();
    const scores = visible.map((i) => i.verified_score);
    expect(visible.length).toBe(3);
    expect(scores).toContain(0.9);
    expect(scores).not.toContain(0.6);
    // unverified pending items stay, accepted items always stay
    expect(scores).toContain(null);
    expect(scores).toContain(0.3);
  });

  it("the threshold is a boundary, not a strict cut", async () => {
    const service = seededService([pendingBox(10, 0.8)]);
    const review = new ReviewController(service, 1, new MemoryStorage());
    await review.load(1);
    review.setMinConfidence(0.8);
    expect(review.visibleItems().length).toBe(1);
  });

  it("hiding is a view filter, the server list is untouched", async () => {
    const service = seededService([pendingBox(10, 0.9), pendingBox(40, 0.1)]);
    const review = new ReviewController(service, 1, new MemoryStorage());
    await review.load(1);
    review.setMinConfidence(0.8);
    expect(review.visibleItems().length).toBe(1);
    expect(review.items.length).toBe(2);
    expect(service.putCalls).toBe(0);
  });

  it("persists per project and comes back for the next controller", () => {
    const storage = new MemoryStorage();
    const service = seededService([]);
    const first = new ReviewController(service, 1, storage);
    first.setMinConfidence(0.8);
    const second = new ReviewController(service, 1, storage);
    expect(second.minConfidence).toBe(0.8);
    const otherProject = new ReviewController(service, 2, storage);
    expect(otherProject.minConfidence).toBe(0);
    const freshStorage = new ReviewController(service, 1, new MemoryStorage());
    expect(freshStorage.minConfidence).toBe(0);
  });

  it("clamps wild values into [0, 1]", () => {
    const review = new ReviewController(seededService([]), 1, new MemoryStorage());
    review.setMinConfidence(1.5);
    expect(review.minConfidence).toBe(1);
    review.setMinConfidence(-2);
    expect(review.minConfidence).toBe(0);
    review.setMinConfidence(NaN);
    expect(review.minConfidence).toBe(0);
  });

  it("the filter rule itself", () => {
    expect(passesConfidenceFilter("accepted", 0.1, 0.8)).toBe(true);
    expect(passesConfidenceFilter("pending", 0.79, 0.8)).toBe(false);
    expect(passesConfidenceFilter("pending", 0.8, 0.8)).toBe(true);
    expect(passesConfidenceFilter("pending", null, 0.8)).toBe(true);
  });
});

describe("conflicts", () => {
  it("a concurrent edit turns into a refetch prompt, and refetch recovers", async () => {
    const service = seededService([pendingBox(10, 0.9)]);
    const review = new ReviewController(service, 1, new MemoryStorage());
    await review.load(1);

    // someone else accepts everything first
    const rival = new ReviewController(service, 1, new MemoryStorage());
    await rival.load(1);
    await rival.acceptAll();

    const outcome = await review.acceptAll();
    expect(outcome.ok).toBe(false);
    if (!outcome.ok) {
      expect(outcome.conflict).toBe(true);
      expect(outcome.message).toContain("refetch");
    }
    expect(review.conflict).toBe(true);

    await review.refetch();
    expect(review.conflict).toBe(false);
    expect(review.image?.status).toBe("annotated");
    const retry = await review.acceptAll();
    expect(retry.ok).toBe(true);
  });
});
