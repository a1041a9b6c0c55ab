import { beforeEach, describe, expect, it } from "vitest";

import { AnnotationApi } from "../src/api.js";
import { ReviewController } from "../src/controller.js";
import { renderApp, renderChips } from "../src/render.js";
import { FakeService, toolCallMessages } from "./fakeService.js";

const BASE = "http://service.test";

function setup(annotator = "alice") {
  const service = new FakeService();
  service.addQuery({ id: "q1", text: "What was the revenue?", category: "reasoning_qa" });
  service.addQuery({ id: "q2", text: "Compute the ratio.", category: "reasoning_qa" });
  service.addTrajectory("q1-t0", "q1", toolCallMessages(["income_statement"], "Answer A"));
  service.addTrajectory(
    "q1-t1",
    "q1",
    toolCallMessages(["income_statement", "ratios", "ratios"], "Answer B")
  );
  service.addTrajectory("q2-t0", "q2", toolCallMessages(["price_history"], "Answer C"));
  const api = new AnnotationApi(BASE, service.fetch, annotator);
  const controller = new ReviewController(api);
  return { service, controller };
}

describe("end-to-end review workflow", () => {
  let service: FakeService;
  let controller: ReviewController;

  beforeEach(async () => {
    ({ service, controller } = setup());
    await controller.loadQueries();
    await controller.openQuery("q1");
  });

  it("selects a candidate and mirrors the acknowledged selection", async () => {
    await controller.selectCandidate(1);
    expect(controller.state.selectedCandidate).toBe("q1-t1");
    expect(controller.state.errorBanner).toBeNull();
    // the write is durable: reopening reads it back from the service
    await controller.openQuery("q2");
    await controller.openQuery("q1");
    expect(controller.state.selectedCandidate).toBe("q1-t1");
    controller.setActiveTab(1);
    expect(renderApp(controller.state)).toContain("chip-selected");
  });

  it("rolls back the optimistic update and shows a banner on 422", async () => {
    await controller.selectCandidate(0);
    service.failNextSelection = 422;
    await controller.selectCandidate(1);
    expect(controller.state.selectedCandidate).toBe("q1-t0");
    expect(controller.state.errorBanner).toContain("selection rejected");
    expect(renderApp(controller.state)).toContain("error-banner");
  });

  it("sends exactly one selection request per gesture", async () => {
    const before = service.requestLog.filter((r) => r.method === "POST").length;
    await controller.selectCandidate(0);
    const after = service.requestLog.filter((r) => r.method === "POST").length;
    expect(after - before).toBe(1);
  });

  it("flags a trajectory with feedback and queues it", async () => {
    const ok = await controller.flagCandidate("q1-t0", "wrong ticker in turn 2");
    expect(ok).toBe(true);
    expect(service.trajectories.get("q1-t0")?.status).toBe("flagged");
    const entry = controller.state.reviewQueue.find((e) => e.trajectoryId === "q1-t0");
    expect(entry?.status).toBe("flagged");
    expect(entry?.issueText).toBe("wrong ticker in turn 2");
    expect(renderApp(controller.state)).toContain("wrong ticker in turn 2");
  });

  it("rejects empty feedback client-side without a request", async () => {
    const posts = () => service.requestLog.filter((r) => r.path.endsWith("/flag")).length;
    const before = posts();
    const ok = await controller.flagCandidate("q1-t0", "   ");
    expect(ok).toBe(false);
    expect(posts()).toBe(before);
    expect(controller.state.errorBanner).toContain("feedback text is required");
  });

  it("shows the revision in the queue after polling and bumps the badge", async () => {
    await controller.flagCandidate("q1-t0", "missing ratio step");
    const revisedId = service.revise("q1-t0");
    expect(controller.state.reviewQueue.some((e) => e.trajectoryId === revisedId)).toBe(false);

    await controller.refreshQueue();
    const entry = controller.state.reviewQueue.find((e) => e.trajectoryId === revisedId);
    expect(entry?.isRevision).toBe(true);
    expect(controller.state.revisionBadge).toBe(1);
    expect(renderApp(controller.state)).toContain(`badge">1<`);

    // a second poll without new revisions leaves the badge alone
    await controller.refreshQueue();
    expect(controller.state.revisionBadge).toBe(1);
  });

  it("renders turn-count and unique-tool chips equal to the service payload", async () => {
    const payload = await new AnnotationApi(BASE, service.fetch, "x").getCandidates("q1");
    for (const candidate of payload) {
      const chips = renderChips(candidate, false);
      expect(chips).toContain(`turns: ${candidate.turn_count}`);
      expect(chips).toContain(`unique tools: ${candidate.unique_tools}`);
    }
    // spot-check the stub's numbers so the comparison is not vacuous:
    // q1-t1 makes 3 calls over 2 distinct tools across 4 assistant turns
    const t1 = payload.find((c) => c.id === "q1-t1");
    expect(t1?.turn_count).toBe(4);
    expect(t1?.unique_tools).toBe(2);
    controller.setActiveTab(1);
    const html = renderApp(controller.state);
    expect(html).toContain("turns: 4");
    expect(html).toContain("unique tools: 2");
  });

  it("supports keyboard-first review: digits select, n advances", async () => {
    await controller.handleKey("2");
    expect(controller.state.selectedCandidate).toBe("q1-t1");
    await controller.handleKey("n");
    expect(controller.state.activeQueryId).toBe("q2");
  });

  it("guards double submits while a flag is in flight", async () => {
    const first = controller.flagCandidate("q1-t0", "issue one");
    const second = controller.flagCandidate("q1-t1", "issue two");
    expect(await Promise.all([first, second])).toEqual([true, false]);
    expect(service.trajectories.get("q1-t1")?.status).toBe("candidate");
  });
});
