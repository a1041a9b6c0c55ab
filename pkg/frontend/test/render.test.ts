import { describe, expect, it } from "vitest";

import { AnnotationApi } from "../src/api.js";
import { ReviewController } from "../src/controller.js";
import {
  COLLAPSE_THRESHOLD,
  escapeHtml,
  renderMessage,
  renderQueryPanel,
} from "../src/render.js";
import { FakeService, toolCallMessages } from "./fakeService.js";

describe("escapeHtml", () => {
  it("neutralizes markup in service content", () => {
    expect(escapeHtml(`<script>alert("x")</script> & more`)).toBe(
      "&lt;script&gt;alert(&quot;x&quot;)&lt;/script&gt; &amp; more"
    );
  });
});

describe("tool response collapsing", () => {
  it("renders short responses inline", () => {
    const html = renderMessage({ role: "tool", content: "short data" }, false);
    expect(html).toContain("<pre");
    expect(html).not.toContain("<details");
  });

  it("collapses responses over the threshold behind an expander", () => {
    const long = "x".repeat(COLLAPSE_THRESHOLD + 1);
    const html = renderMessage({ role: "tool", content: long }, false);
    expect(html).toContain("<details");
    expect(html).toContain(`${long.length} chars`);
  });

  it("keeps responses exactly at the threshold inline", () => {
    const exact = "x".repeat(COLLAPSE_THRESHOLD);
    expect(renderMessage({ role: "tool", content: exact }, false)).not.toContain("<details");
  });
});

describe("judge rationale visibility", () => {
  const message = {
    role: "assistant" as const,
    content: "answer",
    reasoning_content: "internal rationale",
  };

  it("hides rationales by default", async () => {
    const service = new FakeService();
    service.addQuery({ id: "q1", text: "?", category: "reasoning_qa" });
    service.addTrajectory("q1-t0", "q1", toolCallMessages([], "a"));
    const controller = new ReviewController(new AnnotationApi("http://s", service.fetch, "a"));
    await controller.openQuery("q1");
    expect(controller.state.showJudgeRationales).toBe(false);
    expect(renderMessage(message, controller.state.showJudgeRationales)).not.toContain(
      "internal rationale"
    );
  });

  it("reveals rationales only after an explicit toggle", async () => {
    const service = new FakeService();
    service.addQuery({ id: "q1", text: "?", category: "reasoning_qa" });
    const controller = new ReviewController(new AnnotationApi("http://s", service.fetch, "a"));
    controller.toggleJudgeRationales();
    expect(renderMessage(message, controller.state.showJudgeRationales)).toContain(
      "internal rationale"
    );
  });
});

describe("query panel", () => {
  it("shows text, category, tier, and reference answer", () => {
    const html = renderQueryPanel({
      id: "q1",
      text: "What was the revenue?",
      category: "reasoning_qa",
      difficulty_tier: "hard",
      reference_answer: "42",
    });
    expect(html).toContain("What was the revenue?");
    expect(html).toContain("reasoning_qa");
    expect(html).toContain("hard");
    expect(html).toContain("reference: 42");
  });
});
