import type { ViewState } from "./controller.js";
import type { CandidatePayload, MessagePayload, QueryPayload } from "./types.js";

/** Tool responses longer than this collapse behind an expander so
 * side-by-side comparison stays scannable. */
export const COLLAPSE_THRESHOLD = 2000;

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function renderQueryPanel(query: QueryPayload): string {
  const rows = [
    `<h2 class="query-text">${escapeHtml(query.text)}</h2>`,
    `<span class="chip chip-category">${escapeHtml(query.category)}</span>`,
  ];
  if (query.difficulty_tier) {
    rows.push(`<span class="chip chip-tier">${escapeHtml(query.difficulty_tier)}</span>`);
  }
  if (query.reference_answer) {
    rows.push(
      `<div class="reference-answer">reference: ${escapeHtml(query.reference_answer)}</div>`
    );
  }
  return `<section class="query-panel">${rows.join("")}</section>`;
}

function renderToolResponse(content: string): string {
  if (content.length <= COLLAPSE_THRESHOLD) {
    return `<pre class="tool-response">${escapeHtml(content)}</pre>`;
  }
  const preview = escapeHtml(content.slice(0, 200));
  return (
    `<details class="tool-response collapsed">` +
    `<summary>${preview}… (${content.length} chars)</summary>` +
    `<pre>${escapeHtml(content)}</pre></details>`
  );
}

export function renderMessage(message: MessagePayload, showRationales: boolean): string {
  const parts: string[] = [];
  if (message.reasoning_content && showRationales) {
    parts.push(`<div class="reasoning">${escapeHtml(message.reasoning_content)}</div>`);
  }
  for (const call of message.tool_calls ?? []) {
    parts.push(
      `<div class="tool-call"><code>${escapeHtml(call.name)}(${escapeHtml(
        call.arguments
      )})</code></div>`
    );
  }
  if (message.role === "tool") {
    parts.push(renderToolResponse(message.content));
  } else if (message.content) {
    parts.push(`<p>${escapeHtml(message.content)}</p>`);
  }
  return `<div class="message message-${message.role}">${parts.join("")}</div>`;
}

/** Summary chips display the service-reported numbers verbatim; the UI is
 * never the source of truth for statistics. */
export function renderChips(candidate: CandidatePayload, selected: boolean): string {
  const chips = [
    `<span class="chip chip-turns">turns: ${candidate.turn_count}</span>`,
    `<span class="chip chip-tools">unique tools: ${candidate.unique_tools}</span>`,
    `<span class="chip chip-status">${escapeHtml(candidate.status)}</span>`,
  ];
  if (selected) chips.push(`<span class="chip chip-selected">selected</span>`);
  return chips.join("");
}

export function renderCandidateTab(
  candidate: CandidatePayload,
  selected: boolean,
  showRationales: boolean
): string {
  const messages = candidate.messages
    .map((m) => renderMessage(m, showRationales))
    .join("");
  return (
    `<article class="candidate" data-id="${escapeHtml(candidate.id)}">` +
    `<header>${escapeHtml(candidate.source_model)} ${renderChips(candidate, selected)}</header>` +
    messages +
    `<footer class="final-answer">${escapeHtml(candidate.final_answer)}</footer>` +
    `</article>`
  );
}

export function renderQueue(state: ViewState): string {
  const items = state.reviewQueue
    .map((entry) => {
      const label = entry.isRevision ? "revision" : entry.status;
      const issue = entry.issueText ? ` — ${escapeHtml(entry.issueText)}` : "";
      return `<li class="queue-${label}">${escapeHtml(entry.trajectoryId)} [${label}]${issue}</li>`;
    })
    .join("");
  const badge =
    state.revisionBadge > 0 ? `<span class="badge">${state.revisionBadge}</span>` : "";
  return `<aside class="review-queue"><h3>review queue ${badge}</h3><ul>${items}</ul></aside>`;
}

export function renderApp(state: ViewState): string {
  const query = state.queries.find((q) => q.id === state.activeQueryId);
  const banner = state.errorBanner
    ? `<div class="error-banner">${escapeHtml(state.errorBanner)}</div>`
    : "";
  const tabs = state.candidates
    .map((candidate, i) => {
      const active = i === state.activeTab ? " active" : "";
      return `<button class="tab${active}" data-tab="${i}">${i + 1}</button>`;
    })
    .join("");
  const current = state.candidates[state.activeTab];
  const body = current
    ? renderCandidateTab(
        current,
        current.id === state.selectedCandidate,
        state.showJudgeRationales
      )
    : "";
  return [
    banner,
    query ? renderQueryPanel(query) : "",
    `<nav class="tabs">${tabs}</nav>`,
    body,
    renderQueue(state),
  ].join("");
}
