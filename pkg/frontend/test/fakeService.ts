/** In-memory stand-in for the annotation service, speaking the same HTTP
 * contract (paths, payloads, status codes) through a FetchLike function. */
import type { FetchLike, HttpResponse } from "../src/api.js";
import type {
  CandidatePayload,
  MessagePayload,
  QueryPayload,
  SelectionRecord,
} from "../src/types.js";

interface StoredTrajectory {
  id: string;
  queryId: string;
  sourceModel: string;
  messages: MessagePayload[];
  status: "candidate" | "approved" | "flagged";
  flags: { annotatorId: string; issueText: string }[];
}

function jsonResponse(status: number, body: unknown): HttpResponse {
  return {
    ok: status >= 200 && status < 300,
    status,
    json: async () => body,
  };
}

export class FakeService {
  queries = new Map<string, QueryPayload>();
  trajectories = new Map<string, StoredTrajectory>();
  selections = new Map<string, SelectionRecord>(); // key: queryId|annotator
  requestLog: { method: string; path: string }[] = [];
  /** When set, the next selection POST fails with this status. */
  failNextSelection: number | null = null;

  addQuery(query: QueryPayload): void {
    this.queries.set(query.id, query);
  }

  addTrajectory(id: string, queryId: string, messages: MessagePayload[], sourceModel = "m"): void {
    this.trajectories.set(id, { id, queryId, sourceModel, messages, status: "candidate", flags: [] });
  }

  /** Mirrors the backend's model-backed revise endpoint: appends a revised
   * answer addressing the recorded feedback, registered under a new id. */
  revise(trajectoryId: string): string {
    const original = this.trajectories.get(trajectoryId);
    if (!original) throw new Error(`unknown trajectory ${trajectoryId}`);
    let n = 1;
    while (this.trajectories.has(`${trajectoryId}~rev${n}`)) n += 1;
    const newId = `${trajectoryId}~rev${n}`;
    const feedback = original.flags.map((f) => f.issueText).join("; ");
    this.addTrajectory(
      newId,
      original.queryId,
      [
        ...original.messages,
        { role: "user", content: `Please revise. Reviewer feedback: ${feedback}` },
        { role: "assistant", content: `Revised answer addressing: ${feedback}` },
      ],
      `${original.sourceModel}+revised`
    );
    return newId;
  }

  private candidatePayload(t: StoredTrajectory): CandidatePayload {
    const assistant = t.messages.filter((m) => m.role === "assistant");
    const tools = new Set(
      t.messages.flatMap((m) => (m.tool_calls ?? []).map((c) => c.name))
    );
    const finals = assistant.filter((m) => !m.tool_calls || m.tool_calls.length === 0);
    return {
      id: t.id,
      source_model: t.sourceModel,
      turn_count: assistant.length,
      unique_tools: tools.size,
      status: t.status,
      messages: t.messages,
      final_answer: finals.length ? finals[finals.length - 1].content : "",
    };
  }

  candidatesFor(queryId: string): CandidatePayload[] {
    return [...this.trajectories.values()]
      .filter((t) => t.queryId === queryId)
      .sort((a, b) => a.id.localeCompare(b.id))
      .map((t) => this.candidatePayload(t));
  }

  readonly fetch: FetchLike = async (url, init) => {
    const method = init?.method ?? "GET";
    const { pathname, searchParams } = new URL(url);
    this.requestLog.push({ method, path: pathname });
    const body = init?.body ? JSON.parse(init.body) : {};

    let match = pathname.match(/^\/queries\/([^/]+)\/candidates$/);
    if (match && method === "GET") {
      if (!this.queries.has(match[1])) return jsonResponse(404, { error: "unknown query" });
      return jsonResponse(200, this.candidatesFor(match[1]));
    }

    match = pathname.match(/^\/queries\/([^/]+)\/selection$/);
    if (match && method === "POST") {
      const queryId = match[1];
      if (!this.queries.has(queryId)) return jsonResponse(404, { error: "unknown query" });
      if (this.failNextSelection !== null) {
        const status = this.failNextSelection;
        this.failNextSelection = null;
        return jsonResponse(status, { error: "unknown candidate" });
      }
      if (!body.annotator_id) return jsonResponse(422, { error: "annotator_id required" });
      const candidates = this.candidatesFor(queryId);
      let index: number;
      if (typeof body.candidate === "number") {
        index = body.candidate;
        if (index < 0 || index >= candidates.length) {
          return jsonResponse(422, { error: "unknown candidate" });
        }
      } else {
        index = candidates.findIndex((c) => c.id === body.candidate);
        if (index < 0) return jsonResponse(422, { error: "unknown candidate" });
      }
      const record: SelectionRecord = {
        query_id: queryId,
        annotator_id: body.annotator_id,
        selected_candidate: candidates[index].id,
        selected_index: index,
        timestamp: Date.now() / 1000,
      };
      this.selections.set(`${queryId}|${body.annotator_id}`, record);
      return jsonResponse(200, {
        ok: true,
        selected_candidate: record.selected_candidate,
        selected_index: index,
      });
    }
    if (match && method === "GET") {
      const queryId = match[1];
      if (!this.queries.has(queryId)) return jsonResponse(404, { error: "unknown query" });
      const records = [...this.selections.values()]
        .filter((s) => s.query_id === queryId)
        .sort((a, b) => a.annotator_id.localeCompare(b.annotator_id));
      return jsonResponse(200, records);
    }

    match = pathname.match(/^\/trajectories\/([^/]+)\/flag$/);
    if (match && method === "POST") {
      const trajectory = this.trajectories.get(decodeURIComponent(match[1]));
      if (!trajectory) return jsonResponse(404, { error: "unknown trajectory" });
      const issue = (body.issue_text ?? "").trim();
      if (!issue) return jsonResponse(422, { error: "issue_text required" });
      trajectory.status = "flagged";
      trajectory.flags.push({ annotatorId: body.annotator_id ?? "", issueText: issue });
      return jsonResponse(200, { ok: true, status: "flagged" });
    }

    if (pathname === "/queries" && method === "GET") {
      const tier = searchParams.get("tier");
      const category = searchParams.get("category");
      const out = [...this.queries.values()]
        .filter((q) => (!tier || q.difficulty_tier === tier) && (!category || q.category === category))
        .sort((a, b) => a.id.localeCompare(b.id));
      return jsonResponse(200, out);
    }

    if (pathname === "/agreement" && method === "GET") {
      return jsonResponse(200, { metric: "selection", pairs: {}, mean_kappa: null });
    }

    return jsonResponse(404, { error: `no route for ${method} ${pathname}` });
  };
}

export function toolCallMessages(tools: string[], answer: string): MessagePayload[] {
  const messages: MessagePayload[] = [
    { role: "system", content: "s" },
    { role: "user", content: "q" },
  ];
  tools.forEach((name, i) => {
    messages.push({
      role: "assistant",
      content: "",
      tool_calls: [{ id: `c${i}`, name, arguments: "{}" }],
    });
    messages.push({ role: "tool", content: `${name} data`, tool_call_id: `c${i}` });
  });
  messages.push({ role: "assistant", content: answer });
  return messages;
}
