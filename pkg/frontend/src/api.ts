import type {
  AgreementResponse,
  CandidatePayload,
  QueryPayload,
  SelectionRecord,
} from "./types.js";

/** Minimal fetch surface so tests can inject an in-memory stub. */
export interface HttpResponse {
  ok: boolean;
  status: number;
  json(): Promise<unknown>;
}

export type FetchLike = (
  url: string,
  init?: { method?: string; headers?: Record<string, string>; body?: string }
) => Promise<HttpResponse>;

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    message: string
  ) {
    super(message);
    this.name = "ApiError";
  }
}

async function parseOrThrow<T>(resp: HttpResponse): Promise<T> {
  const body = (await resp.json()) as Record<string, unknown>;
  if (!resp.ok) {
    const message =
      typeof body?.error === "string" ? body.error : `request failed (${resp.status})`;
    throw new ApiError(resp.status, message);
  }
  return body as T;
}

/** Typed client over the annotation service; the only way the UI talks to
 * the backend. */
export class AnnotationApi {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike,
    public readonly annotatorId: string
  ) {}

  private url(path: string): string {
    return `${this.baseUrl}${path}`;
  }

  async listQueries(filter?: { tier?: string; category?: string }): Promise<QueryPayload[]> {
    const params = new URLSearchParams();
    if (filter?.tier) params.set("tier", filter.tier);
    if (filter?.category) params.set("category", filter.category);
    const qs = params.toString();
    const resp = await this.fetchImpl(this.url(`/queries${qs ? `?${qs}` : ""}`));
    return parseOrThrow(resp);
  }

  async getCandidates(queryId: string): Promise<CandidatePayload[]> {
    const resp = await this.fetchImpl(this.url(`/queries/${queryId}/candidates`));
    return parseOrThrow(resp);
  }

  async getSelections(queryId: string): Promise<SelectionRecord[]> {
    const resp = await this.fetchImpl(this.url(`/queries/${queryId}/selection`));
    return parseOrThrow(resp);
  }

  async postSelection(
    queryId: string,
    candidate: number | string
  ): Promise<{ ok: boolean; selected_candidate: string; selected_index: number }> {
    const resp = await this.fetchImpl(this.url(`/queries/${queryId}/selection`), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ annotator_id: this.annotatorId, candidate }),
    });
    return parseOrThrow(resp);
  }

  async postFlag(trajectoryId: string, issueText: string): Promise<{ ok: boolean }> {
    const resp = await this.fetchImpl(this.url(`/trajectories/${trajectoryId}/flag`), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ annotator_id: this.annotatorId, issue_text: issueText }),
    });
    return parseOrThrow(resp);
  }

  async getAgreement(): Promise<AgreementResponse> {
    const resp = await this.fetchImpl(this.url("/agreement?metric=selection"));
    return parseOrThrow(resp);
  }
}
