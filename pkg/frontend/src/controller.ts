import { AnnotationApi, ApiError } from "./api.js";
import type { CandidatePayload, QueryPayload } from "./types.js";

export interface QueueEntry {
  trajectoryId: string;
  queryId: string;
  status: string;
  issueText?: string;
  isRevision: boolean;
}

/** All state the view renders from. Numbers shown in the UI (turn counts,
 * unique tools, agreement) come straight from service payloads held here;
 * the controller never recomputes them. */
export interface ViewState {
  queries: QueryPayload[];
  activeQueryId: string | null;
  candidates: CandidatePayload[];
  activeTab: number;
  /** trajectory id acknowledged (or optimistically assumed) as selected */
  selectedCandidate: string | null;
  errorBanner: string | null;
  reviewQueue: QueueEntry[];
  revisionBadge: number;
  showJudgeRationales: boolean;
  selectionInFlight: boolean;
  flagInFlight: boolean;
}

export class ReviewController {
  readonly state: ViewState = {
    queries: [],
    activeQueryId: null,
    candidates: [],
    activeTab: 0,
    selectedCandidate: null,
    errorBanner: null,
    reviewQueue: [],
    revisionBadge: 0,
    // rationales risk anchoring the annotator, so they stay hidden until
    // explicitly toggled on
    showJudgeRationales: false,
    selectionInFlight: false,
    flagInFlight: false,
  };

  private readonly listeners: Array<() => void> = [];

  constructor(private readonly api: AnnotationApi) {}

  onChange(listener: () => void): void {
    this.listeners.push(listener);
  }

  private notify(): void {
    for (const listener of this.listeners) listener();
  }

  async loadQueries(filter?: { tier?: string; category?: string }): Promise<void> {
    this.state.queries = await this.api.listQueries(filter);
    this.notify();
  }

  async openQuery(queryId: string): Promise<void> {
    this.state.activeQueryId = queryId;
    this.state.activeTab = 0;
    this.state.errorBanner = null;
    this.state.candidates = await this.api.getCandidates(queryId);
    const mine = (await this.api.getSelections(queryId)).find(
      (s) => s.annotator_id === this.api.annotatorId
    );
    this.state.selectedCandidate = mine?.selected_candidate ?? null;
    this.syncQueue();
    this.notify();
  }

  setActiveTab(index: number): void {
    if (index >= 0 && index < this.state.candidates.length) {
      this.state.activeTab = index;
      this.notify();
    }
  }

  toggleJudgeRationales(): void {
    this.state.showJudgeRationales = !this.state.showJudgeRationales;
    this.notify();
  }

  /** Select a candidate with an optimistic update: the chip flips
   * immediately and reverts (with an inline error banner) if the service
   * rejects the write. Exactly one POST per gesture; repeat gestures while
   * a write is in flight are ignored. */
  async selectCandidate(index: number): Promise<void> {
    const queryId = this.state.activeQueryId;
    const candidate = this.state.candidates[index];
    if (!queryId || !candidate || this.state.selectionInFlight) return;
    const previous = this.state.selectedCandidate;
    this.state.selectedCandidate = candidate.id;
    this.state.errorBanner = null;
    this.state.selectionInFlight = true;
    this.notify();
    try {
      const ack = await this.api.postSelection(queryId, index);
      this.state.selectedCandidate = ack.selected_candidate;
    } catch (err) {
      this.state.selectedCandidate = previous;
      this.state.errorBanner =
        err instanceof ApiError ? `selection rejected: ${err.message}` : `selection failed: ${err}`;
    } finally {
      this.state.selectionInFlight = false;
      this.notify();
    }
  }

  /** Flag a trajectory with reviewer feedback. Empty feedback is rejected
   * client-side without a request; double submits are guarded. */
  async flagCandidate(trajectoryId: string, issueText: string): Promise<boolean> {
    if (this.state.flagInFlight) return false;
    const issue = issueText.trim();
    if (!issue) {
      this.state.errorBanner = "feedback text is required to flag a trajectory";
      this.notify();
      return false;
    }
    this.state.flagInFlight = true;
    this.state.errorBanner = null;
    this.notify();
    try {
      await this.api.postFlag(trajectoryId, issue);
      const candidate = this.state.candidates.find((c) => c.id === trajectoryId);
      if (candidate) candidate.status = "flagged";
      this.upsertQueueEntry({
        trajectoryId,
        queryId: this.state.activeQueryId ?? "",
        status: "flagged",
        issueText: issue,
        isRevision: false,
      });
      return true;
    } catch (err) {
      this.state.errorBanner =
        err instanceof ApiError ? `flag rejected: ${err.message}` : `flag failed: ${err}`;
      return false;
    } finally {
      this.state.flagInFlight = false;
      this.notify();
    }
  }

  /** Poll the service for the open query; revised candidates produced by
   * the backend show up as new queue entries and bump the badge. */
  async refreshQueue(): Promise<void> {
    const queryId = this.state.activeQueryId;
    if (!queryId) return;
    const known = new Set(this.state.candidates.map((c) => c.id));
    this.state.candidates = await this.api.getCandidates(queryId);
    for (const candidate of this.state.candidates) {
      if (!known.has(candidate.id)) {
        this.state.revisionBadge += 1;
        this.upsertQueueEntry({
          trajectoryId: candidate.id,
          queryId,
          status: candidate.status,
          isRevision: true,
        });
      }
    }
    this.syncQueue();
    this.notify();
  }

  /** Keyboard-first review: n = next query, 1..9 = select tab's candidate. */
  async handleKey(key: string): Promise<void> {
    if (key === "n") {
      const ids = this.state.queries.map((q) => q.id);
      const at = this.state.activeQueryId ? ids.indexOf(this.state.activeQueryId) : -1;
      const next = ids[(at + 1) % ids.length];
      if (next) await this.openQuery(next);
      return;
    }
    const digit = Number.parseInt(key, 10);
    if (Number.isInteger(digit) && digit >= 1 && digit <= this.state.candidates.length) {
      await this.selectCandidate(digit - 1);
    }
  }

  private upsertQueueEntry(entry: QueueEntry): void {
    const existing = this.state.reviewQueue.find((e) => e.trajectoryId === entry.trajectoryId);
    if (existing) {
      existing.status = entry.status;
      if (entry.issueText) existing.issueText = entry.issueText;
    } else {
      this.state.reviewQueue.push(entry);
    }
  }

  private syncQueue(): void {
    for (const candidate of this.state.candidates) {
      if (candidate.status === "flagged") {
        this.upsertQueueEntry({
          trajectoryId: candidate.id,
          queryId: this.state.activeQueryId ?? "",
          status: "flagged",
          isRevision: false,
        });
      }
      const entry = this.state.reviewQueue.find((e) => e.trajectoryId === candidate.id);
      if (entry) entry.status = candidate.status;
    }
  }
}
