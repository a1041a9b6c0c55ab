/** Payload shapes as served by the annotation service HTTP endpoints. */

export interface ToolCallPayload {
  id: string;
  name: string;
  arguments: string;
}

export interface MessagePayload {
  role: "system" | "user" | "assistant" | "tool";
  content: string;
  reasoning_content?: string;
  tool_calls?: ToolCallPayload[];
  tool_call_id?: string;
}

export interface QueryPayload {
  id: string;
  text: string;
  category: string;
  reference_answer?: string;
  difficulty_tier?: string;
  outcome_flag?: string;
}

/** One candidate trajectory as returned by GET /queries/{id}/candidates.
 * turn_count and unique_tools are service-computed; the UI must display
 * them verbatim and never recompute. */
export interface CandidatePayload {
  id: string;
  source_model: string;
  turn_count: number;
  unique_tools: number;
  status: "candidate" | "approved" | "flagged";
  messages: MessagePayload[];
  final_answer: string;
}

export interface SelectionRecord {
  query_id: string;
  annotator_id: string;
  selected_candidate: string | null;
  selected_index: number | null;
  timestamp: number;
}

export interface AgreementResponse {
  metric: string;
  pairs: Record<string, { kappa: number | null; n: number }>;
  mean_kappa: number | null;
}

export interface ServiceError {
  error: string;
  [key: string]: unknown;
}
