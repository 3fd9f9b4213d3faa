/** Wire types mirroring the QA service API. */

export interface ContextCard {
  chunk_id: string;
  text: string;
  source_path: string;
  sim_score: number;
  rerank_score: number | null;
}

export interface AskRequest {
  question: string;
  rag: boolean;
  top_k?: number;
  fetch_k?: number;
}

export interface AskResponse {
  answer: string;
  contexts: ContextCard[];
  used_rag: boolean;
  model_id?: string;
  rerank_degraded?: boolean;
  timings?: Record<string, number>;
}

export interface HealthResponse {
  status: string;
  index_chunks: number;
  providers: Record<string, string>;
}

export interface StatsResponse {
  html: number | null;
  pdf: number | null;
  paper: number | null;
  chunks: number | null;
  qa_pairs: Record<string, number> | null;
}

/** One question/answer exchange as the operator sees it. */
export interface ChatTurn {
  question: string;
  answer: string;
  contexts: ContextCard[];
  used_rag: boolean;
  timestamp: string;
  latency_ms: number;
}

export function isChatTurn(value: unknown): value is ChatTurn {
  if (typeof value !== "object" || value === null) return false;
  const turn = value as Record<string, unknown>;
  return (
    typeof turn.question === "string" &&
    typeof turn.answer === "string" &&
    Array.isArray(turn.contexts) &&
    typeof turn.used_rag === "boolean" &&
    typeof turn.timestamp === "string"
  );
}
