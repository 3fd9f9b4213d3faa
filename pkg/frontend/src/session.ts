/** Chat session state: turn history, RAG toggle, request queueing, export.
 *
 * One request is in flight at a time; further submissions queue client-side.
 * The toggle state is captured when a question is submitted, so flipping it
 * affects only subsequent turns.
 */

import { ApiClient, ApiError } from "./api";
import { isChatTurn, type AskResponse, type ChatTurn } from "./types";

interface PendingQuestion {
  question: string;
  rag: boolean;
}

export type SessionListener = () => void;

export class ChatSession {
  readonly turns: ChatTurn[] = [];
  ragEnabled = true;
  lastError: string | null = null;
  /** The question behind lastError, so the UI can offer a retry. */
  failedQuestion: PendingQuestion | null = null;

  private queue: PendingQuestion[] = [];
  private inFlight: PendingQuestion | null = null;
  private cancelInFlight: (() => void) | null = null;
  private listeners: SessionListener[] = [];

  constructor(private readonly api: ApiClient) {}

  onChange(listener: SessionListener): void {
    this.listeners.push(listener);
  }

  private notify(): void {
    for (const listener of this.listeners) listener();
  }

  get busy(): boolean {
    return this.inFlight !== null;
  }

  get pendingCount(): number {
    return this.queue.length;
  }

  /** Queue a question under the current toggle state. */
  submit(question: string): void {
    const trimmed = question.trim();
    if (!trimmed) return;
    this.queue.push({ question: trimmed, rag: this.ragEnabled });
    this.lastError = null;
    this.failedQuestion = null;
    void this.drain();
    this.notify();
  }

  retryFailed(): void {
    if (this.failedQuestion) {
      const pending = this.failedQuestion;
      this.failedQuestion = null;
      this.lastError = null;
      this.queue.push(pending);
      void this.drain();
      this.notify();
    }
  }

  cancelCurrent(): void {
    this.cancelInFlight?.();
  }

  private async drain(): Promise<void> {
    if (this.inFlight) return;
    const next = this.queue.shift();
    if (!next) return;
    this.inFlight = next;
    this.notify();
    const started = performance.now();
    const { response, cancel } = this.api.ask({ question: next.question, rag: next.rag });
    this.cancelInFlight = cancel;
    try {
      const result: AskResponse = await response;
      this.turns.push({
        question: next.question,
        answer: result.answer,
        contexts: result.contexts,
        used_rag: result.used_rag,
        timestamp: new Date().toISOString(),
        latency_ms: Math.round(performance.now() - started),
      });
    } catch (err) {
      this.lastError = err instanceof ApiError ? err.message : String(err);
      this.failedQuestion = next;
    } finally {
      this.inFlight = null;
      this.cancelInFlight = null;
      this.notify();
      void this.drain();
    }
  }

  /** Transcript as a JSON array of ChatTurns. */
  exportTranscript(): string {
    return JSON.stringify(this.turns, null, 2);
  }

  static parseTranscript(json: string): ChatTurn[] {
    const parsed: unknown = JSON.parse(json);
    if (!Array.isArray(parsed) || !parsed.every(isChatTurn)) {
      throw new Error("not a ChatTurn transcript");
    }
    return parsed;
  }
}
