/** DOM rendering: transcript bubbles, evidence cards, toggle, error banner.
 *
 * Evidence text is always set through textContent so what the operator sees
 * is byte-equal to what the API returned.
 */

import type { ChatSession } from "./session";
import type { ChatTurn, ContextCard } from "./types";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function scoreLabel(card: ContextCard): string {
  const sim = `sim ${card.sim_score.toFixed(4)}`;
  return card.rerank_score === null || card.rerank_score === undefined
    ? sim
    : `${sim} · rerank ${card.rerank_score.toFixed(4)}`;
}

export function renderCard(card: ContextCard, rank: number): HTMLDetailsElement {
  const details = el("details", "evidence-card") as HTMLDetailsElement;
  const summary = el("summary", "card-summary");
  summary.textContent = `[${rank}] ${card.source_path} — ${scoreLabel(card)}`;
  const body = el("p", "card-text");
  body.textContent = card.text; // byte-equal to the API context
  details.append(summary, body);
  return details;
}

export function renderTurn(turn: ChatTurn): HTMLElement {
  const section = el("section", "turn");
  section.append(el("div", "bubble question", turn.question));

  const answer = el("div", "bubble answer");
  answer.append(el("p", "answer-text", turn.answer));

  const chips = el("div", "chips");
  chips.append(el("span", "chip chip-latency", `${turn.latency_ms} ms`));
  if (turn.used_rag) {
    chips.append(el("span", "chip chip-rag", `RAG · ${turn.contexts.length} sources`));
  } else {
    chips.append(el("span", "chip chip-no-context", "no context used"));
  }
  answer.append(chips);

  if (turn.contexts.length > 0) {
    const evidence = el("div", "evidence");
    turn.contexts.forEach((card, i) => evidence.append(renderCard(card, i + 1)));
    answer.append(evidence);
  }
  section.append(answer);
  return section;
}

export function renderTranscript(container: HTMLElement, turns: ChatTurn[]): void {
  container.replaceChildren(...turns.map(renderTurn));
}

export interface AppHandles {
  form: HTMLFormElement;
  input: HTMLInputElement;
  submitButton: HTMLButtonElement;
  ragToggle: HTMLInputElement;
  transcript: HTMLElement;
  errorBanner: HTMLElement;
  errorText: HTMLElement;
  retryButton: HTMLButtonElement;
  spinner: HTMLElement;
  cancelButton: HTMLButtonElement;
  exportButton: HTMLButtonElement;
}

export type DownloadFn = (filename: string, content: string) => void;

function defaultDownload(filename: string, content: string): void {
  const blob = new Blob([content], { type: "application/json" });
  const url = URL.createObjectURL(blob);
  const anchor = document.createElement("a");
  anchor.href = url;
  anchor.download = filename;
  anchor.click();
  URL.revokeObjectURL(url);
}

export function buildApp(
  root: HTMLElement,
  session: ChatSession,
  download: DownloadFn = defaultDownload,
): AppHandles {
  root.replaceChildren();

  const header = el("header", "topbar");
  header.append(el("h1", "title", "ragkit chat"));

  const toggleLabel = el("label", "toggle-label");
  const ragToggle = el("input") as HTMLInputElement;
  ragToggle.type = "checkbox";
  ragToggle.id = "rag-toggle";
  ragToggle.checked = session.ragEnabled;
  ragToggle.addEventListener("change", () => {
    session.ragEnabled = ragToggle.checked;
  });
  toggleLabel.append(ragToggle, document.createTextNode(" retrieval (RAG)"));
  header.append(toggleLabel);

  const exportButton = el("button", "export-button", "Export transcript");
  exportButton.type = "button";
  exportButton.addEventListener("click", () => {
    download("transcript.json", session.exportTranscript());
  });
  header.append(exportButton);

  const errorBanner = el("div", "error-banner");
  errorBanner.hidden = true;
  const errorText = el("span", "error-text");
  const retryButton = el("button", "retry-button", "Retry");
  retryButton.type = "button";
  retryButton.addEventListener("click", () => session.retryFailed());
  errorBanner.append(errorText, retryButton);

  const transcript = el("main", "transcript");
  transcript.id = "transcript";

  const spinner = el("div", "spinner");
  spinner.hidden = true;
  spinner.append(el("span", "spinner-text", "Answering…"));
  const cancelButton = el("button", "cancel-button", "Cancel");
  cancelButton.type = "button";
  cancelButton.addEventListener("click", () => session.cancelCurrent());
  spinner.append(cancelButton);

  const form = el("form", "ask-form") as HTMLFormElement;
  const input = el("input", "question-input") as HTMLInputElement;
  input.type = "text";
  input.placeholder = "Ask about the corpus…";
  const submitButton = el("button", "submit-button", "Ask") as HTMLButtonElement;
  submitButton.type = "submit";
  submitButton.disabled = true;
  input.addEventListener("input", () => {
    submitButton.disabled = input.value.trim().length === 0;
  });
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    if (!input.value.trim()) return;
    session.submit(input.value);
    input.value = "";
    submitButton.disabled = true;
  });
  form.append(input, submitButton);

  root.append(header, errorBanner, transcript, spinner, form);

  session.onChange(() => {
    renderTranscript(transcript, session.turns);
    spinner.hidden = !session.busy;
    errorBanner.hidden = session.lastError === null;
    errorText.textContent = session.lastError ?? "";
  });

  return {
    form,
    input,
    submitButton,
    ragToggle,
    transcript,
    errorBanner,
    errorText,
    retryButton,
    spinner,
    cancelButton,
    exportButton,
  };
}
