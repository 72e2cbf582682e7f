// DOM rendering. Pure functions of (container, state, handlers): each
// call rebuilds the container's children, so there is no incremental
// bookkeeping to get wrong.
//
// Message text is always set through textContent, never innerHTML. That
// keeps the assistant output byte-identical (whitespace included, with
// white-space: pre-wrap doing the visual part) and inert as markup.

import type { AppState } from "./state.js";
import type { ChatMessage, Citation } from "./types.js";

export interface UiHandlers {
  onOpen: (id: string) => void;
  onDelete: (id: string) => void;
  onRetry: () => void;
  onDismiss: () => void;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) {
    node.className = className;
  }
  if (text !== undefined) {
    node.textContent = text;
  }
  return node;
}

export function renderSessionList(
  root: HTMLElement,
  state: AppState,
  handlers: UiHandlers,
): void {
  root.replaceChildren();
  const list = el("ul", "session-list");
  for (const session of state.sessions) {
    const item = el("li", session.id === state.activeId ? "session active" : "session");
    item.dataset.sessionId = session.id;

    const open = el("button", "open", session.title || "Sem título");
    open.type = "button";
    open.addEventListener("click", () => handlers.onOpen(session.id));

    const count = el("span", "count", String(session.message_count));

    const remove = el("button", "delete", "×");
    remove.type = "button";
    remove.title = "Apagar conversa";
    remove.addEventListener("click", (event) => {
      event.stopPropagation();
      handlers.onDelete(session.id);
    });

    item.append(open, count, remove);
    list.append(item);
  }
  root.append(list);
}

function renderCitation(citation: Citation): HTMLDetailsElement {
  const details = el("details", "citation");
  const summary = el("summary");
  summary.append(
    el("span", "citation-title", citation.title),
    el("span", "citation-score", citation.score.toFixed(3)),
  );
  const body = el("div", "citation-body");
  body.append(
    el("div", "citation-meta", `${citation.chunk_id} · ${citation.date}`),
    el("blockquote", "citation-text", citation.text),
  );
  details.append(summary, body);
  return details;
}

function renderMessage(message: ChatMessage): HTMLElement {
  const classes = ["msg", message.role];
  if (message.error) {
    classes.push("error");
  }
  const bubble = el("article", classes.join(" "));
  bubble.dataset.messageId = message.id;
  bubble.append(el("div", "text", message.text));
  if (message.role === "assistant" && message.citations.length > 0) {
    const sources = el("div", "citations");
    for (const citation of message.citations) {
      sources.append(renderCitation(citation));
    }
    bubble.append(sources);
  }
  return bubble;
}

export function renderMessages(
  root: HTMLElement,
  state: AppState,
  handlers: UiHandlers,
): void {
  root.replaceChildren();
  if (state.activeId === null) {
    root.append(el("p", "placeholder", "Escolha ou crie uma conversa."));
    return;
  }
  for (const message of state.messages) {
    root.append(renderMessage(message));
  }
  if (state.busy) {
    root.append(el("p", "busy", "Consultando o corpus..."));
  }
  if (state.error) {
    const bubble = el("div", "bubble ask-error");
    bubble.append(el("div", "text", `Falha ao responder: ${state.error.message}`));

    const retry = el("button", "retry", "Tentar novamente");
    retry.type = "button";
    retry.addEventListener("click", () => handlers.onRetry());

    const dismiss = el("button", "dismiss", "Ignorar");
    dismiss.type = "button";
    dismiss.addEventListener("click", () => handlers.onDismiss());

    bubble.append(retry, dismiss);
    root.append(bubble);
  }
  root.scrollTop = root.scrollHeight;
}
