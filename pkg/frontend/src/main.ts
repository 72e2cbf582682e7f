// Entry point: wires the store to the static shell in index.html.
//
// The API base defaults to same-origin (the service serves this build
// from --static). A <meta name="raglab-api-base"> tag in index.html
// overrides it when the UI is hosted elsewhere.

import { ApiClient } from "./api.js";
import { ChatStore } from "./state.js";
import { renderMessages, renderSessionList, type UiHandlers } from "./ui.js";

function apiBase(): string {
  const meta = document.querySelector<HTMLMetaElement>('meta[name="raglab-api-base"]');
  return meta?.content?.replace(/\/$/, "") ?? "";
}

function must<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) {
    throw new Error(`index.html is missing #${id}`);
  }
  return node as T;
}

const store = new ChatStore(new ApiClient(apiBase()), window.localStorage);

const sessionsEl = must<HTMLElement>("sessions");
const messagesEl = must<HTMLElement>("messages");
const formEl = must<HTMLFormElement>("ask-form");
const questionEl = must<HTMLTextAreaElement>("question");
const newButton = must<HTMLButtonElement>("new-session");

const handlers: UiHandlers = {
  onOpen: (id) => void store.openSession(id),
  onDelete: (id) => {
    if (window.confirm("Apagar esta conversa?")) {
      void store.deleteSession(id);
    }
  },
  onRetry: () => void store.retry(),
  onDismiss: () => store.dismissError(),
};

store.subscribe((state) => {
  renderSessionList(sessionsEl, state, handlers);
  renderMessages(messagesEl, state, handlers);
  questionEl.disabled = state.activeId === null || state.busy;
  const send = formEl.querySelector("button");
  if (send) {
    send.disabled = questionEl.disabled;
  }
});

newButton.addEventListener("click", () => void store.createSession());

formEl.addEventListener("submit", (event) => {
  event.preventDefault();
  const question = questionEl.value.trim();
  if (!question) {
    return;
  }
  questionEl.value = "";
  void store.ask(question);
});

// Enter sends, Shift+Enter makes a newline.
questionEl.addEventListener("keydown", (event) => {
  if (event.key === "Enter" && !event.shiftKey) {
    event.preventDefault();
    formEl.requestSubmit();
  }
});

void store.init();
