// Client-side state and the actions that drive it.
//
// The store is deliberately DOM-free: actions call the API, mutate one
// state object, and notify subscribers. The UI layer is a pure function
// of this state, which is what makes the behavior testable under jsdom
// with a fake backend.

import { ApiClient, ApiError } from "./api.js";
import type { ChatMessage, SessionInfo } from "./types.js";

const ACTIVE_KEY = "raglab.active_session";

// A failed ask the user may retry. Provider failures are already
// persisted server-side; network failures never reached the log.
export interface AskFailure {
  question: string;
  k: number | undefined;
  code: string;
  message: string;
}

export interface AppState {
  sessions: SessionInfo[];
  activeId: string | null;
  messages: ChatMessage[];
  busy: boolean;
  error: AskFailure | null;
}

type StorageLike = Pick<Storage, "getItem" | "setItem" | "removeItem">;

export class ChatStore {
  readonly state: AppState = {
    sessions: [],
    activeId: null,
    messages: [],
    busy: false,
    error: null,
  };

  private listeners: Array<(state: AppState) => void> = [];

  constructor(
    private readonly api: ApiClient,
    private readonly storage: StorageLike,
  ) {}

  subscribe(listener: (state: AppState) => void): void {
    this.listeners.push(listener);
  }

  private notify(): void {
    for (const listener of this.listeners) {
      listener(this.state);
    }
  }

  // Load the session list and reopen the session that was active before
  // the last reload, when it still exists.
  async init(): Promise<void> {
    await this.refreshSessions();
    const remembered = this.storage.getItem(ACTIVE_KEY);
    if (remembered && this.state.sessions.some((s) => s.id === remembered)) {
      await this.openSession(remembered);
    } else {
      this.storage.removeItem(ACTIVE_KEY);
      this.notify();
    }
  }

  async refreshSessions(): Promise<void> {
    this.state.sessions = await this.api.listSessions();
    this.notify();
  }

  async createSession(title = ""): Promise<void> {
    const session = await this.api.createSession(title);
    await this.refreshSessions();
    await this.openSession(session.id);
  }

  async openSession(id: string): Promise<void> {
    const detail = await this.api.getSession(id);
    this.state.activeId = id;
    this.state.messages = detail.messages;
    this.state.error = null;
    this.storage.setItem(ACTIVE_KEY, id);
    this.notify();
  }

  async deleteSession(id: string): Promise<void> {
    await this.api.deleteSession(id);
    if (this.state.activeId === id) {
      this.state.activeId = null;
      this.state.messages = [];
      this.state.error = null;
      this.storage.removeItem(ACTIVE_KEY);
    }
    await this.refreshSessions();
  }

  async ask(question: string, k?: number): Promise<void> {
    const sessionId = this.state.activeId;
    if (!sessionId || this.state.busy) {
      return;
    }
    this.state.busy = true;
    this.state.error = null;
    this.notify();
    try {
      const reply = await this.api.ask(sessionId, question, k);
      this.state.messages.push(reply.user_message, reply.assistant_message);
    } catch (exc) {
      const failure = exc instanceof ApiError ? exc : null;
      this.state.error = {
        question,
        k,
        code: failure?.code ?? "unknown_error",
        message: failure?.message ?? String(exc),
      };
      if (failure?.code === "provider_error") {
        // The backend persisted the user turn and an error reply before
        // failing; resync so the transcript shows what is on disk.
        try {
          const detail = await this.api.getSession(sessionId);
          this.state.messages = detail.messages;
        } catch {
          // keep the stale transcript; the error bubble still shows
        }
      }
    } finally {
      this.state.busy = false;
    }
    await this.refreshSessionsQuietly();
    this.notify();
  }

  async retry(): Promise<void> {
    const failed = this.state.error;
    if (failed) {
      await this.ask(failed.question, failed.k);
    }
  }

  dismissError(): void {
    this.state.error = null;
    this.notify();
  }

  private async refreshSessionsQuietly(): Promise<void> {
    try {
      this.state.sessions = await this.api.listSessions();
    } catch {
      // list refresh is cosmetic here; the ask outcome already stands
    }
  }
}
