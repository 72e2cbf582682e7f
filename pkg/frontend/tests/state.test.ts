import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { ChatStore } from "../src/state.js";
import { FakeBackend, MemoryStorage } from "./fake_backend.js";

function makeStore(backend: FakeBackend, storage = new MemoryStorage()) {
  return new ChatStore(new ApiClient("", backend.fetch), storage);
}

describe("ChatStore", () => {
  it("creates, switches, and deletes sessions without losing history", async () => {
    const backend = new FakeBackend();
    const store = makeStore(backend);
    await store.init();

    await store.createSession("primeira");
    const first = store.state.activeId!;
    await store.ask("qual a selic?");
    await store.ask("e o ipca?");
    expect(store.state.messages.map((m) => m.role)).toEqual([
      "user", "assistant", "user", "assistant",
    ]);

    await store.createSession("segunda");
    const second = store.state.activeId!;
    expect(second).not.toBe(first);
    expect(store.state.messages).toEqual([]);
    await store.ask("só uma pergunta");

    // Switching back shows the first session exactly as it was left.
    await store.openSession(first);
    expect(store.state.messages).toHaveLength(4);
    expect(store.state.messages[0]!.text).toBe("qual a selic?");
    expect(store.state.messages[3]!.text).toBe("eco: e o ipca?");

    // Deleting the other session leaves this one untouched.
    await store.deleteSession(second);
    expect(store.state.sessions.map((s) => s.id)).toEqual([first]);
    expect(store.state.activeId).toBe(first);
    expect(store.state.messages).toHaveLength(4);

    // Deleting the active session clears the transcript.
    await store.deleteSession(first);
    expect(store.state.activeId).toBeNull();
    expect(store.state.messages).toEqual([]);
  });

  it("keeps assistant text byte-identical through ask and reload", async () => {
    const backend = new FakeBackend();
    const tricky = "linha um\n  linha dois com  espaços duplos\t« aspas » 😀";
    backend.answerFor = () => tricky;

    const store = makeStore(backend);
    await store.init();
    await store.createSession("t");
    await store.ask("qualquer coisa");
    expect(store.state.messages[1]!.text).toBe(tricky);

    await store.openSession(store.state.activeId!);
    expect(store.state.messages[1]!.text).toBe(tricky);
  });

  it("restores the active session across a reload", async () => {
    const backend = new FakeBackend();
    const storage = new MemoryStorage();

    const before = makeStore(backend, storage);
    await before.init();
    await before.createSession("fica");
    await before.ask("pergunta durável");
    const activeId = before.state.activeId!;

    // A reload is a fresh store over the same backend and storage.
    const after = makeStore(backend, storage);
    await after.init();
    expect(after.state.activeId).toBe(activeId);
    expect(after.state.messages.map((m) => m.text)).toEqual([
      "pergunta durável",
      "eco: pergunta durável",
    ]);
  });

  it("forgets a remembered session that no longer exists", async () => {
    const backend = new FakeBackend();
    const storage = new MemoryStorage();
    storage.setItem("raglab.active_session", "s-gone");

    const store = makeStore(backend, storage);
    await store.init();
    expect(store.state.activeId).toBeNull();
    expect(storage.getItem("raglab.active_session")).toBeNull();
  });

  it("turns a provider failure into a retryable error and resyncs the log", async () => {
    const backend = new FakeBackend();
    const store = makeStore(backend);
    await store.init();
    await store.createSession("t");

    backend.failNextAsk = "provider";
    await store.ask("pergunta difícil");

    expect(store.state.error).not.toBeNull();
    expect(store.state.error!.code).toBe("provider_error");
    expect(store.state.error!.question).toBe("pergunta difícil");
    // The backend persisted both turns before failing; the transcript
    // must show them, with the assistant turn flagged.
    expect(store.state.messages).toHaveLength(2);
    expect(store.state.messages[0]!.text).toBe("pergunta difícil");
    expect(store.state.messages[1]!.error).toBe(true);

    await store.retry();
    expect(store.state.error).toBeNull();
    expect(store.state.messages).toHaveLength(4);
    expect(store.state.messages[3]!.text).toBe("eco: pergunta difícil");
    expect(store.state.messages[3]!.error).toBe(false);
  });

  it("handles a network failure without fabricating messages", async () => {
    const backend = new FakeBackend();
    const store = makeStore(backend);
    await store.init();
    await store.createSession("t");

    backend.failNextAsk = "network";
    await store.ask("caiu a rede");
    expect(store.state.error!.code).toBe("network_error");
    expect(store.state.messages).toEqual([]);

    await store.retry();
    expect(store.state.error).toBeNull();
    expect(store.state.messages.map((m) => m.text)).toEqual([
      "caiu a rede",
      "eco: caiu a rede",
    ]);
  });

  it("ignores ask without an active session and while busy", async () => {
    const backend = new FakeBackend();
    const store = makeStore(backend);
    await store.init();
    await store.ask("sem sessão");
    expect(backend.askCalls).toBe(0);

    await store.createSession("t");
    const slow = store.ask("primeira");
    const dropped = store.ask("segunda enquanto ocupado");
    await Promise.all([slow, dropped]);
    expect(backend.askCalls).toBe(1);
    expect(store.state.messages).toHaveLength(2);
  });

  it("notifies subscribers on every state change", async () => {
    const backend = new FakeBackend();
    const store = makeStore(backend);
    let calls = 0;
    store.subscribe(() => {
      calls += 1;
    });
    await store.init();
    await store.createSession("t");
    await store.ask("oi");
    expect(calls).toBeGreaterThanOrEqual(4);
  });
});
