import pytest
from fastapi.testclient import TestClient

from raglab.engine import QAEngine
from raglab.generation import PT_TEMPLATE
from raglab.providers import EchoChatModel
from raglab.providers.base import ProviderError
from raglab.retrieval import BM25Retriever, build_bm25
from raglab.service import SessionStore, create_app


@pytest.fixture()
def engine(chunks):
    return QAEngine(
        chunks=chunks,
        retriever=BM25Retriever(build_bm25(chunks)),
        chat=EchoChatModel(grounded=True),
        template=PT_TEMPLATE,
        default_k=4,
    )


@pytest.fixture()
def client(engine, tmp_path):
    store = SessionStore(tmp_path / "sessions")
    app = create_app(engine, store)
    return TestClient(app)


def ask_question(chunks):
    """A question the grounded echo model can answer from the corpus."""
    word = chunks[0].text.split()[5]
    return f"Qual termo aparece aqui: «{word}»?", word


def test_health(client, chunks):
    resp = client.get("/api/health")
    assert resp.status_code == 200
    assert resp.json() == {"status": "ok", "chunks": len(chunks)}


def test_session_crud(client):
    created = client.post("/api/sessions", json={"title": "Juros"})
    assert created.status_code == 201
    body = created.json()
    assert body["title"] == "Juros"
    assert body["message_count"] == 0

    listed = client.get("/api/sessions").json()
    assert [s["id"] for s in listed] == [body["id"]]

    fetched = client.get(f"/api/sessions/{body['id']}")
    assert fetched.status_code == 200
    assert fetched.json()["session"]["id"] == body["id"]
    assert fetched.json()["messages"] == []

    deleted = client.delete(f"/api/sessions/{body['id']}")
    assert deleted.status_code == 204
    assert client.get("/api/sessions").json() == []


def test_unknown_session_error_shape(client):
    resp = client.get("/api/sessions/nope")
    assert resp.status_code == 404
    body = resp.json()
    assert body["code"] == "unknown_session"
    assert set(body) == {"code", "message", "detail"}

    resp = client.post("/api/sessions/nope/ask", json={"question": "oi"})
    assert resp.status_code == 404
    assert resp.json()["code"] == "unknown_session"


def test_ask_round_trip(client, chunks):
    session = client.post("/api/sessions", json={}).json()
    question, word = ask_question(chunks)
    resp = client.post(f"/api/sessions/{session['id']}/ask", json={"question": question})
    assert resp.status_code == 200
    body = resp.json()
    assert body["user_message"]["role"] == "user"
    assert body["user_message"]["text"] == question
    assert body["assistant_message"]["role"] == "assistant"
    assert body["assistant_message"]["text"] == word
    citations = body["assistant_message"]["citations"]
    assert 1 <= len(citations) <= 4
    for c in citations:
        assert set(c) == {"chunk_id", "title", "date", "score", "text"}

    # History persisted in order.
    fetched = client.get(f"/api/sessions/{session['id']}").json()
    assert [m["role"] for m in fetched["messages"]] == ["user", "assistant"]
    assert fetched["session"]["message_count"] == 2


def test_ask_respects_k(client, chunks):
    session = client.post("/api/sessions", json={}).json()
    question, _ = ask_question(chunks)
    resp = client.post(
        f"/api/sessions/{session['id']}/ask", json={"question": question, "k": 1}
    )
    assert len(resp.json()["assistant_message"]["citations"]) == 1


def test_ask_validation_errors(client):
    session = client.post("/api/sessions", json={}).json()
    resp = client.post(f"/api/sessions/{session['id']}/ask", json={"question": "   "})
    assert resp.status_code == 400
    assert resp.json()["code"] == "empty_question"

    resp = client.post(
        f"/api/sessions/{session['id']}/ask", json={"question": "oi", "k": -1}
    )
    assert resp.status_code == 400
    assert resp.json()["code"] == "invalid_k"

    resp = client.post(
        f"/api/sessions/{session['id']}/ask", json={"question": "oi", "k": 101}
    )
    assert resp.status_code == 400
    assert resp.json()["code"] == "invalid_k"
    # Failed validation must not leave partial messages behind.
    fetched = client.get(f"/api/sessions/{session['id']}").json()
    assert fetched["messages"] == []


def test_provider_failure_persists_error_message(chunks, tmp_path):
    class BrokenChat:
        model_id = "broken"

        def complete(self, prompt: str) -> str:
            raise ProviderError("conexão recusada")

    engine = QAEngine(
        chunks=chunks,
        retriever=BM25Retriever(build_bm25(chunks)),
        chat=BrokenChat(),
        template=PT_TEMPLATE,
    )
    store = SessionStore(tmp_path / "sessions")
    client = TestClient(create_app(engine, store))
    session = client.post("/api/sessions", json={}).json()

    resp = client.post(f"/api/sessions/{session['id']}/ask", json={"question": "Qual?"})
    assert resp.status_code == 502
    body = resp.json()
    assert body["code"] == "provider_error"
    assert "conexão recusada" in body["detail"]["reason"]

    msgs = client.get(f"/api/sessions/{session['id']}").json()["messages"]
    assert [m["role"] for m in msgs] == ["user", "assistant"]
    assert msgs[0]["id"] == body["detail"]["user_message_id"]
    assert msgs[1]["id"] == body["detail"]["assistant_message_id"]
    assert msgs[1]["error"] is True
    assert msgs[0]["error"] is False


def test_history_never_reaches_the_prompt(chunks, tmp_path):
    class SpyChat:
        model_id = "spy"

        def __init__(self):
            self.prompts: list[str] = []

        def complete(self, prompt: str) -> str:
            self.prompts.append(prompt)
            return "RESPOSTASECRETA771"

    spy = SpyChat()
    engine = QAEngine(
        chunks=chunks,
        retriever=BM25Retriever(build_bm25(chunks)),
        chat=spy,
        template=PT_TEMPLATE,
    )
    store = SessionStore(tmp_path / "sessions")
    client = TestClient(create_app(engine, store))
    session = client.post("/api/sessions", json={}).json()

    marker = "PALAVRAÚNICA9913"
    client.post(f"/api/sessions/{session['id']}/ask", json={"question": f"Sobre {marker}?"})
    client.post(f"/api/sessions/{session['id']}/ask", json={"question": "E depois?"})
    assert len(spy.prompts) == 2
    assert marker not in spy.prompts[1]
    assert "RESPOSTASECRETA771" not in spy.prompts[1]


def test_search_endpoint(client, chunks):
    word = chunks[0].text.split()[3]
    resp = client.post("/api/search", json={"query": word, "k": 5})
    assert resp.status_code == 200
    results = resp.json()["results"]
    assert 1 <= len(results) <= 5
    assert results[0]["text"]
    scores = [r["score"] for r in results]
    assert scores == sorted(scores, reverse=True)


def test_search_validation(client):
    assert client.post("/api/search", json={"query": " ", "k": 3}).json()["code"] == "empty_query"
    assert client.post("/api/search", json={"query": "a", "k": 0}).json()["code"] == "invalid_k"
    assert client.post("/api/search", json={"query": "a", "k": 999}).status_code == 400


def test_static_ui_mount(engine, tmp_path):
    static = tmp_path / "static"
    static.mkdir()
    (static / "index.html").write_text("<h1>ui</h1>", encoding="utf-8")
    store = SessionStore(tmp_path / "sessions")
    client = TestClient(create_app(engine, store, static_dir=static))
    page = client.get("/")
    assert page.status_code == 200
    assert "<h1>ui</h1>" in page.text
    # API routes must win over the static mount.
    assert client.get("/api/health").status_code == 200
