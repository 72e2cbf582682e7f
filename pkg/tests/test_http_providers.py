import hashlib
import json

import httpx
import pytest

from raglab.providers import (
    AuditLog,
    DimensionMismatch,
    EmptyResponseError,
    HttpChatModel,
    HttpEmbedder,
    ProviderHTTPError,
    ProviderTimeout,
)


def embed_response(vectors, shuffle=False):
    data = [
        {"index": i, "embedding": vec, "object": "embedding"}
        for i, vec in enumerate(vectors)
    ]
    if shuffle:
        data = list(reversed(data))
    return {"object": "list", "data": data, "usage": {"prompt_tokens": 7}}


def chat_response(text):
    return {
        "choices": [{"message": {"role": "assistant", "content": text}}],
        "usage": {"prompt_tokens": 12, "completion_tokens": 3},
    }


def make_embedder(handler, **kwargs):
    kwargs.setdefault("sleep", lambda s: None)
    return HttpEmbedder(
        base_url="http://prov.test",
        model_id="emb-1",
        dims=3,
        transport=httpx.MockTransport(handler),
        **kwargs,
    )


def make_chat(handler, **kwargs):
    kwargs.setdefault("sleep", lambda s: None)
    return HttpChatModel(
        base_url="http://prov.test",
        model_id="chat-1",
        transport=httpx.MockTransport(handler),
        **kwargs,
    )


def test_embedder_success_sorts_by_index():
    seen = {}

    def handler(request: httpx.Request) -> httpx.Response:
        seen["payload"] = json.loads(request.content)
        seen["path"] = request.url.path
        return httpx.Response(200, json=embed_response([[1, 0, 0], [0, 1, 0]], shuffle=True))

    emb = make_embedder(handler)
    vectors = emb.embed(["um", "dois"])
    assert vectors == [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]
    assert seen["path"] == "/v1/embeddings"
    assert seen["payload"] == {"model": "emb-1", "input": ["um", "dois"]}


def test_embedder_empty_input_no_request():
    def handler(request: httpx.Request) -> httpx.Response:
        raise AssertionError("no request expected")

    assert make_embedder(handler).embed([]) == []


def test_chat_success_and_payload():
    seen = {}

    def handler(request: httpx.Request) -> httpx.Response:
        seen["payload"] = json.loads(request.content)
        return httpx.Response(200, json=chat_response("resposta aqui"))

    chat = make_chat(handler, temperature=0.3)
    assert chat.complete("pergunta") == "resposta aqui"
    assert seen["payload"]["model"] == "chat-1"
    assert seen["payload"]["temperature"] == 0.3
    assert seen["payload"]["messages"] == [{"role": "user", "content": "pergunta"}]


def test_api_key_header(monkeypatch):
    seen = {}

    def handler(request: httpx.Request) -> httpx.Response:
        seen["auth"] = request.headers.get("authorization")
        return httpx.Response(200, json=chat_response("ok"))

    chat = make_chat(handler, api_key="segredo")
    chat.complete("x")
    assert seen["auth"] == "Bearer segredo"

    monkeypatch.setenv("PROVIDER_API_KEY", "do-ambiente")
    chat = make_chat(handler)
    chat.complete("x")
    assert seen["auth"] == "Bearer do-ambiente"


def test_retry_on_503_then_success():
    calls = {"n": 0}
    sleeps: list[float] = []

    def handler(request: httpx.Request) -> httpx.Response:
        calls["n"] += 1
        if calls["n"] < 3:
            return httpx.Response(503, text="indisponível")
        return httpx.Response(200, json=chat_response("enfim"))

    chat = make_chat(handler, backoff_base=0.5, sleep=sleeps.append)
    assert chat.complete("x") == "enfim"
    assert calls["n"] == 3
    assert sleeps == [0.5, 1.0]  # exponential backoff


def test_retries_exhausted_raises_http_error():
    def handler(request: httpx.Request) -> httpx.Response:
        return httpx.Response(503)

    chat = make_chat(handler, max_retries=2)
    with pytest.raises(ProviderHTTPError) as err:
        chat.complete("x")
    assert err.value.status_code == 503


def test_timeout_retried_then_raised():
    calls = {"n": 0}

    def handler(request: httpx.Request) -> httpx.Response:
        calls["n"] += 1
        raise httpx.ReadTimeout("lento demais")

    chat = make_chat(handler, max_retries=2)
    with pytest.raises(ProviderTimeout):
        chat.complete("x")
    assert calls["n"] == 3  # initial + 2 retries


def test_client_error_not_retried():
    calls = {"n": 0}

    def handler(request: httpx.Request) -> httpx.Response:
        calls["n"] += 1
        return httpx.Response(400, text="pedido inválido")

    chat = make_chat(handler, max_retries=3)
    with pytest.raises(ProviderHTTPError) as err:
        chat.complete("x")
    assert err.value.status_code == 400
    assert calls["n"] == 1


def test_empty_completion_raises():
    def no_choices(request: httpx.Request) -> httpx.Response:
        return httpx.Response(200, json={"choices": []})

    with pytest.raises(EmptyResponseError):
        make_chat(no_choices).complete("x")

    def blank_content(request: httpx.Request) -> httpx.Response:
        return httpx.Response(200, json=chat_response("   "))

    with pytest.raises(EmptyResponseError):
        make_chat(blank_content).complete("x")


def test_dimension_mismatch():
    def handler(request: httpx.Request) -> httpx.Response:
        return httpx.Response(200, json=embed_response([[1, 0]]))  # 2 dims, expected 3

    with pytest.raises(DimensionMismatch):
        make_embedder(handler).embed(["um"])


def test_embedding_count_mismatch():
    def handler(request: httpx.Request) -> httpx.Response:
        return httpx.Response(200, json=embed_response([[1, 0, 0]]))

    with pytest.raises(Exception, match="asked for 2"):
        make_embedder(handler).embed(["um", "dois"])


def test_audit_log_records_success_and_failure(tmp_path):
    audit_path = tmp_path / "audit.jsonl"
    audit = AuditLog(audit_path)
    calls = {"n": 0}

    def handler(request: httpx.Request) -> httpx.Response:
        calls["n"] += 1
        if calls["n"] == 1:
            return httpx.Response(200, json=chat_response("tudo certo"))
        return httpx.Response(400, text="nope")

    chat = make_chat(handler, audit=audit, max_retries=0)
    chat.complete("minha pergunta")
    with pytest.raises(ProviderHTTPError):
        chat.complete("outra")

    lines = [json.loads(l) for l in audit_path.read_text(encoding="utf-8").splitlines()]
    assert len(lines) == 2
    ok_line, err_line = lines
    assert ok_line["kind"] == "chat"
    assert ok_line["model"] == "chat-1"
    assert ok_line["ok"] is True
    assert ok_line["prompt_sha256"] == hashlib.sha256("minha pergunta".encode()).hexdigest()
    assert "minha pergunta" not in json.dumps(ok_line)  # raw prompt never logged
    assert ok_line["tokens_in"] == 12
    assert ok_line["tokens_out"] == 3
    assert ok_line["latency_ms"] >= 0
    assert err_line["ok"] is False
    assert "400" in err_line["error"]


def test_audit_log_for_embeddings(tmp_path):
    audit = AuditLog(tmp_path / "audit.jsonl")

    def handler(request: httpx.Request) -> httpx.Response:
        return httpx.Response(200, json=embed_response([[1, 0, 0], [0, 1, 0]]))

    emb = make_embedder(handler, audit=audit)
    emb.embed(["um", "dois"])
    line = json.loads((tmp_path / "audit.jsonl").read_text(encoding="utf-8"))
    assert line["kind"] == "embed"
    expected = hashlib.sha256("um\x1edois".encode()).hexdigest()
    assert line["prompt_sha256"] == expected
    assert line["tokens_in"] == 7
