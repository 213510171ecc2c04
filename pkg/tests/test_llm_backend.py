from __future__ import annotations

import json
import logging
import threading

import httpx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from analogy_agents.errors import (
    AuthError,
    BackendUnavailable,
    ContextOverflow,
    ParseError,
    PreconditionViolation,
    RateLimited,
    ReplayMiss,
)
from analogy_agents.llm_backend import (
    LLM,
    ChatMessage,
    CompletionRequest,
    CompletionResponse,
    LiveBackend,
    RecordingBackend,
    ReplayBackend,
    ReplayCassette,
    RetryPolicy,
    ScriptedBackend,
    backoff_delay,
    request_digest,
)


def req(text: str = "hello", seed: int = 1, **kw) -> CompletionRequest:
    return CompletionRequest("m", (ChatMessage("system", "sys"), ChatMessage("user", text)), seed, **kw)


# --- request validation and digests ---------------------------------------------------------


def test_empty_messages_rejected():
    with pytest.raises(PreconditionViolation):
        CompletionRequest("m", (), 1)


def test_system_message_only_first():
    with pytest.raises(PreconditionViolation):
        CompletionRequest("m", (ChatMessage("user", "x"), ChatMessage("system", "y")), 1)


def test_digest_ignores_max_tokens_but_not_sampling_fields():
    base = req()
    assert request_digest(base) == request_digest(req(max_tokens=7))
    assert request_digest(base) != request_digest(req(temperature=0.0))
    assert request_digest(base) != request_digest(req(seed=2))
    assert request_digest(base) != request_digest(req("hello!"))


_text = st.text(min_size=1, max_size=60).filter(lambda s: s.strip())


@settings(max_examples=200, deadline=None)
@given(
    contents=st.lists(_text, min_size=1, max_size=4),
    seed=st.integers(min_value=0, max_value=2**31),
    temperature=st.floats(min_value=0, max_value=2, allow_nan=False),
)
def test_digest_stable_under_reserialization(contents, seed, temperature):
    messages = tuple(ChatMessage("user" if i % 2 == 0 else "assistant", c) for i, c in enumerate(contents))
    original = CompletionRequest("model-x", messages, seed, temperature)
    wire = json.loads(json.dumps({
        "model": original.model_id, "seed": original.seed, "temperature": original.temperature,
        "messages": [{"role": m.role, "content": m.content} for m in original.messages],
    }))
    rebuilt = CompletionRequest(wire["model"], tuple(ChatMessage(**m) for m in wire["messages"]),
                                wire["seed"], wire["temperature"])
    assert request_digest(rebuilt) == request_digest(original)


# --- cassettes ------------------------------------------------------------------------------


def test_replay_returns_matching_entry():
    requests = [req(f"q{i}") for i in range(5)]
    cassette = ReplayCassette((request_digest(r), CompletionResponse(f"a{i}", i, i)) for i, r in enumerate(requests))
    assert ReplayBackend(cassette).complete(requests[3]) == CompletionResponse("a3", 3, 3)


def test_replay_miss_carries_digest():
    with pytest.raises(ReplayMiss) as info:
        ReplayBackend(ReplayCassette()).complete(req())
    assert info.value.digest == request_digest(req())


def test_identical_requests_replay_identically(tmp_path):
    path = tmp_path / "c.jsonl"
    rec = RecordingBackend(ScriptedBackend(lambda r: f"reply to {r.messages[-1].content}"), path)
    rec.complete(req("one"))
    replay = ReplayBackend(ReplayCassette.load(path))
    first, second = replay.complete(req("one")), replay.complete(req("one"))
    assert first == second
    assert json.dumps(first.to_dict()) == json.dumps(second.to_dict())


def test_record_into_empty_cassette():
    assert len(ReplayCassette().record(req(), CompletionResponse("a"))) == 1


def test_duplicate_record_overwrites_with_warning(caplog):
    cassette = ReplayCassette()
    cassette.record(req(), CompletionResponse("old"))
    with caplog.at_level(logging.WARNING):
        cassette.record(req(), CompletionResponse("new"))
    assert len(cassette) == 1
    assert cassette.lookup(req()).content == "new"
    assert "overwriting" in caplog.text


def test_n_distinct_records():
    cassette = ReplayCassette()
    for i in range(17):
        cassette.record(req(f"q{i}"), CompletionResponse(str(i)))
    assert len(cassette) == 17


def test_cassette_file_round_trip(tmp_path):
    cassette = ReplayCassette()
    for i in range(4):
        cassette.record(req(f"q{i}"), CompletionResponse(f"ä{i}", 10, i))
    path = tmp_path / "x.jsonl"
    cassette.save(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    assert len(lines) == 4
    assert set(json.loads(lines[0])) == {"digest", "response"}
    assert ReplayCassette.load(path).entries == cassette.entries


def test_recording_duplicate_rewrites_file(tmp_path):
    path = tmp_path / "c.jsonl"
    replies = iter(["first", "second"])
    rec = RecordingBackend(ScriptedBackend(lambda r: next(replies)), path)
    rec.complete(req())
    rec.complete(req())
    loaded = ReplayCassette.load(path)
    assert len(loaded) == 1 and loaded.lookup(req()).content == "second"


def test_recording_is_thread_safe(tmp_path):
    path = tmp_path / "c.jsonl"
    rec = RecordingBackend(ScriptedBackend(lambda r: r.messages[-1].content.upper()), path)

    def worker(w):
        for i in range(40):
            rec.complete(req(f"w{w}-{i}"))

    threads = [threading.Thread(target=worker, args=(w,)) for w in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    loaded = ReplayCassette.load(path)
    assert len(loaded) == 320
    assert loaded.lookup(req("w3-7")).content == "W3-7"


# --- retry policy and live client ---------------------------------------------------------------


def test_backoff_schedule_defaults():
    assert [backoff_delay(k) for k in range(1, 8)] == [1, 2, 4, 8, 16, 30, 30]


@given(st.integers(1, 60), st.floats(0.01, 5), st.floats(0.01, 100))
def test_backoff_monotone_up_to_cap(k, base, cap):
    assert backoff_delay(k, base, cap) <= backoff_delay(k + 1, base, cap) <= cap


def ok_payload(content="hi"):
    return {"choices": [{"message": {"role": "assistant", "content": content}}],
            "usage": {"prompt_tokens": 11, "completion_tokens": 2}}


def live(handler, attempts=5):
    sleeps: list[float] = []
    backend = LiveBackend("https://example.invalid/v1", "key", RetryPolicy(attempts, 1.0, 30.0),
                          transport=httpx.MockTransport(handler), sleep=sleeps.append)
    return backend, sleeps


def test_live_request_shape_and_parse():
    seen = {}

    def handler(request: httpx.Request):
        seen["url"] = str(request.url)
        seen["auth"] = request.headers["authorization"]
        seen["body"] = json.loads(request.content)
        return httpx.Response(200, json=ok_payload("pong"))

    backend, sleeps = live(handler)
    out = backend.complete(req("ping", max_tokens=50))
    assert out == CompletionResponse("pong", 11, 2)
    assert seen["url"] == "https://example.invalid/v1/chat/completions"
    assert seen["auth"] == "Bearer key"
    assert seen["body"]["messages"][-1] == {"role": "user", "content": "ping"}
    assert seen["body"]["max_tokens"] == 50 and seen["body"]["seed"] == 1
    assert sleeps == []


def test_live_retries_server_errors_then_succeeds():
    calls = iter([500, 503, 200])

    def handler(request):
        code = next(calls)
        return httpx.Response(code, json=ok_payload() if code == 200 else {"error": "x"})

    backend, sleeps = live(handler)
    assert backend.complete(req()).content == "hi"
    assert sleeps == [1.0, 2.0]


def test_live_rate_limit_exhausts_retries():
    backend, sleeps = live(lambda r: httpx.Response(429, json={"error": "slow down"}))
    with pytest.raises(RateLimited):
        backend.complete(req())
    assert sleeps == pytest.approx([1, 2, 4, 8], abs=0.05)


def test_live_auth_error_not_retried():
    backend, sleeps = live(lambda r: httpx.Response(401, json={"error": "bad key"}))
    with pytest.raises(AuthError):
        backend.complete(req())
    assert sleeps == []


def test_live_context_overflow():
    body = {"error": {"code": "context_length_exceeded"}}
    backend, _ = live(lambda r: httpx.Response(400, json=body))
    with pytest.raises(ContextOverflow):
        backend.complete(req())


def test_live_transport_errors_become_unavailable():
    def handler(request):
        raise httpx.ConnectError("refused", request=request)

    backend, sleeps = live(handler, attempts=3)
    with pytest.raises(BackendUnavailable):
        backend.complete(req())
    assert sleeps == [1.0, 2.0]


def test_from_env_requires_key(monkeypatch):
    monkeypatch.delenv("NO_SUCH_KEY_VAR", raising=False)
    with pytest.raises(AuthError):
        LiveBackend.from_env("https://x", "NO_SUCH_KEY_VAR")


# --- LLM helper -----------------------------------------------------------------------------------


def _must_be_int(text: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ParseError(text) from None


def test_ask_parsed_retries_once_with_reminder():
    backend = ScriptedBackend(["nope", "42"])
    llm = LLM(backend, "m", 3)
    assert llm.ask_parsed("sys", "number?", _must_be_int, "digits only") == 42
    retry = backend.requests[1].messages
    assert [m.role for m in retry] == ["system", "user", "assistant", "user"]
    assert retry[-1].content == "digits only"


def test_ask_parsed_fails_after_second_bad_reply():
    llm = LLM(ScriptedBackend(["nope", "still no"]), "m", 3)
    with pytest.raises(ParseError):
        llm.ask_parsed(None, "number?", _must_be_int, "digits only")
