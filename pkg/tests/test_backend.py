import json

import httpx
import pytest

from flexreflect.backend import (
    BackendConfig,
    BackendError,
    ChatMessage,
    Fixture,
    FixtureError,
    OpenAIChatBackend,
    RecordingBackend,
    ReplayUnderrun,
    ScriptedBackend,
    make_backend,
)

MSG = [ChatMessage("system", "be brief"), ChatMessage("user", "hello")]


def test_replay_is_keyed_per_task():
    fx = Fixture([(("a", 0), "a0"), (("b", 0), "b0"), (("a", 1), "a1")])
    b = ScriptedBackend(fx)
    assert b.complete(MSG, task_id="a") == "a0"
    assert b.complete(MSG, task_id="b") == "b0"
    assert b.complete(MSG, task_id="a") == "a1"
    assert b.calls == 3 and b.tokens > 0


def test_underrun_names_task_and_index():
    b = ScriptedBackend(Fixture([(("a", 0), "only")]))
    b.complete(MSG, task_id="a")
    with pytest.raises(ReplayUnderrun) as err:
        b.complete(MSG, task_id="a")
    assert err.value.task_id == "a" and err.value.index == 1
    assert "a" in str(err.value) and "1" in str(err.value)


def test_fixture_round_trip(tmp_path):
    fx = Fixture([(("t", 0), "line one\nline two"), (("t", 1), "ünïcode")])
    path = tmp_path / "f.jsonl"
    fx.dump(path)
    assert Fixture.load(path).entries == fx.entries


def test_fixture_rejects_duplicates_and_garbage(tmp_path):
    with pytest.raises(FixtureError):
        Fixture([(("t", 0), "x"), (("t", 0), "y")])
    path = tmp_path / "bad.jsonl"
    path.write_text('{"task": "t", "index": 0, "response": "ok"}\n{"task": "t"}\n')
    with pytest.raises(FixtureError, match=":2:"):
        Fixture.load(path)


def test_recording_backend_produces_replayable_fixture():
    inner = ScriptedBackend(Fixture([(("x", 0), "r0"), (("x", 1), "r1")]))
    rec = RecordingBackend(inner)
    rec.complete(MSG, task_id="x")
    rec.complete(MSG, task_id="x")
    replay = ScriptedBackend(rec.fixture())
    assert [replay.complete(MSG, task_id="x") for _ in range(2)] == ["r0", "r1"]


def test_chat_message_validation():
    with pytest.raises(ValueError):
        ChatMessage("user", "")
    with pytest.raises(ValueError):
        ChatMessage("robot", "hi")
    with pytest.raises(ValueError):
        ScriptedBackend(Fixture()).complete([], task_id="t")


def _ok(text="pong"):
    return httpx.Response(200, json={"choices": [{"message": {"role": "assistant", "content": text}}]})


def test_live_client_posts_openai_payload():
    seen = {}

    def handler(request):
        seen["url"] = str(request.url)
        seen["auth"] = request.headers.get("authorization")
        seen["body"] = json.loads(request.content)
        return _ok()

    b = OpenAIChatBackend(BackendConfig("http://llm.local/v1"), api_key="k", transport=httpx.MockTransport(handler))
    assert b.complete(MSG, task_id="t") == "pong"
    assert seen["url"] == "http://llm.local/v1/chat/completions"
    assert seen["auth"] == "Bearer k"
    assert seen["body"]["model"] == "gpt-4o-mini" and seen["body"]["temperature"] == 0
    assert seen["body"]["messages"][1] == {"role": "user", "content": "hello"}


def test_live_client_retries_with_backoff():
    replies = iter([httpx.Response(429), httpx.ConnectError("down"), httpx.Response(429), _ok("late")])
    sleeps = []

    def handler(request):
        r = next(replies)
        if isinstance(r, Exception):
            raise r
        return r

    b = OpenAIChatBackend(BackendConfig("http://x"), api_key="", transport=httpx.MockTransport(handler),
                          sleep=sleeps.append)
    assert b.complete(MSG, task_id="t") == "late"
    assert sleeps == [2.0, 4.0, 8.0]


def test_live_client_gives_up_after_three_retries():
    sleeps = []
    b = OpenAIChatBackend(BackendConfig("http://x"), api_key="", transport=httpx.MockTransport(lambda r: httpx.Response(429)),
                          sleep=sleeps.append)
    with pytest.raises(BackendError, match="429"):
        b.complete(MSG, task_id="t")
    assert len(sleeps) == 3


def test_live_client_does_not_retry_client_errors():
    calls = []

    def handler(request):
        calls.append(1)
        return httpx.Response(401, text="bad key")

    b = OpenAIChatBackend(BackendConfig("http://x"), api_key="", transport=httpx.MockTransport(handler), sleep=lambda s: None)
    with pytest.raises(BackendError, match="401"):
        b.complete(MSG, task_id="t")
    assert len(calls) == 1


def test_api_key_from_environment(monkeypatch):
    monkeypatch.setenv("OPENAI_API_KEY", "from-env")
    b = OpenAIChatBackend(BackendConfig("http://x"))
    assert b.api_key == "from-env"


def test_make_backend(tmp_path):
    assert isinstance(make_backend("scripted:fcrf_demo"), ScriptedBackend)
    assert isinstance(make_backend("live:http://localhost:1/v1"), OpenAIChatBackend)
    with pytest.raises(FileNotFoundError):
        make_backend(f"scripted:{tmp_path / 'missing.jsonl'}")
    with pytest.raises(ValueError):
        make_backend("carrier-pigeon")
