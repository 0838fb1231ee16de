import hashlib
import json

import httpx
import pytest

from tremu.errors import AuthError, ConfigError, MissingFixture, TransportError
from tremu.gateway import ChatRequest, FixtureStore, Gateway, HttpChatClient, TokenBucket

REQ = ChatRequest.build("code", "system text", "user text")


def test_key_is_digest_of_canonical_request():
    canonical = json.dumps(
        {"decoding": {"max_tokens": 1024, "temperature": 0.0},
         "messages": [{"speaker": "system", "text": "system text"}, {"speaker": "user", "text": "user text"}],
         "role_tag": "code"},
        sort_keys=True, separators=(",", ":"))
    assert REQ.key == hashlib.sha256(canonical.encode()).hexdigest()


def test_key_depends_on_every_field():
    keys = {
        REQ.key,
        ChatRequest.build("select", "system text", "user text").key,
        ChatRequest.build("code", "system text", "user text!").key,
        ChatRequest.build("code", "system text", "user text", temperature=0.5).key,
        ChatRequest.build("code", "system text", "user text", max_tokens=10).key,
        REQ.extended(("assistant", "x")).key,
    }
    assert len(keys) == 6


def test_request_round_trip():
    assert ChatRequest.from_dict(REQ.to_dict()) == REQ


def test_unknown_role_rejected():
    with pytest.raises(ValueError):
        ChatRequest.build("poetry", "s", "u")


def test_replay_missing_fixture_names_role(tmp_path):
    gw = Gateway("replay", tmp_path)
    with pytest.raises(MissingFixture, match="code"):
        gw.complete(REQ)


def test_record_then_replay(tmp_path):
    gw = Gateway("record", tmp_path, live=lambda r: "reply", clock=lambda: "T0")
    assert gw.complete(REQ) == "reply"
    fx = FixtureStore(tmp_path).get(REQ.key)
    assert fx.response == "reply"
    assert fx.meta["recorded_at"] == "T0"
    assert fx.request == REQ.to_dict()
    assert Gateway("replay", tmp_path).complete(REQ) == "reply"
    assert [p.name for p in tmp_path.iterdir()] == [f"{REQ.key}.json"]


def test_record_is_byte_stable(tmp_path):
    for sub in ("a", "b"):
        Gateway("record", tmp_path / sub, live=lambda r: "reply", clock=lambda: "T0").complete(REQ)
    name = f"{REQ.key}.json"
    assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_live_errors_are_wrapped():
    def boom(req):
        raise RuntimeError("socket closed")

    with pytest.raises(TransportError):
        Gateway("live", live=boom).complete(REQ)

    def denied(req):
        raise AuthError("bad key")

    with pytest.raises(AuthError):
        Gateway("live", live=denied).complete(REQ)


def test_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        Gateway("replay")
    with pytest.raises(ConfigError):
        Gateway("telepathy", tmp_path)


def test_call_counts_per_role():
    gw = Gateway("live", live=lambda r: "ok")
    gw.complete(REQ)
    gw.complete(REQ)
    gw.complete(ChatRequest.build("mem", "s", "u"))
    assert gw.calls == {"code": 2, "mem": 1}


def _client(handler, sleeps):
    return HttpChatClient("https://example.test/v1", "k", http_client=httpx.Client(transport=httpx.MockTransport(handler)),
                          sleep=sleeps.append)


def _ok(text):
    return httpx.Response(200, json={"choices": [{"message": {"content": text}}]})


def test_http_retries_with_exponential_backoff():
    statuses = iter([429, 503, 200])
    sleeps = []

    def handler(request):
        s = next(statuses)
        return _ok("fine") if s == 200 else httpx.Response(s)

    assert _client(handler, sleeps)(REQ) == "fine"
    assert sleeps == [1.0, 2.0]


def test_http_gives_up_after_three_retries():
    sleeps = []
    calls = []

    def handler(request):
        calls.append(1)
        return httpx.Response(500)

    with pytest.raises(TransportError):
        _client(handler, sleeps)(REQ)
    assert len(calls) == 4
    assert sleeps == [1.0, 2.0, 4.0]


@pytest.mark.parametrize("status", [401, 403])
def test_http_auth_failure_is_not_retried(status):
    sleeps = []
    with pytest.raises(AuthError):
        _client(lambda r: httpx.Response(status), sleeps)(REQ)
    assert sleeps == []


def test_http_request_body():
    seen = {}

    def handler(request):
        seen.update(json.loads(request.content))
        seen["auth"] = request.headers["authorization"]
        return _ok("x")

    client = _client(handler, [])
    client.models = {"code": "model-for-code"}
    client(REQ)
    assert seen["model"] == "model-for-code"
    assert seen["messages"][1] == {"role": "user", "content": "user text"}
    assert seen["temperature"] == 0.0
    assert seen["auth"] == "Bearer k"


def test_from_env():
    with pytest.raises(AuthError):
        HttpChatClient.from_env({})
    c = HttpChatClient.from_env({"OPENAI_API_KEY": "k", "TREMU_MODEL_SELECT": "m2"})
    assert c.model_for("select") == "m2"
    assert c.model_for("code") == "gpt-4o-2024-05-13"


def test_token_bucket_waits_when_empty():
    now = [0.0]
    sleeps = []

    def sleep(s):
        sleeps.append(s)
        now[0] += s

    bucket = TokenBucket(60, clock=lambda: now[0], sleep=sleep)
    bucket.acquire()
    bucket.acquire()
    assert sleeps == [pytest.approx(1.0)]
