import hashlib
import json

import pytest
import requests

from annotators import get_api_key, get_client
from annotators.client import (
    AuthError,
    EndpointClient,
    ProviderError,
    RateLimited,
    TransportError,
    backoff_delay,
    call_endpoint,
)
from annotators.prompts import build_generation_request


class FakeResponse:
    def __init__(self, status_code, payload=None, text=None):
        self.status_code = status_code
        self._payload = payload
        self.text = text if text is not None else json.dumps(payload)

    def json(self):
        if self._payload is None:
            raise ValueError("no JSON body")
        return self._payload


def completion(content):
    return FakeResponse(200, {"choices": [{"message": {"role": "assistant", "content": content}}]})


class FakeSession:
    def __init__(self, responses):
        self.headers = {}
        self.responses = list(responses)
        self.calls = []

    def post(self, url, data=None, timeout=None):
        self.calls.append({"url": url, "data": data, "timeout": timeout})
        response = self.responses.pop(0)
        if isinstance(response, Exception):
            raise response
        return response


@pytest.fixture
def request_():
    return build_generation_request("A 10 mm cube.")


def make_client(responses, **kwargs):
    sleeps = []
    session = FakeSession(responses)
    kwargs.setdefault("jitter", 0.0)
    client = EndpointClient("sk-test", "https://llm.test/v1/chat/completions", session=session, sleep=sleeps.append, **kwargs)
    return client, session, sleeps


def test_returns_first_choice(request_):
    client, session, sleeps = make_client([completion("{\"parts\": []}")])
    assert client.call(request_) == "{\"parts\": []}"
    assert session.calls[0]["data"] == request_.serialize()
    assert session.headers["Authorization"] == "Bearer sk-test"
    assert sleeps == []


def test_retries_throttling_with_backoff(request_):
    client, session, sleeps = make_client([FakeResponse(429, text="slow down"), FakeResponse(503, text=""), completion("ok")])
    assert client.call(request_) == "ok"
    assert len(session.calls) == 3
    assert sleeps == [1.0, 2.0]


def test_gives_up_after_max_attempts(request_):
    client, session, sleeps = make_client([FakeResponse(429, text="")] * 3, max_attempts=3)
    with pytest.raises(RateLimited) as info:
        client.call(request_)
    assert info.value.status == 429
    assert sleeps == [1.0, 2.0]


def test_rejected_credentials_not_retried(request_):
    client, session, sleeps = make_client([FakeResponse(401, text="bad key")])
    with pytest.raises(AuthError):
        client.call(request_)
    assert len(session.calls) == 1


def test_client_error_not_retried(request_):
    client, session, _ = make_client([FakeResponse(400, text="bad request")])
    with pytest.raises(ProviderError) as info:
        client.call(request_)
    assert info.value.body == "bad request"
    assert len(session.calls) == 1


def test_body_without_completion(request_):
    client, _, _ = make_client([FakeResponse(200, {"choices": []})])
    with pytest.raises(ProviderError):
        client.call(request_)


def test_transport_failure_is_retried(request_):
    client, session, sleeps = make_client([requests.ConnectionError("reset"), completion("ok")])
    assert client.call(request_) == "ok"
    assert len(session.calls) == 2
    assert sleeps == [1.0]


def test_transport_failure_gives_up(request_):
    client, session, sleeps = make_client([requests.ConnectionError("refused")] * 3, max_attempts=3)
    with pytest.raises(TransportError):
        client.call(request_)
    assert len(session.calls) == 3
    assert sleeps == [1.0, 2.0]


def test_jitter_stays_within_bounds(request_):
    client, _, sleeps = make_client([FakeResponse(429, text="")] * 4 + [completion("ok")], jitter=0.5)
    client.call(request_)
    for attempt, delay in enumerate(sleeps, start=1):
        assert 2 ** (attempt - 1) <= delay <= 2 ** (attempt - 1) + 0.5


def test_audit_log(tmp_path, request_):
    audit = tmp_path / "logs" / "audit.jsonl"
    client, _, _ = make_client([FakeResponse(500, text="oops"), completion("done")], audit_path=audit)
    client.call(request_)
    records = [json.loads(line) for line in audit.read_text().splitlines()]
    assert [r["status"] for r in records] == [500, 200]
    assert [r["attempt"] for r in records] == [1, 2]
    assert {r["request_hash"] for r in records} == {hashlib.sha256(request_.serialize().encode()).hexdigest()}
    assert all(r["latency_ms"] >= 0 for r in records)


def test_empty_key_rejected():
    with pytest.raises(AuthError):
        EndpointClient("", session=FakeSession([]))


def test_backoff_delay():
    assert [backoff_delay(a) for a in (1, 2, 3)] == [1.0, 2.0, 4.0]
    assert backoff_delay(20) == 60.0
    assert backoff_delay(2, jitter=0.25) == 2.25
    assert backoff_delay(7, jitter=0.5) == 60.0


def test_call_endpoint(request_):
    session = FakeSession([completion("hi")])
    assert call_endpoint(request_, "https://llm.test", "sk-test", session=session, sleep=lambda s: None) == "hi"


def test_api_key_from_environment(monkeypatch):
    monkeypatch.setenv("CADMETRICS_API_KEY", " sk-env ")
    assert get_api_key() == "sk-env"
    monkeypatch.delenv("CADMETRICS_API_KEY")
    assert get_api_key() == ""
    with pytest.raises(AuthError):
        get_client("https://llm.test")
