from __future__ import annotations

import random

import pytest
import requests
from mock_backend import MockBackendServer

from ritkit.client import (
    BackendConfig,
    BackendError,
    StubAdjudicator,
    StubBackend,
    TokenBucket,
    backoff_base_delay,
    complete,
)

NO_SLEEP = lambda _t: None  # noqa: E731


def config(endpoint: str, **kwargs) -> BackendConfig:
    defaults = dict(model="test-model", timeout=5.0, max_retries=4, backoff_base=0.25)
    defaults.update(kwargs)
    return BackendConfig(endpoint=endpoint, **defaults)


class TestDefaults:
    def test_generation_parameter_defaults(self):
        cfg = BackendConfig(endpoint="http://localhost", model="m")
        assert cfg.temperature == 0.2
        assert cfg.top_p == 0.95
        assert cfg.max_output_tokens == 2048

    def test_validation(self):
        with pytest.raises(ValueError):
            BackendConfig(endpoint="e", model="m", temperature=-1)
        with pytest.raises(ValueError):
            BackendConfig(endpoint="e", model="m", top_p=0)
        with pytest.raises(ValueError):
            BackendConfig(endpoint="e", model="m", max_output_tokens=0)


class TestRetrySequences:
    def test_rate_limited_twice_then_success(self):
        with MockBackendServer([(429, None), (429, None), (200, "WAC")]) as server:
            text, record = complete(config(server.endpoint), "prompt", sleep=NO_SLEEP)
        assert text == "WAC"
        assert record.final_status == "ok"
        assert [a.status for a in record.attempts] == [429, 429, 200]
        assert [a.error_class for a in record.attempts] == ["rate-limited", "rate-limited", None]

    def test_blank_body_is_a_failed_attempt_then_retry(self):
        with MockBackendServer([(200, ""), (200, "STC")]) as server:
            text, record = complete(config(server.endpoint), "prompt", sleep=NO_SLEEP)
        assert text == "STC"
        assert [a.error_class for a in record.attempts] == ["blank", None]
        assert len(record.attempts) == 2

    def test_auth_failure_is_immediate(self):
        with MockBackendServer([(401, None)]) as server:
            with pytest.raises(BackendError) as exc_info:
                complete(config(server.endpoint), "prompt", sleep=NO_SLEEP)
        record = exc_info.value.record
        assert exc_info.value.error_class == "auth"
        assert record.final_status == "exhausted"
        assert len(record.attempts) == 1

    def test_service_unavailable_retries(self):
        with MockBackendServer([(503, None), (200, "SCC")]) as server:
            text, record = complete(config(server.endpoint), "prompt", sleep=NO_SLEEP)
        assert text == "SCC"
        assert [a.error_class for a in record.attempts] == ["unavailable", None]

    def test_other_client_errors_do_not_retry(self):
        with MockBackendServer([(404, None)]) as server:
            with pytest.raises(BackendError) as exc_info:
                complete(config(server.endpoint), "prompt", sleep=NO_SLEEP)
        assert exc_info.value.error_class == "invalid-request"
        assert len(exc_info.value.record.attempts) == 1

    def test_malformed_body_retries_then_succeeds(self):
        with MockBackendServer([("raw", "definitely } not json"), (200, "WCC")]) as server:
            text, record = complete(config(server.endpoint), "prompt", sleep=NO_SLEEP)
        assert text == "WCC"
        assert [a.error_class for a in record.attempts] == ["malformed-response", None]

    def test_no_retry_storm_on_persistent_rate_limit(self):
        with MockBackendServer([(429, None)] * 10) as server:
            with pytest.raises(BackendError) as exc_info:
                complete(config(server.endpoint, max_retries=3), "prompt", sleep=NO_SLEEP)
        assert len(exc_info.value.record.attempts) == 4  # max_retries + 1
        assert exc_info.value.error_class == "rate-limited"

    def test_request_carries_generation_parameters(self):
        with MockBackendServer([(200, "ok")]) as server:
            complete(config(server.endpoint), "the prompt", sleep=NO_SLEEP)
            sent = server.requests[0]
        assert sent["model"] == "test-model"
        assert sent["temperature"] == 0.2
        assert sent["top_p"] == 0.95
        assert sent["max_tokens"] == 2048
        assert sent["messages"] == [{"role": "user", "content": "the prompt"}]

    def test_api_key_header_from_environment(self, monkeypatch):
        monkeypatch.setenv("RITKIT_API_KEY", "sk-test")
        captured = {}

        class Session:
            def post(self, url, json=None, headers=None, timeout=None):
                captured.update(headers)
                raise requests.ConnectionError("stop here")

            def close(self):
                pass

        with pytest.raises(BackendError):
            complete(config("http://example.invalid", max_retries=0), "p", session=Session(), sleep=NO_SLEEP)
        assert captured.get("Authorization") == "Bearer sk-test"


class _TimeoutSession:
    def __init__(self, failures: int, text: str):
        self.failures = failures
        self.text = text

    def post(self, url, json=None, headers=None, timeout=None):
        if self.failures > 0:
            self.failures -= 1
            raise requests.Timeout("simulated")

        class Response:
            status_code = 200
            text = f'{{"choices": [{{"message": {{"content": "{self.text}"}}}}]}}'

        return Response()

    def close(self):
        pass


class TestBackoff:
    def test_timeouts_are_retried(self):
        text, record = complete(
            config("http://example.invalid"), "p", session=_TimeoutSession(2, "ok"), sleep=NO_SLEEP
        )
        assert text == "ok"
        assert [a.error_class for a in record.attempts] == ["timeout", "timeout", None]

    def test_delays_grow_and_jitter_is_bounded(self):
        delays: list[float] = []
        cfg = config("http://example.invalid", max_retries=4)
        with pytest.raises(BackendError):
            complete(cfg, "p", session=_TimeoutSession(99, "x"), sleep=delays.append, rng=random.Random(5))
        assert len(delays) == 4  # no sleep after the final attempt
        for attempt, delay in enumerate(delays):
            base = backoff_base_delay(cfg, attempt)
            assert base <= delay <= 2 * base
        for attempt in range(1, len(delays)):
            assert delays[attempt] >= backoff_base_delay(cfg, attempt - 1)


class TestTokenBucket:
    def test_caps_request_rate(self):
        clock = {"now": 0.0}
        waits: list[float] = []

        def sleep(t: float) -> None:
            waits.append(t)
            clock["now"] += t

        bucket = TokenBucket(rate_per_sec=2.0, clock=lambda: clock["now"])
        for _ in range(4):
            bucket.acquire(sleep)
        assert sum(waits) >= 1.0  # 4 requests at 2/s need at least ~1.5s of waiting


class TestStubs:
    def test_stub_backend_is_deterministic(self):
        one = StubBackend(constant="WAC").complete("x")
        two = StubBackend(constant="WAC").complete("x")
        assert one == two == "WAC"

    def test_stub_adjudicator_policies(self):
        assert StubAdjudicator("accept-all").answer_subtask("k", "s", "p")[0] is True
        assert StubAdjudicator("reject-all").answer_subtask("k", "s", "p")[0] is False
        table = StubAdjudicator("table", table={"k": False})
        assert table.answer_subtask("k", "s", "p")[0] is False
        with pytest.raises(ValueError):
            StubAdjudicator("sometimes")
