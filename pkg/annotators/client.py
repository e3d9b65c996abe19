"""Client for OpenAI-compatible chat-completions endpoints with retry and audit log."""
import hashlib
import json
import logging
import random
import threading
import time
from datetime import datetime
from pathlib import Path
from typing import Callable, Optional

import requests
from requests.exceptions import RequestException

from config import (
    API_KEY_ENV,
    BACKOFF_BASE,
    BACKOFF_CAP,
    BACKOFF_JITTER,
    DEFAULT_ENDPOINT,
    MAX_ATTEMPTS,
    REQUEST_TIMEOUT,
)
from annotators.prompts import ChatRequest

logger = logging.getLogger(__name__)

RETRY_STATUSES = {429, 500, 502, 503, 504}


class EndpointError(Exception):
    def __init__(self, message: str, status: Optional[int] = None, body: str = ""):
        super().__init__(message)
        self.status = status
        self.body = body


class AuthError(EndpointError):
    pass


class RateLimited(EndpointError):
    """Still throttled (or failing with 5xx) after the last attempt."""


class TransportError(EndpointError):
    pass


class ProviderError(EndpointError):
    """Non-2xx answer that is not worth retrying, or a body without a completion."""


def backoff_delay(attempt: int, base: float = BACKOFF_BASE, cap: float = BACKOFF_CAP, jitter: float = 0.0) -> float:
    """Delay before retry number attempt (1-based): base * 2^(attempt - 1) + jitter, capped."""
    return min(cap, base * 2 ** (attempt - 1) + jitter)


def _sha256(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


class EndpointClient:
    """One session per client; safe to share across threads for concurrent calls."""

    def __init__(
        self,
        api_key: str,
        endpoint: str = DEFAULT_ENDPOINT,
        audit_path=None,
        timeout: float = REQUEST_TIMEOUT,
        max_attempts: int = MAX_ATTEMPTS,
        session: Optional[requests.Session] = None,
        sleep: Callable[[float], None] = time.sleep,
        jitter: float = BACKOFF_JITTER,
    ):
        if not api_key:
            raise AuthError(f"no API key; set {API_KEY_ENV}")
        self.endpoint = endpoint
        self.timeout = timeout
        self.max_attempts = max_attempts
        self.session = session or requests.Session()
        self.session.headers.update({
            "Authorization": f"Bearer {api_key}",
            "Content-Type": "application/json",
            "Accept": "application/json",
        })
        self.audit_path = Path(audit_path) if audit_path else None
        self._sleep = sleep
        self.jitter = jitter
        self._audit_lock = threading.Lock()

    def _backoff(self, attempt: int) -> float:
        delay = backoff_delay(attempt, jitter=random.uniform(0.0, self.jitter) if self.jitter > 0 else 0.0)
        self._sleep(delay)
        return delay

    def _audit(self, request_hash: str, response_text: str, latency_ms: float, status, attempt: int):
        if self.audit_path is None:
            return
        record = {
            "timestamp": datetime.now().isoformat(),
            "request_hash": request_hash,
            "response_hash": _sha256(response_text) if response_text else None,
            "latency_ms": round(latency_ms, 3),
            "status": status,
            "attempt": attempt,
        }
        with self._audit_lock:
            self.audit_path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.audit_path, "a") as f:
                f.write(json.dumps(record) + "\n")

    def call(self, req: ChatRequest) -> str:
        """POST the request and return the first choice's message content verbatim."""
        body = req.serialize()
        request_hash = _sha256(body)

        for attempt in range(1, self.max_attempts + 1):
            started = time.monotonic()
            try:
                response = self.session.post(self.endpoint, data=body, timeout=self.timeout)
            except RequestException as e:
                self._audit(request_hash, "", (time.monotonic() - started) * 1000, "transport_error", attempt)
                if attempt == self.max_attempts:
                    logger.error(f"Request {request_hash[:12]} failed after {attempt} attempts: {e}")
                    raise TransportError(f"gave up after {attempt} attempts: {e}") from e
                delay = self._backoff(attempt)
                logger.warning(
                    f"Request {request_hash[:12]} failed (attempt {attempt}/{self.max_attempts}): {e}, "
                    f"retried after {delay:.1f}s"
                )
                continue
            latency_ms = (time.monotonic() - started) * 1000
            self._audit(request_hash, response.text, latency_ms, response.status_code, attempt)

            if response.status_code in (401, 403):
                raise AuthError("endpoint rejected the credentials", response.status_code, response.text)
            if response.status_code in RETRY_STATUSES:
                if attempt == self.max_attempts:
                    raise RateLimited(
                        f"gave up after {attempt} attempts (last status {response.status_code})",
                        response.status_code,
                        response.text,
                    )
                delay = self._backoff(attempt)
                logger.warning(
                    f"Endpoint returned {response.status_code} (attempt {attempt}/{self.max_attempts}), "
                    f"retried after {delay:.1f}s"
                )
                continue
            if not 200 <= response.status_code < 300:
                raise ProviderError(f"endpoint returned {response.status_code}", response.status_code, response.text)

            try:
                return response.json()["choices"][0]["message"]["content"]
            except (ValueError, KeyError, IndexError, TypeError) as e:
                raise ProviderError(f"unexpected response body: {e}", response.status_code, response.text) from e

        raise RateLimited(f"gave up after {self.max_attempts} attempts")


def call_endpoint(req: ChatRequest, endpoint: str, credentials: str, **kwargs) -> str:
    """One-shot call; credentials is the API key read from the environment."""
    return EndpointClient(credentials, endpoint, **kwargs).call(req)
