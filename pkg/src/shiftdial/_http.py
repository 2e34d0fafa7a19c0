"""Retrying, concurrency-bounded HTTP calls shared by the remote clients."""

from __future__ import annotations

import logging
import threading
import time
from dataclasses import dataclass
from typing import Any, Callable

import httpx

from shiftdial.errors import TransportError

logger = logging.getLogger(__name__)

RETRY_STATUS = frozenset({408, 425, 429, 500, 502, 503, 504})


@dataclass(frozen=True)
class RetryPolicy:
    attempts: int = 3
    base_delay: float = 0.5
    factor: float = 2.0

    def delay(self, failed_attempt: int) -> float:
        """Backoff before the attempt that follows ``failed_attempt`` (1-based)."""
        return self.base_delay * self.factor ** (failed_attempt - 1)


class HttpCaller:
    """Wraps an ``httpx.Client`` with retries and a cap on in-flight requests.

    The semaphore is only held while a request is on the wire, so a caller
    sleeping through its backoff does not block other threads.
    """

    def __init__(self, *, timeout: float, user_agent: str | None = None,
                 headers: dict[str, str] | None = None, max_in_flight: int = 4,
                 retry: RetryPolicy | None = None,
                 sleep: Callable[[float], None] = time.sleep,
                 transport: httpx.BaseTransport | None = None):
        if max_in_flight < 1:
            raise ValueError("max_in_flight must be >= 1")
        all_headers = dict(headers or {})
        if user_agent:
            all_headers["User-Agent"] = user_agent
        self.client = httpx.Client(timeout=timeout, headers=all_headers, transport=transport)
        self.retry = retry or RetryPolicy()
        self.max_in_flight = max_in_flight
        self._slots = threading.BoundedSemaphore(max_in_flight)
        self._sleep = sleep

    def request(self, method: str, url: str, **kwargs: Any) -> httpx.Response:
        last_error = "no attempt made"
        for attempt in range(1, self.retry.attempts + 1):
            try:
                with self._slots:
                    resp = self.client.request(method, url, **kwargs)
            except httpx.TransportError as e:
                last_error = f"{type(e).__name__}: {e}"
            else:
                if resp.status_code < 400:
                    return resp
                if resp.status_code not in RETRY_STATUS:
                    raise TransportError(f"{method} {url} returned HTTP {resp.status_code}",
                                         attempts=attempt)
                last_error = f"HTTP {resp.status_code}"
            if attempt < self.retry.attempts:
                wait = self.retry.delay(attempt)
                logger.debug("%s %s failed (%s); retry %d in %.2fs",
                             method, url, last_error, attempt, wait)
                self._sleep(wait)
        raise TransportError(f"{method} {url} failed after {self.retry.attempts} attempts: {last_error}",
                             attempts=self.retry.attempts)

    def close(self) -> None:
        self.client.close()
