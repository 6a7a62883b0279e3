"""
Resilience
Retry with exponential backoff and a sliding-window request rate limiter for the catalog client.
"""

import time
import random
import logging
import functools
import threading
from collections import deque
from typing import Any, Callable, Dict, Optional, Type, Union


class RetryConfig:
    """Configuration for retry logic"""

    def __init__(
        self,
        max_attempts: int = 4,
        base_delay: float = 1.0,
        max_delay: float = 30.0,
        exponential_base: float = 2.0,
        jitter: bool = True
    ):
        self.max_attempts = max_attempts
        self.base_delay = base_delay
        self.max_delay = max_delay
        self.exponential_base = exponential_base
        self.jitter = jitter


class RetryHandler:
    """Retry handler with exponential backoff and jitter"""

    def __init__(self, config: RetryConfig, sleep: Callable[[float], None] = time.sleep):
        self.config = config
        self.sleep = sleep
        self.attempts = 0
        self.logger = logging.getLogger(f"{__name__}.RetryHandler")

    def __call__(
        self,
        exceptions: Union[Type[Exception], tuple] = Exception,
        on_retry: Optional[Callable] = None
    ) -> Callable:
        """Decorator for retry logic"""
        def decorator(func: Callable) -> Callable:
            @functools.wraps(func)
            def wrapper(*args, **kwargs):
                return self.execute(func, exceptions, on_retry, *args, **kwargs)
            return wrapper
        return decorator

    def execute(
        self,
        func: Callable,
        exceptions: Union[Type[Exception], tuple],
        on_retry: Optional[Callable],
        *args,
        **kwargs
    ) -> Any:
        """Execute function with retry logic; self.attempts counts every call made"""
        last_exception = None

        for attempt in range(1, self.config.max_attempts + 1):
            self.attempts += 1
            try:
                return func(*args, **kwargs)
            except exceptions as e:
                last_exception = e

                if attempt == self.config.max_attempts:
                    self.logger.error(
                        f"{getattr(func, '__name__', 'call')} failed after {attempt} attempts: {e}"
                    )
                    break

                delay = self._calculate_delay(attempt)
                self.logger.warning(
                    f"{getattr(func, '__name__', 'call')} failed "
                    f"(attempt {attempt}/{self.config.max_attempts}). "
                    f"Retrying in {delay:.2f} seconds: {e}"
                )

                if on_retry:
                    try:
                        on_retry(attempt, e, delay)
                    except Exception as retry_callback_error:
                        self.logger.error(f"Retry callback failed: {retry_callback_error}")

                self.sleep(delay)

        raise last_exception

    def _calculate_delay(self, attempt: int) -> float:
        """Calculate delay with exponential backoff and jitter"""
        delay = min(
            self.config.base_delay * (self.config.exponential_base ** (attempt - 1)),
            self.config.max_delay
        )

        if self.config.jitter:
            delay *= (0.5 + random.random() * 0.5)

        return delay


class RateLimiter:
    """Sliding-window rate limiter; acquire() blocks until a slot is free"""

    def __init__(
        self,
        requests_per_window: int = 1,
        window_seconds: float = 1.0,
        clock: Callable[[], float] = time.monotonic,
        sleep: Callable[[float], None] = time.sleep
    ):
        self.requests_per_window = requests_per_window
        self.window_seconds = window_seconds
        self.clock = clock
        self.sleep = sleep
        self.requests = deque()
        self.total_waited = 0.0
        self.lock = threading.RLock()
        self.logger = logging.getLogger(f"{__name__}.RateLimiter")

    @classmethod
    def per_second(cls, rate: float, **kwargs) -> "RateLimiter":
        """Limiter admitting `rate` requests per second (fractional rates widen the window)"""
        if rate <= 0:
            raise ValueError(f"rate must be positive, got {rate}")
        if rate >= 1:
            return cls(requests_per_window=int(rate), window_seconds=1.0, **kwargs)
        return cls(requests_per_window=1, window_seconds=1.0 / rate, **kwargs)

    def _expire(self, now: float):
        while self.requests and self.requests[0] <= now - self.window_seconds:
            self.requests.popleft()

    def is_allowed(self) -> bool:
        """Record a request if within the limit"""
        with self.lock:
            now = self.clock()
            self._expire(now)
            if len(self.requests) >= self.requests_per_window:
                return False
            self.requests.append(now)
            return True

    def acquire(self):
        """Block until a request slot is free, then take it"""
        while True:
            with self.lock:
                now = self.clock()
                self._expire(now)
                if len(self.requests) < self.requests_per_window:
                    self.requests.append(now)
                    return
                wait = self.requests[0] + self.window_seconds - now

            self.logger.debug(f"Rate limit reached, waiting {wait:.3f} seconds")
            self.total_waited += wait
            self.sleep(max(wait, 0.0))

    def get_stats(self) -> Dict[str, Any]:
        """Get rate limiter statistics"""
        with self.lock:
            return {
                'requests_per_window': self.requests_per_window,
                'window_seconds': self.window_seconds,
                'in_window': len(self.requests),
                'total_waited': self.total_waited,
            }
