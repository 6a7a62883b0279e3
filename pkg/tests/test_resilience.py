"""
Resilience tests
"""

import os
import sys
import unittest

# Add project root to path
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from resilience import RateLimiter, RetryConfig, RetryHandler


class FakeClock:
    def __init__(self):
        self.now = 0.0
        self.sleeps = []

    def __call__(self):
        return self.now

    def sleep(self, seconds):
        self.sleeps.append(seconds)
        self.now += seconds


class TestRetryHandler(unittest.TestCase):
    """Test retry logic with exponential backoff"""

    def setUp(self):
        self.delays = []
        self.handler = RetryHandler(RetryConfig(max_attempts=3, base_delay=0.5, jitter=False),
                                    sleep=self.delays.append)

    def test_retry_until_success(self):
        """Transient failures are retried"""
        attempt_count = 0

        @self.handler(exceptions=ValueError)
        def flaky_function():
            nonlocal attempt_count
            attempt_count += 1
            if attempt_count < 3:
                raise ValueError("Temporary failure")
            return "success"

        self.assertEqual(flaky_function(), "success")
        self.assertEqual(self.handler.attempts, 3)
        self.assertEqual(self.delays, [0.5, 1.0])

    def test_gives_up(self):
        """The last exception is raised after the final attempt"""
        def always_fails():
            raise ConnectionError("down")

        with self.assertRaises(ConnectionError):
            self.handler.execute(always_fails, ConnectionError, None)
        self.assertEqual(self.handler.attempts, 3)

    def test_other_exceptions_pass_through(self):
        def wrong_type():
            raise KeyError("not retried")

        with self.assertRaises(KeyError):
            self.handler.execute(wrong_type, ValueError, None)
        self.assertEqual(self.handler.attempts, 1)

    def test_retry_callback(self):
        """on_retry sees the attempt number and the delay"""
        seen = []
        calls = iter([ValueError("x"), "ok"])

        def step():
            value = next(calls)
            if isinstance(value, Exception):
                raise value
            return value

        self.handler.execute(step, ValueError, lambda attempt, e, delay: seen.append((attempt, delay)))
        self.assertEqual(seen, [(1, 0.5)])


class TestRateLimiter(unittest.TestCase):
    """Test the sliding-window limiter"""

    def test_is_allowed(self):
        clock = FakeClock()
        limiter = RateLimiter(requests_per_window=2, window_seconds=1.0, clock=clock)
        self.assertTrue(limiter.is_allowed())
        self.assertTrue(limiter.is_allowed())
        self.assertFalse(limiter.is_allowed())
        clock.now = 1.5
        self.assertTrue(limiter.is_allowed())

    def test_acquire_blocks_until_window_frees(self):
        """One request per second: the second acquire waits a full second"""
        clock = FakeClock()
        limiter = RateLimiter.per_second(1.0, clock=clock, sleep=clock.sleep)
        limiter.acquire()
        limiter.acquire()
        self.assertEqual(clock.sleeps, [1.0])
        self.assertEqual(limiter.get_stats()['total_waited'], 1.0)

    def test_fractional_rate(self):
        limiter = RateLimiter.per_second(0.25)
        self.assertEqual(limiter.requests_per_window, 1)
        self.assertEqual(limiter.window_seconds, 4.0)

    def test_invalid_rate(self):
        with self.assertRaises(ValueError):
            RateLimiter.per_second(0)


if __name__ == '__main__':
    unittest.main()
