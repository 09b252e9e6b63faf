# Monitoring des performances pour SybilEdge
import logging
import threading
import time
from collections import defaultdict, deque
from contextlib import contextmanager

import psutil

logger = logging.getLogger(__name__)


class PerformanceMonitor:
    """
    Thread-safe runtime statistics: named counters (edges visited, users
    scored...), accumulated wall time per stage and a process snapshot.
    """

    def __init__(self, max_samples=1000):
        self.counters = defaultdict(int)
        self.stage_times = defaultdict(float)
        self.durations = deque(maxlen=max_samples)  # Plus efficace que la liste
        self.lock = threading.Lock()
        self.started_at = time.time()

        # Initialize CPU measurement to avoid first-call blocking
        self._init_cpu_monitoring()

    def _init_cpu_monitoring(self):
        try:
            psutil.cpu_percent(interval=None)
        except Exception as e:
            logger.warning(f"⚠️  CPU monitoring initialization warning: {e}")

    def count(self, name, amount=1):
        with self.lock:
            self.counters[name] += amount

    def track(self, stage, seconds):
        with self.lock:
            self.stage_times[stage] += seconds
            self.durations.append((stage, seconds))

    @contextmanager
    def timed(self, stage):
        """Accumulate the wall time of the enclosed block under `stage`."""
        start = time.perf_counter()
        try:
            yield
        finally:
            self.track(stage, time.perf_counter() - start)

    def get_count(self, name):
        with self.lock:
            return self.counters.get(name, 0)

    def reset(self):
        with self.lock:
            self.counters.clear()
            self.stage_times.clear()
            self.durations.clear()
            self.started_at = time.time()

    def get_stats_safe(self):
        """Counters and timings only, no psutil call."""
        with self.lock:
            return {
                "counters": dict(sorted(self.counters.items())),
                "stage_seconds": dict(sorted(self.stage_times.items())),
                "elapsed_seconds": time.time() - self.started_at,
                "memory_used_gb": 0.0,
                "cpu_usage_percent": 0.0,
                "safe_mode": True
            }

    def get_stats(self, safe_mode=False):
        """
        Runtime statistics with a process snapshot.
        safe_mode=True évite les appels psutil
        """
        if safe_mode:
            return self.get_stats_safe()

        try:
            process = psutil.Process()
            rss = process.memory_info().rss
            cpu = psutil.cpu_percent(interval=None)
        except Exception as e:
            logger.warning(f"⚠️  Process measurement fallback: {e}")
            return self.get_stats_safe()

        stats = self.get_stats_safe()
        stats.update({
            "memory_used_gb": rss / (1024 ** 3),
            "cpu_usage_percent": cpu,
            "safe_mode": False
        })
        return stats
