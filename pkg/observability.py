"""
Observability for kaehler
=========================
Structured logging, in-process check tracking and Prometheus metrics for the
Gröbner kernel, the context cache and the verification suites.

Standard output belongs to reports, so every handler installed here writes to
stderr or to the JSON log file named by KAEHLER_LOG_FILE.
"""

import os
import json
import logging
import time
from datetime import datetime, timezone
from typing import Dict, List, Optional, Any
from dataclasses import dataclass, field

from prometheus_client import Counter as PromCounter, Histogram, Gauge, generate_latest, REGISTRY


# =====================================================
# STRUCTURED JSON LOGGING
# =====================================================

_RESERVED = {
    'name', 'msg', 'args', 'created', 'filename', 'funcName', 'levelname',
    'levelno', 'lineno', 'module', 'msecs', 'message', 'pathname', 'process',
    'processName', 'relativeCreated', 'thread', 'threadName', 'exc_info',
    'exc_text', 'stack_info', 'taskName',
}

_DOMAIN_FIELDS = (
    'suite', 'check', 'ring', 'orders', 'duration_ms', 'basis_size',
    'pairs', 'degree_cap', 'passed', 'witness', 'error_type',
)


class JSONFormatter(logging.Formatter):
    """Format logs as one JSON object per line"""

    def format(self, record):
        log_data = {
            "timestamp": datetime.now(timezone.utc).isoformat().replace("+00:00", "Z"),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
        }

        for name in _DOMAIN_FIELDS:
            if hasattr(record, name):
                log_data[name] = getattr(record, name)

        for key, value in record.__dict__.items():
            if key in _RESERVED or key in log_data:
                continue
            try:
                json.dumps(value)
                log_data[key] = value
            except (TypeError, ValueError):
                log_data[key] = str(value)

        return json.dumps(log_data)


def setup_json_logging(logger_name: str = "kaehler", log_file: Optional[str] = None) -> logging.Logger:
    """Attach a stderr console handler and, if configured, a JSON file handler.

    Module loggers ("exactpoly", "jets", ...) are configured alongside the
    named root so their records share the same handlers.
    """
    log_file = log_file or os.getenv("KAEHLER_LOG_FILE")
    level = getattr(logging, os.getenv("KAEHLER_LOG_LEVEL", "INFO").upper(), logging.INFO)

    handlers: List[logging.Handler] = []
    if log_file:
        file_handler = logging.FileHandler(log_file)
        file_handler.setFormatter(JSONFormatter())
        handlers.append(file_handler)

    console_handler = logging.StreamHandler()  # stderr
    console_handler.setFormatter(logging.Formatter(
        "%(asctime)s [%(levelname)s] %(name)s: %(message)s"
    ))
    handlers.append(console_handler)

    names = [logger_name, "exactpoly", "linalg", "ellipsoid", "connection",
             "weyl", "jets", "mcm", "cache", "verification", "cli"]
    for name in names:
        lg = logging.getLogger(name)
        lg.handlers.clear()
        for handler in handlers:
            lg.addHandler(handler)
        lg.setLevel(level)
        lg.propagate = False

    return logging.getLogger(logger_name)


def log_check_start(logger: logging.Logger, suite: str, check: str) -> float:
    """Log the start of a check and return its start time"""
    logger.debug("Check started", extra={'suite': suite, 'check': check})
    return time.perf_counter()


def log_check_complete(
    logger: logging.Logger,
    suite: str,
    check: str,
    start_time: float,
    passed: bool,
    witness: Optional[str] = None,
) -> float:
    """Log a finished check, record it everywhere, return its duration in ms"""
    duration_ms = (time.perf_counter() - start_time) * 1000
    extra = {'suite': suite, 'check': check, 'duration_ms': round(duration_ms, 3), 'passed': passed}
    if passed:
        logger.debug("Check passed", extra=extra)
    else:
        extra['witness'] = (witness or "")[:500]
        logger.warning("Check failed", extra=extra)

    verification_tracker.record_check(suite, check, passed, duration_ms)
    record_check_metrics(suite, passed, duration_ms / 1000.0)
    return duration_ms


# =====================================================
# CHECK TRACKING
# =====================================================

@dataclass
class CheckTiming:
    """Outcome and duration of a single check"""
    suite: str
    check: str
    passed: bool
    duration_ms: float


@dataclass
class VerificationTracker:
    """Accumulates check outcomes for the --timing summary"""
    checks: List[CheckTiming] = field(default_factory=list)

    def record_check(self, suite: str, check: str, passed: bool, duration_ms: float):
        self.checks.append(CheckTiming(suite, check, passed, duration_ms))

    def reset(self):
        self.checks.clear()

    def get_summary(self, suite: Optional[str] = None) -> Dict[str, Any]:
        """Totals, pass rate and duration percentiles"""
        rows = [c for c in self.checks if suite is None or c.suite == suite]
        total = len(rows)
        passed = sum(1 for c in rows if c.passed)
        times = sorted(c.duration_ms for c in rows)
        p50 = times[len(times) // 2] if times else 0.0
        p95 = times[int(len(times) * 0.95)] if times else 0.0

        return {
            "total_checks": total,
            "passed_checks": passed,
            "failed_checks": total - passed,
            "pass_rate": f"{(passed / total * 100) if total else 0:.1f}%",
            "durations": {
                "total_ms": f"{sum(times):.0f}",
                "p50_ms": f"{p50:.1f}",
                "p95_ms": f"{p95:.1f}",
            },
        }


verification_tracker = VerificationTracker()


# =====================================================
# PROMETHEUS METRICS
# =====================================================

checks_total = PromCounter(
    'kaehler_checks_total',
    'Verification checks run',
    ['suite', 'status']
)

check_duration = Histogram(
    'kaehler_check_duration_seconds',
    'Duration of a single verification check',
    ['suite'],
    buckets=[0.001, 0.01, 0.05, 0.1, 0.5, 1.0, 5.0, 30.0, 120.0]
)

groebner_runs_total = PromCounter(
    'kaehler_groebner_runs_total',
    'Buchberger runs',
    ['status']
)

groebner_duration = Histogram(
    'kaehler_groebner_duration_seconds',
    'Buchberger wall time',
    buckets=[0.001, 0.01, 0.1, 0.5, 1.0, 5.0, 30.0, 120.0]
)

groebner_basis_size = Gauge(
    'kaehler_groebner_basis_size',
    'Size of the most recently computed reduced basis'
)

cache_hits_total = PromCounter(
    'kaehler_context_cache_hits_total',
    'Context cache hits',
    ['kind']
)

cache_misses_total = PromCounter(
    'kaehler_context_cache_misses_total',
    'Context cache misses',
    ['kind']
)


def record_check_metrics(suite: str, passed: bool, duration_seconds: float = 0):
    """Record one verification check."""
    checks_total.labels(suite=suite, status='pass' if passed else 'fail').inc()
    if duration_seconds > 0:
        check_duration.labels(suite=suite).observe(duration_seconds)


def record_groebner_run(status: str, duration_seconds: float, basis_size: int = 0):
    """Record a Buchberger run. Status: ok / cap"""
    groebner_runs_total.labels(status=status).inc()
    groebner_duration.observe(duration_seconds)
    if status == 'ok':
        groebner_basis_size.set(basis_size)


def record_cache_hit(kind: str):
    """Record a cache hit."""
    cache_hits_total.labels(kind=kind).inc()


def record_cache_miss(kind: str):
    """Record a cache miss."""
    cache_misses_total.labels(kind=kind).inc()


def get_prometheus_metrics() -> str:
    """Generate Prometheus metrics in text format"""
    return generate_latest(REGISTRY).decode('utf-8')
