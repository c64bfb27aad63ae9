"""Latency benchmark around the full frame pipeline.

Measures secure (MAC + truncate + assemble + encrypt) and verify
(decrypt + split + MAC + compare) per-frame wall latency, warmup
excluded. The reference target is the published sub-6-microsecond
average achieved on a 168 MHz microcontroller; commodity hardware is
expected to clear that with a wide margin.
"""

from __future__ import annotations

import os
import platform
import random
import statistics
import time
from dataclasses import dataclass

from . import codec
from .freshness import FreshnessState
from .keystore import ChannelKeys, KeyStore
from .profiles import SecurityProfile, builtin_profile_1

MIN_ITERATIONS = 10_000

_BENCH_CAN_ID = 0x123


@dataclass(frozen=True)
class BenchReport:
    operation: str
    iterations: int
    median_us: float
    p95_us: float
    mean_us: float
    hardware: str

    def as_dict(self) -> dict:
        return {
            "operation": self.operation,
            "iterations": self.iterations,
            "median_us": round(self.median_us, 4),
            "p95_us": round(self.p95_us, 4),
            "mean_us": round(self.mean_us, 4),
            "hardware": self.hardware,
        }

    def line(self) -> str:
        return (
            f"{self.operation:<8} iterations={self.iterations}  "
            f"median={self.median_us:.3f}us  p95={self.p95_us:.3f}us  "
            f"mean={self.mean_us:.3f}us"
        )


def _cpu_model() -> str:
    try:
        with open("/proc/cpuinfo", "r", encoding="utf-8") as handle:
            for line in handle:
                if line.lower().startswith("model name"):
                    return line.split(":", 1)[1].strip()
    except OSError:
        pass
    return platform.processor() or platform.machine() or "unknown CPU"


def _pin_to_one_cpu():
    """Pin the process to a single logical CPU where the platform allows.

    Returns (pinned, restore_callable)."""
    try:
        previous = os.sched_getaffinity(0)
        target = min(previous)
        os.sched_setaffinity(0, {target})
        return True, lambda: os.sched_setaffinity(0, previous)
    except (AttributeError, OSError):
        return False, lambda: None


def _stats(samples_ns: list[int]) -> tuple[float, float, float]:
    ordered = sorted(samples_ns)
    median = statistics.median(ordered) / 1000.0
    p95 = ordered[int(0.95 * (len(ordered) - 1))] / 1000.0
    mean = statistics.fmean(ordered) / 1000.0
    return median, p95, mean


def run_bench(
    profile: SecurityProfile | None = None,
    iterations: int = 20_000,
    seed: int = 7,
    warmup: int = 2_000,
    pin: bool = True,
) -> list[BenchReport]:
    """Benchmark secure and verify; returns one report per operation."""
    if iterations < MIN_ITERATIONS:
        raise ValueError(f"iterations must be at least {MIN_ITERATIONS}")
    if profile is None:
        profile = builtin_profile_1()
    layout = profile.layout()

    rng = random.Random(seed)
    keys = KeyStore()
    keys.initialize(
        {"bench-mac": rng.randbytes(16), "bench-enc": rng.randbytes(16)},
        [ChannelKeys(_BENCH_CAN_ID, "bench-mac", "bench-enc")],
    )
    payloads = [rng.randbytes(layout.payload_bytes) for _ in range(4096)]

    pinned, restore = _pin_to_one_cpu() if pin else (False, lambda: None)
    hardware = (
        f"{_cpu_model()}; Python {platform.python_version()}; "
        f"{'pinned to one CPU' if pinned else 'no CPU pinning'}; "
        f"pipeline={'jit' if codec._get_kernels() else 'pure-python'}"
    )
    try:
        send_state = (
            FreshnessState.for_profile(_BENCH_CAN_ID, profile)
            if profile.uses_freshness else None
        )

        def one_secure(i):
            return codec.secure_frame(
                _BENCH_CAN_ID, payloads[i & 4095], profile, keys, send_state
            )

        for i in range(min(warmup, iterations)):  # also triggers JIT compilation
            one_secure(i)
        secure_ns = []
        clock = time.perf_counter_ns
        for i in range(iterations):
            t0 = clock()
            one_secure(i)
            secure_ns.append(clock() - t0)

        # Verify samples: pre-secure a fresh frame sequence so freshness
        # counters line up with a fresh receiver; without freshness any
        # order would do.
        verify_sender = (
            FreshnessState.for_profile(_BENCH_CAN_ID, profile)
            if profile.uses_freshness else None
        )
        verify_state = (
            FreshnessState.for_profile(_BENCH_CAN_ID, profile)
            if profile.uses_freshness else None
        )
        frames = [
            codec.secure_frame(
                _BENCH_CAN_ID, payloads[i & 4095], profile, keys, verify_sender
            )
            for i in range(iterations + min(warmup, iterations))
        ]
        for i in range(min(warmup, iterations)):
            codec.verify_frame(frames[i], profile, keys, verify_state)
        verify_ns = []
        for i in range(min(warmup, iterations), len(frames)):
            frame = frames[i]
            t0 = clock()
            codec.verify_frame(frame, profile, keys, verify_state)
            verify_ns.append(clock() - t0)
    finally:
        restore()

    reports = []
    for operation, samples in (("secure", secure_ns), ("verify", verify_ns)):
        median, p95, mean = _stats(samples)
        reports.append(
            BenchReport(operation, len(samples), median, p95, mean, hardware)
        )
    return reports
