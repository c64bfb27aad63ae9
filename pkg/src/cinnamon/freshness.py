"""Monotonic-counter freshness management.

Each (node, CAN ID) pair owns one FreshnessState. The sender side draws
strictly increasing counter values; the receiver side reconstructs the
full counter from its truncated on-wire form and the latest accepted
value, within a bounded retry window, which is what defeats replay.

Counters start at 0 and the first transmitted value is 1, so 0 means
"nothing received yet".
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import BitsOutOfRange, CounterExhausted, WindowExceeded
from .profiles import SecurityProfile


def default_retry_window(fvt_bits: int) -> int:
    """Largest window that keeps truncated-counter recovery unambiguous."""
    return max(1, (1 << fvt_bits) - 1)


@dataclass
class FreshnessState:
    """Per-CAN-ID counter state for one node.

    send_counter strictly increases on each transmitted frame;
    latest_received only moves forward when a frame is accepted.

    A retry_window of 0 means "whole counter space" (any strictly-forward
    candidate); use for_profile() to get the recommended window of
    2^freshnessValueTruncLength - 1, the largest one with unambiguous
    reconstruction.
    """

    can_id: int
    fv_bits: int
    retry_window: int = 0
    send_counter: int = 0
    latest_received: int = 0

    def __post_init__(self):
        if not 1 <= self.fv_bits <= 64:
            raise ValueError("freshness value length must be 1..64 bits")
        if self.retry_window <= 0:
            self.retry_window = (1 << self.fv_bits) - 1

    @classmethod
    def for_profile(
        cls, can_id: int, profile: SecurityProfile, retry_window: int = 0
    ) -> "FreshnessState":
        if not profile.uses_freshness:
            raise ValueError(f"profile {profile.name!r} has no freshness parameters")
        fvt = profile.freshness_value_trunc_length or 0
        window = retry_window if retry_window > 0 else default_retry_window(fvt)
        return cls(can_id=can_id, fv_bits=profile.freshness_value_length,
                   retry_window=window)


def next_fv(state: FreshnessState) -> int:
    """Advance the send counter and return the new freshness value."""
    limit = (1 << state.fv_bits) - 1
    if state.send_counter >= limit:
        raise CounterExhausted(
            f"send counter for CAN ID 0x{state.can_id:03X} reached 2^{state.fv_bits}-1; "
            "re-keying required"
        )
    state.send_counter += 1
    return state.send_counter


def truncate_fv(fv: int, bits: int, fv_bits: int) -> int:
    """Keep the least-significant `bits` bits of a counter value."""
    if bits < 0 or bits > fv_bits:
        raise BitsOutOfRange(f"FV truncation length {bits} not in 0..{fv_bits}")
    if not 0 <= fv < (1 << fv_bits):
        raise ValueError(f"freshness value does not fit in {fv_bits} bits")
    return fv & ((1 << bits) - 1)


def reconstruct_fvv(state: FreshnessState, fvt: int, fvt_bits: int) -> int:
    """Recover the full counter matching a truncated freshness value.

    Returns the smallest counter strictly greater than latest_received
    whose low bits equal `fvt`, provided it lies within the retry window.
    """
    if fvt_bits < 0 or fvt_bits > state.fv_bits:
        raise BitsOutOfRange(f"FVT length {fvt_bits} not in 0..{state.fv_bits}")
    span = 1 << fvt_bits
    if not 0 <= fvt < span:
        raise ValueError(f"FVT value does not fit in {fvt_bits} bits")
    candidate = (state.latest_received & ~(span - 1)) | fvt
    if candidate <= state.latest_received:
        candidate += span
    if candidate - state.latest_received > state.retry_window:
        raise WindowExceeded(
            f"no counter candidate within window {state.retry_window} "
            f"(latest 0x{state.latest_received:X}, FVT 0x{fvt:X})"
        )
    if candidate >= (1 << state.fv_bits):
        raise WindowExceeded(
            f"counter candidate 0x{candidate:X} exceeds the {state.fv_bits}-bit range"
        )
    return candidate


def commit_fv(state: FreshnessState, fvv: int) -> None:
    """Record an accepted freshness value as the latest received."""
    if fvv <= state.latest_received:
        raise ValueError("accepted freshness values must strictly increase")
    state.latest_received = fvv
