"""Secured CAN frame codec: MAC-then-encrypt on send, decrypt-then-verify
on receive.

A secured data field packs payload, truncated freshness value and
truncated MAC most-significant-first into one 64-bit block:

    | payload | FVT | MACT |   -> 64 bits, then encrypted as a whole

The MAC is computed over payload plus the full (untruncated) freshness
value; the CAN ID is not part of the MAC input, masquerade resistance
comes from per-CAN-ID key association in the key store. Secured frames
always carry dlc = 8.

The module also parses and emits candump-compatible log lines, the text
interface of the CLI batch modes.
"""

from __future__ import annotations

import hmac
import re
from contextlib import contextmanager
from dataclasses import dataclass

from . import chaskey
from .errors import (
    BadDlc,
    LayoutMismatch,
    MacMismatch,
    ParseError,
    WindowExceeded,
)
from .freshness import FreshnessState, commit_fv, next_fv, reconstruct_fvv, truncate_fv
from .keystore import KeyStore
from .profiles import FrameLayout, SecurityProfile

CAN_MAX_ID = 0x7FF

_kernels = None
_fast_enabled = True


def _get_kernels():
    """Import the JIT fast path on first use; fall back to pure Python."""
    global _kernels
    if _kernels is None and _fast_enabled:
        try:
            from . import _kernels as mod
            _kernels = mod
        except ImportError:
            _kernels = False
    return _kernels if _kernels else None


@contextmanager
def pure_python():
    """Force the pure-Python pipeline (used by equivalence tests)."""
    global _fast_enabled
    previous = _fast_enabled
    _fast_enabled = False
    try:
        yield
    finally:
        _fast_enabled = previous


@dataclass(frozen=True)
class CanFrame:
    """One classic CAN base frame (11-bit identifier, up to 8 data bytes)."""

    can_id: int
    dlc: int
    data: bytes

    def __post_init__(self):
        if not 0 <= self.can_id <= CAN_MAX_ID:
            raise ValueError(f"CAN ID 0x{self.can_id:X} exceeds 11 bits")
        if not 0 <= self.dlc <= 8:
            raise ValueError(f"dlc {self.dlc} out of range 0..8")
        if len(self.data) != self.dlc:
            raise ValueError("data length must equal dlc")


def assemble_authenticated(
    payload: bytes, fvt: int, mact: bytes, layout: FrameLayout
) -> int:
    """Concatenate payload, FVT and MACT left-to-right into 64 bits."""
    if len(payload) * 8 != layout.payload_bits:
        raise LayoutMismatch(
            f"payload is {len(payload) * 8} bits, layout wants {layout.payload_bits}"
        )
    if len(mact) * 8 != layout.mact_bits:
        raise LayoutMismatch(
            f"MACT is {len(mact) * 8} bits, layout wants {layout.mact_bits}"
        )
    if not 0 <= fvt < (1 << layout.fvt_bits):
        raise LayoutMismatch(f"FVT value does not fit in {layout.fvt_bits} bits")
    block = int.from_bytes(payload, "big")
    block = (block << layout.fvt_bits) | fvt
    return (block << layout.mact_bits) | int.from_bytes(mact, "big")


def split_secured(block: int, layout: FrameLayout) -> tuple[bytes, int, bytes]:
    """Inverse of assemble_authenticated."""
    if not 0 <= block < (1 << 64):
        raise ValueError("block must be a 64-bit unsigned integer")
    mact = (block & ((1 << layout.mact_bits) - 1)).to_bytes(layout.mact_bytes, "big")
    rest = block >> layout.mact_bits
    fvt = rest & ((1 << layout.fvt_bits) - 1)
    payload = (rest >> layout.fvt_bits).to_bytes(layout.payload_bytes, "big")
    return payload, fvt, mact


def _mac_input(payload: bytes, fv: int | None, fv_bits: int) -> bytes:
    if fv is None:
        return payload
    return payload + fv.to_bytes(fv_bits // 8, "big")


def _check_freshness_args(
    profile: SecurityProfile, freshness: FreshnessState | None
) -> None:
    if profile.uses_freshness:
        if freshness is None:
            raise ValueError(
                f"profile {profile.name!r} uses freshness; a FreshnessState is required"
            )
        if freshness.fv_bits != profile.freshness_value_length:
            raise ValueError(
                "freshness state length does not match the profile's "
                "freshnessValueLength"
            )


def secure_frame(
    can_id: int,
    payload: bytes,
    profile: SecurityProfile,
    keys: KeyStore,
    freshness: FreshnessState | None = None,
) -> CanFrame:
    """Build the secured frame carrying `payload` on `can_id`.

    Advances the sender-side freshness counter when the profile uses one.
    Under a profile without encryption the assembled block goes out as-is
    (authenticity and integrity only).
    """
    layout = profile.layout()
    if len(payload) != layout.payload_bytes:
        raise LayoutMismatch(
            f"payload is {len(payload)} bytes, profile {profile.name!r} "
            f"carries {layout.payload_bytes}"
        )
    use_fresh = profile.uses_freshness
    if use_fresh:
        _check_freshness_args(profile, freshness)
    fv_bits = profile.freshness_value_length or 0

    kernels = _get_kernels()
    if kernels is not None:
        # Resolves the channel (and raises) before any counter advances.
        ctx = keys._kernel_ctx(can_id, layout, profile.encrypts, fv_bits)
        fv = next_fv(freshness) if use_fresh else 0
        if fv < kernels.INT_DOMAIN:
            hi, lo = kernels.secure_kernel(int.from_bytes(payload, "big"), fv, ctx)
            return CanFrame(can_id, 8, ((int(hi) << 32) | int(lo)).to_bytes(8, "big"))
    else:
        keys.channel_for(can_id)
        fv = next_fv(freshness) if use_fresh else 0

    fv_opt = fv if use_fresh else None
    tag = keys.mac_for(can_id, _mac_input(payload, fv_opt, fv_bits))
    mact = chaskey.truncate_tag(tag, layout.mact_bits)
    fvt = truncate_fv(fv, layout.fvt_bits, freshness.fv_bits) if use_fresh else 0
    block = assemble_authenticated(payload, fvt, mact, layout)
    if profile.encrypts:
        block = keys.encrypt_for(can_id, block)
    return CanFrame(can_id, 8, block.to_bytes(8, "big"))


def verify_frame(
    frame: CanFrame,
    profile: SecurityProfile,
    keys: KeyStore,
    freshness: FreshnessState | None = None,
) -> bytes:
    """Verify a secured frame and return its payload.

    Decrypts, splits per the profile layout, reconstructs the freshness
    value for verification when applicable, recomputes the truncated MAC
    and compares in constant time. On success the freshness state is
    committed; on failure a typed error is raised and no state changes.
    """
    if frame.dlc != 8:
        raise BadDlc(f"secured frames carry dlc 8, got {frame.dlc}")
    layout = profile.layout()
    use_fresh = profile.uses_freshness
    if use_fresh:
        _check_freshness_args(profile, freshness)
    fv_bits = profile.freshness_value_length or 0

    kernels = _get_kernels()
    if kernels is not None and (
        not use_fresh
        or (
            freshness.latest_received < kernels.INT_DOMAIN
            and freshness.retry_window < kernels.INT_DOMAIN
        )
    ):
        ctx = keys._kernel_ctx(frame.can_id, layout, profile.encrypts, fv_bits)
        wire = int.from_bytes(frame.data, "big")
        status, payload_int, fvv = kernels.verify_kernel(
            wire >> 32,
            wire & 0xFFFFFFFF,
            freshness.latest_received if use_fresh else 0,
            freshness.retry_window if use_fresh else 0,
            ctx,
        )
        if status == 2:
            raise WindowExceeded(
                f"no counter candidate within window {freshness.retry_window} "
                f"for CAN ID 0x{frame.can_id:03X}"
            )
        if status == 1:
            raise MacMismatch(f"MAC check failed for CAN ID 0x{frame.can_id:03X}")
        if use_fresh:
            commit_fv(freshness, int(fvv))
        return int(payload_int).to_bytes(layout.payload_bytes, "big")

    keys.channel_for(frame.can_id)
    block = int.from_bytes(frame.data, "big")
    if profile.encrypts:
        block = keys.decrypt_for(frame.can_id, block)
    payload, fvt, mact_received = split_secured(block, layout)

    fvv = None
    if use_fresh:
        fvv = reconstruct_fvv(freshness, fvt, layout.fvt_bits)

    tag = keys.mac_for(frame.can_id, _mac_input(payload, fvv, fv_bits))
    mact_expected = chaskey.truncate_tag(tag, layout.mact_bits)
    if not hmac.compare_digest(mact_expected, mact_received):
        raise MacMismatch(f"MAC check failed for CAN ID 0x{frame.can_id:03X}")
    if fvv is not None:
        commit_fv(freshness, fvv)
    return payload


def extract_payload_unauthenticated(
    frame: CanFrame, profile: SecurityProfile, keys: KeyStore
) -> bytes:
    """Decrypt and slice the payload without MAC or freshness checks.

    Gateway fast path only: a tampered frame yields garbled bits silently.
    """
    if frame.dlc != 8:
        raise BadDlc(f"secured frames carry dlc 8, got {frame.dlc}")
    layout = profile.layout()
    block = int.from_bytes(frame.data, "big")
    if profile.encrypts:
        block = keys.decrypt_for(frame.can_id, block)
    payload, _fvt, _mact = split_secured(block, layout)
    return payload


_CANDUMP_RE = re.compile(
    r"^\((\d+(?:\.\d{1,6})?)\)\s+(\S+)\s+([0-9A-Fa-f]{1,4})#([0-9A-Fa-f]*)\s*$"
)


def parse_candump_line(line: str) -> tuple[float, str, CanFrame]:
    """Parse one `(seconds.micros) iface ID#DATA` candump log line."""
    match = _CANDUMP_RE.match(line)
    if not match:
        raise ParseError(f"not a candump log line: {line.strip()!r}")
    ts_text, iface, id_text, data_text = match.groups()
    can_id = int(id_text, 16)
    if can_id > CAN_MAX_ID:
        raise ParseError(
            f"CAN ID 0x{id_text} exceeds 11 bits (extended IDs unsupported)"
        )
    if len(data_text) % 2:
        raise ParseError(f"odd number of data hex digits: {data_text!r}")
    data = bytes.fromhex(data_text)
    if len(data) > 8:
        raise ParseError(f"data field longer than 8 bytes: {data_text!r}")
    return float(ts_text), iface, CanFrame(can_id, len(data), data)


def format_candump_line(timestamp: float, iface: str, frame: CanFrame) -> str:
    """Render a frame in the exact format parse_candump_line() accepts."""
    return f"({timestamp:.6f}) {iface} {frame.can_id:03X}#{frame.data.hex().upper()}"
