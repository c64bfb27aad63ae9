"""JIT-compiled fast path for the secure/verify frame pipeline.

The pure-Python operations in speck.py / chaskey.py / codec.py define the
protocol; these kernels recompute the same pipeline in one compiled call
so a full secure or verify stays well under the real-time latency budget.
They are equivalence-tested bit-for-bit against the pure implementations.

All arithmetic runs in 32-bit lanes inside int64 variables, so callers
must keep counter inputs below 2^62 (the codec falls back to the pure
path otherwise; reaching 2^62 frames on one channel is not a practical
concern, only a domain guard).

Context array layout (np.int64):
  [0]  flags: bit0 encrypt, bit1 freshness
  [1]  payload bytes
  [2]  FVT bits
  [3]  MACT bytes
  [4]  full freshness value bytes (0 when freshness unused)
  [5:32]   27 SPECK64/128 round keys
  [32:36]  Chaskey key words (little-endian convention)
  [36:40]  Chaskey second subkey words
"""

from __future__ import annotations

import numpy as np
from numba import njit

CTX_LEN = 40
FLAG_ENCRYPT = 1
FLAG_FRESHNESS = 2

# Fast-lane domain bound for counter-like inputs (see module docstring).
INT_DOMAIN = 1 << 62


@njit(cache=True)
def _chaskey_padded_block(payload, fv, p_bytes, fv_bytes, ctx):
    # MAC input = payload big-endian bytes ++ freshness value big-endian
    # bytes, always < 16 bytes in this protocol, so a single padded block
    # mixed with the second subkey.
    n = p_bytes + fv_bytes
    m0 = 0
    m1 = 0
    m2 = 0
    m3 = 0
    for j in range(16):
        if j < p_bytes:
            b = (payload >> (8 * (p_bytes - 1 - j))) & 0xFF
        elif j < n:
            b = (fv >> (8 * (n - 1 - j))) & 0xFF
        elif j == n:
            b = 1
        else:
            b = 0
        sh = 8 * (j & 3)
        if j < 4:
            m0 |= b << sh
        elif j < 8:
            m1 |= b << sh
        elif j < 12:
            m2 |= b << sh
        else:
            m3 |= b << sh

    v0 = ctx[32] ^ m0 ^ ctx[36]
    v1 = ctx[33] ^ m1 ^ ctx[37]
    v2 = ctx[34] ^ m2 ^ ctx[38]
    v3 = ctx[35] ^ m3 ^ ctx[39]
    for _ in range(8):
        v0 = (v0 + v1) & 0xFFFFFFFF
        v1 = (((v1 << 5) | (v1 >> 27)) & 0xFFFFFFFF) ^ v0
        v0 = ((v0 << 16) | (v0 >> 16)) & 0xFFFFFFFF
        v2 = (v2 + v3) & 0xFFFFFFFF
        v3 = (((v3 << 8) | (v3 >> 24)) & 0xFFFFFFFF) ^ v2
        v0 = (v0 + v3) & 0xFFFFFFFF
        v3 = (((v3 << 13) | (v3 >> 19)) & 0xFFFFFFFF) ^ v0
        v2 = (v2 + v1) & 0xFFFFFFFF
        v1 = (((v1 << 7) | (v1 >> 25)) & 0xFFFFFFFF) ^ v2
        v2 = ((v2 << 16) | (v2 >> 16)) & 0xFFFFFFFF
    v0 ^= ctx[36]
    v1 ^= ctx[37]
    v2 ^= ctx[38]
    v3 ^= ctx[39]

    # Truncated tag = leftmost serialized bytes, as a big-endian integer.
    mact = 0
    for i in range(ctx[3]):
        if i < 4:
            w = v0
        elif i < 8:
            w = v1
        else:
            w = v2
        mact = (mact << 8) | ((w >> (8 * (i & 3))) & 0xFF)
    return mact


@njit(cache=True)
def secure_kernel(payload, fv, ctx):
    """MAC, truncate, assemble and (optionally) encrypt one frame.

    Returns the 64-bit wire field as (hi, lo) 32-bit halves.
    """
    p_bytes = ctx[1]
    fvt_bits = ctx[2]
    mact_bytes = ctx[3]
    fv_bytes = ctx[4]

    mact = _chaskey_padded_block(payload, fv, p_bytes, fv_bytes, ctx)

    fvt = fv & ((1 << fvt_bits) - 1)
    fvt_bytes = fvt_bits >> 3
    hi = 0
    lo = 0
    for j in range(8):
        if j < p_bytes:
            b = (payload >> (8 * (p_bytes - 1 - j))) & 0xFF
        elif j < p_bytes + fvt_bytes:
            b = (fvt >> (8 * (p_bytes + fvt_bytes - 1 - j))) & 0xFF
        else:
            b = (mact >> (8 * (mact_bytes - 1 - (j - p_bytes - fvt_bytes)))) & 0xFF
        if j < 4:
            hi = (hi << 8) | b
        else:
            lo = (lo << 8) | b

    if ctx[0] & FLAG_ENCRYPT:
        x = hi
        y = lo
        for i in range(27):
            x = (((((x >> 8) | (x << 24)) & 0xFFFFFFFF) + y) & 0xFFFFFFFF) ^ ctx[5 + i]
            y = (((y << 3) | (y >> 29)) & 0xFFFFFFFF) ^ x
        hi = x
        lo = y
    return hi, lo


@njit(cache=True)
def verify_kernel(hi, lo, latest, window, ctx):
    """Decrypt, split, reconstruct freshness and check the truncated MAC.

    Returns (status, payload, fvv) with status 0 = accept,
    1 = MAC mismatch, 2 = freshness window exceeded.
    """
    p_bytes = ctx[1]
    fvt_bits = ctx[2]
    mact_bytes = ctx[3]
    fv_bytes = ctx[4]

    if ctx[0] & FLAG_ENCRYPT:
        x = hi
        y = lo
        for i in range(26, -1, -1):
            y = y ^ x
            y = ((y >> 3) | (y << 29)) & 0xFFFFFFFF
            x = (x ^ ctx[5 + i]) - y
            x = x & 0xFFFFFFFF
            x = ((x << 8) | (x >> 24)) & 0xFFFFFFFF
        hi = x
        lo = y

    payload = 0
    fvt = 0
    mact_received = 0
    fvt_bytes = fvt_bits >> 3
    for j in range(8):
        if j < 4:
            b = (hi >> (8 * (3 - j))) & 0xFF
        else:
            b = (lo >> (8 * (7 - j))) & 0xFF
        if j < p_bytes:
            payload = (payload << 8) | b
        elif j < p_bytes + fvt_bytes:
            fvt = (fvt << 8) | b
        else:
            mact_received = (mact_received << 8) | b

    fvv = 0
    if ctx[0] & FLAG_FRESHNESS:
        span = 1 << fvt_bits
        candidate = (latest & ~(span - 1)) | fvt
        if candidate <= latest:
            candidate += span
        if candidate - latest > window:
            return 2, 0, 0
        fv_bits = fv_bytes * 8
        if fv_bits <= 62 and candidate >= (1 << fv_bits):
            return 2, 0, 0
        fvv = candidate

    mact = _chaskey_padded_block(payload, fvv, p_bytes, fv_bytes, ctx)
    if mact ^ mact_received:
        return 1, 0, 0
    return 0, payload, fvv


def build_ctx(layout, encrypts, fv_bits, round_keys, mac_key_words, mac_k2_words):
    """Pack per-channel constants into a kernel context array."""
    ctx = np.zeros(CTX_LEN, dtype=np.int64)
    flags = 0
    if encrypts:
        flags |= FLAG_ENCRYPT
    if fv_bits:
        flags |= FLAG_FRESHNESS
    ctx[0] = flags
    ctx[1] = layout.payload_bytes
    ctx[2] = layout.fvt_bits
    ctx[3] = layout.mact_bytes
    ctx[4] = (fv_bits or 0) // 8
    ctx[5:32] = round_keys
    ctx[32:36] = mac_key_words
    ctx[36:40] = mac_k2_words
    return ctx
