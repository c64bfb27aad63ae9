"""Chaskey message authentication code.

Implements the 8-round permutation variant with the designers' two-subkey
finalization. Keys are 16 bytes, interpreted as four little-endian 32-bit
words; the 128-bit tag is serialized the same way, so truncation keeps the
leftmost (lowest-index) bytes of the serialized tag, matching the
designers' reference convention of emitting the first tag bytes.

Messages of any length are accepted; the last block is padded with a
single 0x01 bit-marker byte followed by zeros and mixed with the second
subkey, while a final full block is mixed with the first subkey.
"""

from __future__ import annotations

import struct

from .errors import BitsOutOfRange

TAG_BYTES = 16

_M32 = 0xFFFFFFFF


def _permute(v0: int, v1: int, v2: int, v3: int) -> tuple[int, int, int, int]:
    """The 8-round ARX permutation on four 32-bit words."""
    for _ in range(8):
        v0 = (v0 + v1) & _M32
        v1 = ((v1 << 5) | (v1 >> 27)) & _M32 ^ v0
        v0 = ((v0 << 16) | (v0 >> 16)) & _M32
        v2 = (v2 + v3) & _M32
        v3 = ((v3 << 8) | (v3 >> 24)) & _M32 ^ v2
        v0 = (v0 + v3) & _M32
        v3 = ((v3 << 13) | (v3 >> 19)) & _M32 ^ v0
        v2 = (v2 + v1) & _M32
        v1 = ((v1 << 7) | (v1 >> 25)) & _M32 ^ v2
        v2 = ((v2 << 16) | (v2 >> 16)) & _M32
    return v0, v1, v2, v3


def _times_two(w: tuple[int, int, int, int]) -> tuple[int, int, int, int]:
    # Multiplication by x in GF(2^128) on the four-word representation;
    # the carry out of the top word folds back as 0x87.
    carry = 0x87 if w[3] >> 31 else 0
    return (
        (w[0] << 1) & _M32 ^ carry,
        ((w[1] << 1) | (w[0] >> 31)) & _M32,
        ((w[2] << 1) | (w[1] >> 31)) & _M32,
        ((w[3] << 1) | (w[2] >> 31)) & _M32,
    )


def derive_subkeys(key: bytes):
    """Return (k, k1, k2) word tuples for a 16-byte key."""
    if len(key) != 16:
        raise ValueError("Chaskey key must be exactly 16 bytes")
    k = struct.unpack("<4I", key)
    k1 = _times_two(k)
    k2 = _times_two(k1)
    return k, k1, k2


def mac(key: bytes, message: bytes) -> bytes:
    """Compute the 128-bit Chaskey tag of a message under a 16-byte key."""
    return mac_with_subkeys(derive_subkeys(key), message)


def mac_with_subkeys(subkeys, message: bytes) -> bytes:
    """Tag a message with a precomputed derive_subkeys() result.

    The key store caches subkeys per channel so repeated MACs skip the
    per-call derivation.
    """
    k, k1, k2 = subkeys
    v0, v1, v2, v3 = k
    n = len(message)

    full = (n - 1) // 16 if n else 0
    for i in range(full):
        m0, m1, m2, m3 = struct.unpack_from("<4I", message, i * 16)
        v0, v1, v2, v3 = _permute(v0 ^ m0, v1 ^ m1, v2 ^ m2, v3 ^ m3)

    if n and n % 16 == 0:
        last = message[n - 16:]
        l = k1
    else:
        pad = bytearray(16)
        rest = message[full * 16:]
        pad[:len(rest)] = rest
        pad[len(rest)] = 0x01
        last = bytes(pad)
        l = k2

    m0, m1, m2, m3 = struct.unpack("<4I", last)
    v0, v1, v2, v3 = _permute(
        v0 ^ m0 ^ l[0], v1 ^ m1 ^ l[1], v2 ^ m2 ^ l[2], v3 ^ m3 ^ l[3]
    )
    return struct.pack("<4I", v0 ^ l[0], v1 ^ l[1], v2 ^ l[2], v3 ^ l[3])


def truncate_tag(tag: bytes, bits: int) -> bytes:
    """Keep the first `bits` bits of a serialized tag (leftmost bytes).

    Only byte-aligned lengths are accepted in this protocol version.
    """
    if len(tag) != TAG_BYTES:
        raise ValueError("tag must be 16 bytes")
    if not 1 <= bits <= 128:
        raise BitsOutOfRange(f"truncation length {bits} not in 1..128")
    if bits % 8:
        raise BitsOutOfRange(f"truncation length {bits} not byte-aligned")
    return tag[: bits // 8]
