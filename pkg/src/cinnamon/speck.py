"""SPECK64/128 block cipher.

Pure-integer implementation of the 64-bit block, 128-bit key variant:
27 rounds, 32-bit words, rotation constants 8/3. A block is a Python int
in [0, 2^64); its wire form is 8 big-endian bytes. The cipher-internal
word order follows the designers' convention: the high 32 bits of the
block are the x word, the low 32 bits the y word, and key word 0 (the
least significant 32 bits of the key) is used directly as round key 0.

Round keys contain no secret-dependent branching; all operations are
fixed-shape integer arithmetic.
"""

from __future__ import annotations

ROUNDS = 27

_M32 = 0xFFFFFFFF
_M64 = 0xFFFFFFFFFFFFFFFF


def _key_to_int(key: bytes) -> int:
    if len(key) != 16:
        raise ValueError("SPECK64/128 key must be exactly 16 bytes")
    return int.from_bytes(key, "big")


def key_schedule(key: bytes) -> tuple[int, ...]:
    """Expand a 128-bit key into the 27 round keys."""
    k = _key_to_int(key)
    rk = k & _M32
    l0 = (k >> 32) & _M32
    l1 = (k >> 64) & _M32
    l2 = (k >> 96) & _M32
    ls = [l0, l1, l2]
    out = [rk]
    for i in range(ROUNDS - 1):
        li = ls[i]
        ln = ((((li >> 8) | (li << 24)) & _M32) + out[i]) & _M32 ^ i
        ls.append(ln)
        out.append(((out[i] << 3) | (out[i] >> 29)) & _M32 ^ ln)
    return tuple(out)


def encrypt_scheduled(round_keys, block: int) -> int:
    """Encrypt one 64-bit block with precomputed round keys."""
    if not 0 <= block <= _M64:
        raise ValueError("block must be a 64-bit unsigned integer")
    x = block >> 32
    y = block & _M32
    for k in round_keys:
        x = ((((x >> 8) | (x << 24)) & _M32) + y) & _M32 ^ k
        y = ((y << 3) | (y >> 29)) & _M32 ^ x
    return (x << 32) | y


def decrypt_scheduled(round_keys, block: int) -> int:
    """Invert encrypt_scheduled."""
    if not 0 <= block <= _M64:
        raise ValueError("block must be a 64-bit unsigned integer")
    x = block >> 32
    y = block & _M32
    for k in reversed(round_keys):
        y = (y ^ x)
        y = ((y >> 3) | (y << 29)) & _M32
        x = ((x ^ k) - y) & _M32
        x = ((x << 8) | (x >> 24)) & _M32
    return (x << 32) | y


def encrypt(key: bytes, block: int) -> int:
    """Encrypt one 64-bit block under a 16-byte key."""
    return encrypt_scheduled(key_schedule(key), block)


def decrypt(key: bytes, block: int) -> int:
    """Decrypt one 64-bit block under a 16-byte key."""
    return decrypt_scheduled(key_schedule(key), block)


def block_to_bytes(block: int) -> bytes:
    """Serialize a 64-bit block to its 8-byte big-endian wire form."""
    return block.to_bytes(8, "big")


def block_from_bytes(data: bytes) -> int:
    if len(data) != 8:
        raise ValueError("a serialized block is exactly 8 bytes")
    return int.from_bytes(data, "big")
