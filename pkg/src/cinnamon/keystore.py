"""HSM-like key store.

Holds 128-bit MAC and encryption keys addressed by opaque key IDs, binds
each CAN identifier to one (MAC key, encryption key) pair, and performs
all cryptographic operations on behalf of callers. Key material is loaded
once at initialization and is never returned by any query operation; the
repr and all error messages are free of key bytes.

Provisioning happens from in-memory mappings or from the JSON document
shared with simulator scenarios:

    {"material": {"k-mac": "<32 hex digits>", ...},
     "channels": {"0x123": {"mac": "k-mac", "enc": "k-enc"}, ...}}
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Mapping

from . import chaskey, speck
from .errors import (
    DanglingKeyId,
    DoubleInit,
    KeySeparationError,
    ParseError,
    Uninitialized,
    UnknownChannel,
)

KEY_BYTES = 16


@dataclass(frozen=True)
class ChannelKeys:
    """Key-ID bindings for one CAN identifier."""

    can_id: int
    mac_key_id: str
    enc_key_id: str


class _ChannelRuntime:
    """Internal per-channel crypto material (cached schedules/subkeys).

    Instances never leave the store through public API; they exist so the
    frame pipeline does not re-derive schedules per frame.
    """

    __slots__ = ("mac_subkeys", "round_keys", "_ctx_cache")

    def __init__(self, mac_key: bytes, enc_key: bytes):
        self.mac_subkeys = chaskey.derive_subkeys(mac_key)
        self.round_keys = speck.key_schedule(enc_key)
        self._ctx_cache: dict = {}

    def __repr__(self):  # pragma: no cover - defensive
        return "<channel runtime>"


class KeyStore:
    """Key holder and crypto delegate for all provisioned channels."""

    def __init__(self):
        self._initialized = False
        self._channels: dict[int, ChannelKeys] = {}
        self._runtimes: dict[int, _ChannelRuntime] = {}
        self._key_count = 0

    def __repr__(self):
        ids = ", ".join(f"0x{i:03X}" for i in sorted(self._channels))
        return (
            f"KeyStore(initialized={self._initialized}, "
            f"keys={self._key_count}, channels=[{ids}])"
        )

    @property
    def initialized(self) -> bool:
        return self._initialized

    def initialize(
        self,
        keys: Mapping[str, bytes],
        channels: Iterable[ChannelKeys],
    ) -> None:
        """Load all key material and channel bindings atomically."""
        if self._initialized:
            raise DoubleInit("key store is already initialized")
        for key_id, material in keys.items():
            if len(material) != KEY_BYTES:
                raise ValueError(f"key {key_id!r} must be {KEY_BYTES} bytes")
        staged_channels = {}
        staged_runtimes = {}
        for binding in channels:
            if binding.mac_key_id not in keys:
                raise DanglingKeyId(
                    f"channel 0x{binding.can_id:03X} references unknown MAC "
                    f"key ID {binding.mac_key_id!r}"
                )
            if binding.enc_key_id not in keys:
                raise DanglingKeyId(
                    f"channel 0x{binding.can_id:03X} references unknown encryption "
                    f"key ID {binding.enc_key_id!r}"
                )
            if binding.mac_key_id == binding.enc_key_id:
                raise KeySeparationError(
                    f"channel 0x{binding.can_id:03X} must use distinct MAC and "
                    "encryption key IDs"
                )
            staged_channels[binding.can_id] = binding
            staged_runtimes[binding.can_id] = _ChannelRuntime(
                keys[binding.mac_key_id], keys[binding.enc_key_id]
            )
        self._channels = staged_channels
        self._runtimes = staged_runtimes
        self._key_count = len(keys)
        self._initialized = True

    @classmethod
    def from_provisioning(cls, doc: Mapping) -> "KeyStore":
        """Build and initialize a store from the JSON provisioning schema."""
        try:
            material = {
                key_id: bytes.fromhex(hex_text)
                for key_id, hex_text in doc["material"].items()
            }
            channels = [
                ChannelKeys(
                    can_id=int(can_id_text, 0),
                    mac_key_id=entry["mac"],
                    enc_key_id=entry["enc"],
                )
                for can_id_text, entry in doc["channels"].items()
            ]
        except (KeyError, TypeError, AttributeError) as exc:
            raise ParseError(f"malformed key provisioning document: {exc}") from None
        except ValueError as exc:
            raise ParseError(f"malformed key provisioning value: {exc}") from None
        store = cls()
        store.initialize(material, channels)
        return store

    @classmethod
    def from_provisioning_file(cls, path) -> "KeyStore":
        with open(path, "r", encoding="utf-8") as handle:
            try:
                doc = json.load(handle)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{path}: {exc}") from None
        return cls.from_provisioning(doc)

    # --- queries -----------------------------------------------------

    def _require_ready(self, can_id: int) -> _ChannelRuntime:
        if not self._initialized:
            raise Uninitialized("key store has not been initialized")
        runtime = self._runtimes.get(can_id)
        if runtime is None:
            raise UnknownChannel(f"no keys bound to CAN ID 0x{can_id:03X}")
        return runtime

    def has_channel(self, can_id: int) -> bool:
        if not self._initialized:
            raise Uninitialized("key store has not been initialized")
        return can_id in self._channels

    def channel_ids(self) -> tuple[int, ...]:
        if not self._initialized:
            raise Uninitialized("key store has not been initialized")
        return tuple(sorted(self._channels))

    def channel_for(self, can_id: int) -> ChannelKeys:
        self._require_ready(can_id)
        return self._channels[can_id]

    def mac_for(self, can_id: int, message: bytes) -> bytes:
        """Chaskey tag of `message` under the channel's MAC key."""
        runtime = self._require_ready(can_id)
        return chaskey.mac_with_subkeys(runtime.mac_subkeys, message)

    def encrypt_for(self, can_id: int, block: int) -> int:
        """SPECK64/128-encrypt a block under the channel's encryption key."""
        runtime = self._require_ready(can_id)
        return speck.encrypt_scheduled(runtime.round_keys, block)

    def decrypt_for(self, can_id: int, block: int) -> int:
        """Inverse of encrypt_for."""
        runtime = self._require_ready(can_id)
        return speck.decrypt_scheduled(runtime.round_keys, block)

    # --- internal fast-path support -----------------------------------

    def _kernel_ctx(self, can_id: int, layout, encrypts: bool, fv_bits: int):
        """Context array for the JIT pipeline (internal use by the codec)."""
        runtime = self._require_ready(can_id)
        cache_key = (layout.payload_bits, layout.fvt_bits, encrypts, fv_bits)
        ctx = runtime._ctx_cache.get(cache_key)
        if ctx is None:
            global _kernels_mod
            if _kernels_mod is None:
                from . import _kernels as _kernels_mod  # noqa: PLW0603
            k, _k1, k2 = runtime.mac_subkeys
            ctx = _kernels_mod.build_ctx(
                layout, encrypts, fv_bits, runtime.round_keys, k, k2
            )
            runtime._ctx_cache[cache_key] = ctx
        return ctx


_kernels_mod = None
