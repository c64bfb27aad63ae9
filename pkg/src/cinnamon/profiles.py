"""Security profiles and the 64-bit frame layout they induce.

A profile fixes the MAC algorithm, the truncated MAC length, the optional
freshness-value lengths, and the encryption algorithm. Validation derives
the concrete split of the 8-byte CAN data field into payload, truncated
freshness value (FVT) and truncated MAC (MACT).

Profiles are read and written as line-oriented ``key = value`` UTF-8
documents; optional parameters may be omitted or set to ``not set``.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

from .errors import (
    InconsistentFreshness,
    LayoutOverflow,
    ParseError,
    UnknownAlgorithm,
    UnsupportedFieldLength,
)

SUPPORTED_FAMILIES = {"Chaskey"}
SUPPORTED_MODES = {"Chaskey_MAC"}
SUPPORTED_ENCRYPTION = {"SPECK64/128", "none"}

FRAME_BITS = 64
MIN_PAYLOAD_BITS = 8
MAX_FRESHNESS_BITS = 64


@dataclass(frozen=True)
class FrameLayout:
    """Widths of the three secured data field regions, summing to 64."""

    payload_bits: int
    fvt_bits: int
    mact_bits: int

    @property
    def payload_bytes(self) -> int:
        return self.payload_bits // 8

    @property
    def fvt_bytes(self) -> int:
        return self.fvt_bits // 8

    @property
    def mact_bytes(self) -> int:
        return self.mact_bits // 8


@dataclass
class SecurityProfile:
    """The configurable parameter set governing one secured channel."""

    name: str
    auth_info_trunc_length: int
    algorithm_family: str | None = None
    algorithm_mode: str | None = None
    algorithm_secondary_family: str | None = None
    freshness_value_length: int | None = None
    freshness_value_trunc_length: int | None = None
    algorithm_freshness_value: str | None = None
    algorithm_encryption: str | None = None

    @property
    def uses_freshness(self) -> bool:
        return self.freshness_value_length is not None

    @property
    def encrypts(self) -> bool:
        return self.algorithm_encryption not in (None, "none")

    def layout(self) -> FrameLayout:
        """Validated frame layout; cached against the fields it depends on
        (profiles are immutable once in service, but a stale cache after
        mutation would be a correctness bug, so the key re-checks)."""
        key = (
            self.auth_info_trunc_length,
            self.freshness_value_length,
            self.freshness_value_trunc_length,
            self.algorithm_family,
            self.algorithm_mode,
            self.algorithm_encryption,
        )
        cached = self.__dict__.get("_layout_cache")
        if cached is not None and cached[0] == key:
            return cached[1]
        layout = validate_profile(self)
        self.__dict__["_layout_cache"] = (key, layout)
        return layout


def validate_profile(profile: SecurityProfile) -> FrameLayout:
    """Check a profile and return the frame layout it induces.

    Fails closed: unknown algorithm names are errors, and every on-wire
    field must be byte-aligned in this protocol version.
    """
    p = profile
    if p.algorithm_family is not None and p.algorithm_family not in SUPPORTED_FAMILIES:
        raise UnknownAlgorithm(f"unsupported algorithmFamily {p.algorithm_family!r}")
    if p.algorithm_mode is not None and p.algorithm_mode not in SUPPORTED_MODES:
        raise UnknownAlgorithm(f"unsupported algorithmMode {p.algorithm_mode!r}")
    if p.algorithm_encryption is not None and p.algorithm_encryption not in SUPPORTED_ENCRYPTION:
        raise UnknownAlgorithm(f"unsupported algorithmEncryption {p.algorithm_encryption!r}")

    mact = p.auth_info_trunc_length
    if not isinstance(mact, int) or mact < 1:
        raise UnsupportedFieldLength("authInfoTruncLength must be a positive integer")
    if mact % 8:
        raise UnsupportedFieldLength(f"authInfoTruncLength {mact} not byte-aligned")

    fv = p.freshness_value_length
    fvt = p.freshness_value_trunc_length
    if fvt is not None and fv is None:
        raise InconsistentFreshness(
            "freshnessValueTruncLength set without freshnessValueLength"
        )
    if fv is not None:
        if fv < 1:
            raise UnsupportedFieldLength("freshnessValueLength must be positive")
        if fv % 8:
            raise UnsupportedFieldLength(f"freshnessValueLength {fv} not byte-aligned")
        if fv > MAX_FRESHNESS_BITS:
            raise UnsupportedFieldLength(
                f"freshnessValueLength {fv} exceeds the {MAX_FRESHNESS_BITS}-bit maximum"
            )
        if fvt is not None:
            if fvt < 0:
                raise UnsupportedFieldLength("freshnessValueTruncLength must be >= 0")
            if fvt % 8:
                raise UnsupportedFieldLength(
                    f"freshnessValueTruncLength {fvt} not byte-aligned"
                )
            if fvt > fv:
                raise InconsistentFreshness(
                    f"freshnessValueTruncLength {fvt} exceeds freshnessValueLength {fv}"
                )

    fvt_bits = fvt or 0
    payload_bits = FRAME_BITS - mact - fvt_bits
    if payload_bits < MIN_PAYLOAD_BITS:
        raise LayoutOverflow(
            f"MACT {mact} + FVT {fvt_bits} bits leave {payload_bits} payload bits "
            f"(minimum {MIN_PAYLOAD_BITS})"
        )
    return FrameLayout(payload_bits, fvt_bits, mact)


def builtin_profile_1() -> SecurityProfile:
    """The example profile: Chaskey MAC truncated to 24 bits, SPECK64/128
    encryption, no freshness parameters (40-bit payload)."""
    return SecurityProfile(
        name="profile-1",
        algorithm_family="Chaskey",
        algorithm_mode="Chaskey_MAC",
        auth_info_trunc_length=24,
        algorithm_encryption="SPECK64/128",
    )


def builtin_profile_secoc_baseline() -> SecurityProfile:
    """Authenticity/integrity only: identical to profile-1 with the
    encryption stage disabled, used as the comparison baseline."""
    p = builtin_profile_1()
    return dataclasses.replace(p, name="secoc-baseline", algorithm_encryption="none")


def with_freshness(
    profile: SecurityProfile,
    fv_bits: int = 32,
    fvt_bits: int = 8,
    name: str | None = None,
) -> SecurityProfile:
    """Derive a replay-protected variant of a profile.

    The default 32-bit counter with an 8-bit on-wire truncation yields the
    32/8/24 field split alongside a 24-bit MACT.
    """
    derived = dataclasses.replace(
        profile,
        name=name or f"{profile.name}+fv{fv_bits}",
        freshness_value_length=fv_bits,
        freshness_value_trunc_length=fvt_bits,
        algorithm_freshness_value="monotonic-counter",
    )
    validate_profile(derived)
    return derived


# Config keys: canonical spelling plus the aliases that appear in the wild.
_KEY_ALIASES = {
    "algorithmfamily": "algorithm_family",
    "algorithmmode": "algorithm_mode",
    "algorithmsecondaryfamily": "algorithm_secondary_family",
    "authinfotrunclength": "auth_info_trunc_length",
    "authinfotxlength": "auth_info_trunc_length",
    "secocauthinfotrunclength": "auth_info_trunc_length",
    "freshnessvaluelength": "freshness_value_length",
    "secocfreshnessvaluelength": "freshness_value_length",
    "freshnessvaluetrunclength": "freshness_value_trunc_length",
    "secocfreshnessvaluetrunclength": "freshness_value_trunc_length",
    "algorithmfreshnessvalue": "algorithm_freshness_value",
    "algorithmencryption": "algorithm_encryption",
    "name": "name",
}

_INT_FIELDS = {
    "auth_info_trunc_length",
    "freshness_value_length",
    "freshness_value_trunc_length",
}

_CANONICAL_KEYS = (
    ("name", "name"),
    ("algorithmFamily", "algorithm_family"),
    ("algorithmMode", "algorithm_mode"),
    ("algorithmSecondaryFamily", "algorithm_secondary_family"),
    ("freshnessValueLength", "freshness_value_length"),
    ("freshnessValueTruncLength", "freshness_value_trunc_length"),
    ("authInfoTruncLength", "auth_info_trunc_length"),
    ("algorithmFreshnessValue", "algorithm_freshness_value"),
    ("algorithmEncryption", "algorithm_encryption"),
)


def _parse_int(key: str, raw: str) -> int:
    # Accept an optional "bit"/"bits" suffix, as in published profile tables.
    text = raw.strip()
    for suffix in (" bits", " bit"):
        if text.endswith(suffix):
            text = text[: -len(suffix)].strip()
    try:
        return int(text, 10)
    except ValueError:
        raise ParseError(f"{key}: expected an integer, got {raw!r}") from None


def load_profile(text: str) -> SecurityProfile:
    """Parse and validate a profile config document."""
    fields: dict[str, object] = {}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ParseError(f"line {lineno}: expected 'key = value'")
        key_text, value_text = line.split("=", 1)
        key_norm = key_text.strip().lower()
        if key_norm not in _KEY_ALIASES:
            raise ParseError(f"line {lineno}: unknown parameter {key_text.strip()!r}")
        field = _KEY_ALIASES[key_norm]
        if field in fields:
            raise ParseError(f"line {lineno}: duplicate parameter {key_text.strip()!r}")
        value = value_text.strip()
        if value.lower() in ("", "not set"):
            fields[field] = None
        elif field in _INT_FIELDS:
            fields[field] = _parse_int(key_text.strip(), value)
        else:
            fields[field] = value

    if fields.get("auth_info_trunc_length") is None:
        raise ParseError("authInfoTruncLength is mandatory")
    fields.setdefault("name", "custom")
    if fields["name"] is None:
        fields["name"] = "custom"

    profile = SecurityProfile(**fields)  # type: ignore[arg-type]
    validate_profile(profile)
    return profile


def serialize_profile(profile: SecurityProfile) -> str:
    """Render a profile in the config format load_profile() accepts."""
    lines = []
    for key, field in _CANONICAL_KEYS:
        value = getattr(profile, field)
        lines.append(f"{key} = {'not set' if value is None else value}")
    return "\n".join(lines) + "\n"
