"""Exception types shared across the toolkit.

Everything raised on purpose derives from CinnamonError so callers can
catch protocol-level failures without swallowing programming errors.
"""


class CinnamonError(Exception):
    """Base class for all toolkit errors."""


# --- crypto / bit handling ---

class BitsOutOfRange(CinnamonError, ValueError):
    """A truncation length is outside the supported range."""


# --- security profiles ---

class ProfileError(CinnamonError):
    """A security profile fails validation."""


class LayoutOverflow(ProfileError):
    """Profile field lengths cannot fit one classic CAN data field."""


class UnknownAlgorithm(ProfileError):
    """Algorithm family/mode/encryption name not in the supported set."""


class InconsistentFreshness(ProfileError):
    """Freshness truncation configured without a freshness value length."""


class UnsupportedFieldLength(ProfileError):
    """Field length not representable in this protocol version (byte
    alignment required, freshness values capped at 64 bits)."""


class ParseError(CinnamonError):
    """Malformed config document or candump line."""


# --- freshness ---

class CounterExhausted(CinnamonError):
    """Monotonic send counter reached its maximum; re-keying required."""


class WindowExceeded(CinnamonError):
    """No freshness candidate within the retry window; frame rejected."""


# --- key store ---

class KeyStoreError(CinnamonError):
    """Key store misuse or lookup failure."""


class DoubleInit(KeyStoreError):
    """initialize() called on an already-initialized store."""


class DanglingKeyId(KeyStoreError):
    """A channel references a key ID that was not provisioned."""


class Uninitialized(KeyStoreError):
    """Operation attempted before the store was initialized."""


class UnknownChannel(KeyStoreError):
    """No channel keys bound to the requested CAN identifier."""


class KeySeparationError(KeyStoreError):
    """A channel binds the same key ID for MAC and encryption."""


# --- frame codec ---

class LayoutMismatch(CinnamonError):
    """Field widths do not match the governing frame layout."""


class MacMismatch(CinnamonError):
    """Received truncated MAC does not match the recomputed one."""


class BadDlc(CinnamonError):
    """Secured frames must carry exactly 8 data bytes."""


# --- simulator / attack harness ---

class ScenarioInvalid(CinnamonError):
    """Scenario configuration is inconsistent or incomplete."""


class MissingCell(CinnamonError):
    """Mitigation matrix is missing a (threat, mode) result."""
