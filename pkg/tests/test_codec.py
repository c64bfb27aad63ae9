import pytest

from cinnamon.codec import (
    CanFrame,
    assemble_authenticated,
    extract_payload_unauthenticated,
    format_candump_line,
    parse_candump_line,
    secure_frame,
    split_secured,
    verify_frame,
)
from cinnamon.errors import (
    BadDlc,
    LayoutMismatch,
    MacMismatch,
    ParseError,
    UnknownChannel,
    WindowExceeded,
)
from cinnamon.freshness import FreshnessState
from cinnamon.profiles import (
    FrameLayout,
    builtin_profile_1,
    builtin_profile_secoc_baseline,
    with_freshness,
)

from conftest import CAN_ID, CHASKEY_TEST_KEY, SPECK_VECTOR_KEY
from oracles import chaskey_ref, speck64_128_ref

PROFILE_1 = builtin_profile_1()
BASELINE = builtin_profile_secoc_baseline()
FRESH = with_freshness(builtin_profile_1())


def fresh_states():
    tx = FreshnessState.for_profile(CAN_ID, FRESH)
    rx = FreshnessState.for_profile(CAN_ID, FRESH)
    return tx, rx


# --- assembly ------------------------------------------------------------

def test_assemble_no_freshness():
    layout = FrameLayout(40, 0, 24)
    block = assemble_authenticated(
        bytes.fromhex("aabbccddee"), 0, bytes.fromhex("112233"), layout
    )
    assert block == 0xAABBCCDDEE112233


def test_assemble_with_freshness():
    layout = FrameLayout(32, 8, 24)
    block = assemble_authenticated(
        bytes.fromhex("deadbeef"), 0x07, bytes.fromhex("112233"), layout
    )
    assert block == 0xDEADBEEF07112233


def test_assemble_rejects_wrong_widths():
    layout = FrameLayout(40, 0, 24)
    with pytest.raises(LayoutMismatch):
        assemble_authenticated(bytes(4), 0, bytes(3), layout)
    with pytest.raises(LayoutMismatch):
        assemble_authenticated(bytes(5), 0, bytes(2), layout)
    with pytest.raises(LayoutMismatch):
        assemble_authenticated(bytes(5), 1, bytes(3), layout)  # no FVT room


def test_split_inverts_assemble(rng):
    layout = FrameLayout(32, 8, 24)
    for _ in range(200):
        payload = rng.randbytes(4)
        fvt = rng.randrange(256)
        mact = rng.randbytes(3)
        block = assemble_authenticated(payload, fvt, mact, layout)
        assert split_secured(block, layout) == (payload, fvt, mact)


# --- secure: structure and oracle composition ----------------------------

def test_secure_is_encryption_of_assembled_block(keystore, rng):
    # Under the encrypting profile the wire field must equal the block
    # cipher applied to payload || MACT, bit for bit (composed from the
    # independent reference implementations of both primitives).
    for _ in range(50):
        payload = rng.randbytes(5)
        frame = secure_frame(CAN_ID, payload, PROFILE_1, keystore)
        tag = chaskey_ref(CHASKEY_TEST_KEY, payload)
        assembled = payload + tag[:3]
        expected = speck64_128_ref(SPECK_VECTOR_KEY, assembled)
        assert frame.data == expected
        assert frame.dlc == 8


def test_secure_concrete_zero_payload_vector(keystore):
    # Fixed keys (the two primitive-test keys), 40 zero payload bits:
    # value derived by composing the independently verified primitives.
    frame = secure_frame(CAN_ID, bytes(5), PROFILE_1, keystore)
    tag = chaskey_ref(CHASKEY_TEST_KEY, bytes(5))
    expected = speck64_128_ref(SPECK_VECTOR_KEY, bytes(5) + tag[:3])
    assert frame.data == expected


def test_baseline_leaves_payload_readable(keystore, rng):
    for _ in range(20):
        payload = rng.randbytes(5)
        frame = secure_frame(CAN_ID, payload, BASELINE, keystore)
        assert frame.data[:5] == payload  # positions 0..39 verbatim
        tag = chaskey_ref(CHASKEY_TEST_KEY, payload)
        assert frame.data[5:] == tag[:3]


def test_freshness_mac_covers_full_counter(keystore):
    # MAC input is payload || full FV; wire carries only the low 8 bits.
    tx, _ = fresh_states()
    payload = bytes.fromhex("cafebabe")
    frame = secure_frame(CAN_ID, payload, FRESH, keystore, tx)
    fv = tx.send_counter
    block = speck64_128_ref(SPECK_VECTOR_KEY, frame.data, decrypt=True)
    tag = chaskey_ref(CHASKEY_TEST_KEY, payload + fv.to_bytes(4, "big"))
    assert block == payload + bytes([fv & 0xFF]) + tag[:3]


def test_secure_wrong_payload_width(keystore):
    with pytest.raises(LayoutMismatch):
        secure_frame(CAN_ID, bytes(4), PROFILE_1, keystore)


def test_secure_unknown_channel(keystore):
    with pytest.raises(UnknownChannel):
        secure_frame(0x700, bytes(5), PROFILE_1, keystore)


def test_secure_requires_state_for_freshness_profile(keystore):
    with pytest.raises(ValueError):
        secure_frame(CAN_ID, bytes(4), FRESH, keystore)


def test_unknown_channel_does_not_burn_counter(keystore):
    tx, _ = fresh_states()
    with pytest.raises(UnknownChannel):
        secure_frame(0x700, bytes(4), FRESH, keystore, tx)
    assert tx.send_counter == 0


# --- verify --------------------------------------------------------------

@pytest.mark.parametrize("profile", [PROFILE_1, BASELINE, FRESH],
                         ids=lambda p: p.name)
def test_verify_round_trip(profile, keystore, rng):
    tx = FreshnessState.for_profile(CAN_ID, profile) if profile.uses_freshness else None
    rx = FreshnessState.for_profile(CAN_ID, profile) if profile.uses_freshness else None
    size = profile.layout().payload_bytes
    for _ in range(2_000):
        payload = rng.randbytes(size)
        assert verify_frame(secure_frame(CAN_ID, payload, profile, keystore, tx),
                            profile, keystore, rx) == payload


def test_verify_equals_inverse_pipeline(keystore, rng):
    # decrypt-then-MAC-check is the bit-for-bit inverse of the secure
    # pipeline: rebuild the accept decision from the primitive oracles.
    for _ in range(50):
        payload = rng.randbytes(5)
        frame = secure_frame(CAN_ID, payload, PROFILE_1, keystore)
        block = speck64_128_ref(SPECK_VECTOR_KEY, frame.data, decrypt=True)
        oracle_payload, oracle_mact = block[:5], block[5:]
        assert chaskey_ref(CHASKEY_TEST_KEY, oracle_payload)[:3] == oracle_mact
        assert verify_frame(frame, PROFILE_1, keystore) == oracle_payload == payload


def test_single_bit_tamper_sample(keystore, rng):
    # every bit position on a handful of frames; the full 64k-tamper sweep
    # runs in the acceptance suite
    for _ in range(8):
        payload = rng.randbytes(5)
        frame = secure_frame(CAN_ID, payload, PROFILE_1, keystore)
        for bit in range(64):
            data = bytearray(frame.data)
            data[bit // 8] ^= 0x80 >> (bit % 8)
            with pytest.raises(MacMismatch):
                verify_frame(CanFrame(CAN_ID, 8, bytes(data)), PROFILE_1, keystore)


def test_replay_rejected_with_freshness(keystore, rng):
    tx, rx = fresh_states()
    frame = secure_frame(CAN_ID, rng.randbytes(4), FRESH, keystore, tx)
    assert verify_frame(frame, FRESH, keystore, rx) is not None
    with pytest.raises(WindowExceeded):
        verify_frame(frame, FRESH, keystore, rx)


def test_replay_accepted_without_freshness(keystore, rng):
    # the 24-bit-MAC example profile carries no freshness value: identical
    # frames verify again, by design of that configuration
    payload = rng.randbytes(5)
    frame = secure_frame(CAN_ID, payload, PROFILE_1, keystore)
    assert verify_frame(frame, PROFILE_1, keystore) == payload
    assert verify_frame(frame, PROFILE_1, keystore) == payload


def test_bad_dlc(keystore):
    with pytest.raises(BadDlc):
        verify_frame(CanFrame(CAN_ID, 4, bytes(4)), PROFILE_1, keystore)


def test_verify_wrong_keys_rejects(keystore, rng):
    # frames secured for one channel must not verify on another
    payload = rng.randbytes(5)
    frame = secure_frame(CAN_ID, payload, PROFILE_1, keystore)
    moved = CanFrame(0x211, 8, frame.data)
    with pytest.raises(MacMismatch):
        verify_frame(moved, PROFILE_1, keystore)


def test_deterministic_without_freshness(keystore):
    payload = bytes.fromhex("0102030405")
    a = secure_frame(CAN_ID, payload, PROFILE_1, keystore)
    b = secure_frame(CAN_ID, payload, PROFILE_1, keystore)
    assert a == b


def test_distinct_wire_frames_with_freshness(keystore):
    tx, _ = fresh_states()
    payload = bytes.fromhex("01020304")
    a = secure_frame(CAN_ID, payload, FRESH, keystore, tx)
    b = secure_frame(CAN_ID, payload, FRESH, keystore, tx)
    assert a.data != b.data


# --- unauthenticated extraction ------------------------------------------

def test_extract_matches_verify(keystore, rng):
    payload = rng.randbytes(5)
    frame = secure_frame(CAN_ID, payload, PROFILE_1, keystore)
    assert extract_payload_unauthenticated(frame, PROFILE_1, keystore) == payload


def test_extract_ignores_mac_tamper(keystore, rng):
    payload = rng.randbytes(5)
    frame = secure_frame(CAN_ID, payload, BASELINE, keystore)
    data = bytearray(frame.data)
    data[7] ^= 0xFF  # inside the MACT region of the plaintext layout
    tampered = CanFrame(CAN_ID, 8, bytes(data))
    assert extract_payload_unauthenticated(tampered, BASELINE, keystore) == payload
    with pytest.raises(MacMismatch):
        verify_frame(tampered, BASELINE, keystore)


def test_extract_garbles_silently_on_payload_tamper(keystore, rng):
    payload = rng.randbytes(5)
    frame = secure_frame(CAN_ID, payload, PROFILE_1, keystore)
    data = bytearray(frame.data)
    data[0] ^= 0x01
    garbled = extract_payload_unauthenticated(
        CanFrame(CAN_ID, 8, bytes(data)), PROFILE_1, keystore
    )
    assert garbled != payload  # wrong bits, no error: documented hazard


# --- candump lines --------------------------------------------------------

def test_parse_candump_line():
    ts, iface, frame = parse_candump_line("(1620000000.000123) vcan0 123#DEADBEEF")
    assert ts == pytest.approx(1620000000.000123)
    assert iface == "vcan0"
    assert frame == CanFrame(0x123, 4, bytes.fromhex("deadbeef"))


def test_parse_empty_data():
    _, _, frame = parse_candump_line("(0.0) vcan0 7FF#")
    assert frame.can_id == 0x7FF
    assert frame.dlc == 0


def test_parse_rejects_oversize_id():
    with pytest.raises(ParseError):
        parse_candump_line("(0.0) vcan0 800#00")


@pytest.mark.parametrize(
    "line",
    [
        "garbage",
        "(1.0) vcan0 123#ABC",            # odd hex digits
        "(1.0) vcan0 123#" + "00" * 9,    # more than 8 bytes
        "(1.0) 123#00",                   # missing interface
        "(1.0) vcan0 12G#00",             # bad hex in id
    ],
)
def test_parse_rejects_malformed(line):
    with pytest.raises(ParseError):
        parse_candump_line(line)


def test_format_parse_round_trip(rng):
    for _ in range(100):
        frame = CanFrame(rng.randrange(0x800), 8, rng.randbytes(8))
        line = format_candump_line(12.5, "vcan0", frame)
        ts, iface, parsed = parse_candump_line(line)
        assert (ts, iface, parsed) == (12.5, "vcan0", frame)


def test_canframe_validation():
    with pytest.raises(ValueError):
        CanFrame(0x800, 0, b"")
    with pytest.raises(ValueError):
        CanFrame(0x100, 9, bytes(9))
    with pytest.raises(ValueError):
        CanFrame(0x100, 2, bytes(3))
