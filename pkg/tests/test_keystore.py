import random

import pytest

from cinnamon import chaskey, speck
from cinnamon.errors import (
    DanglingKeyId,
    DoubleInit,
    KeySeparationError,
    ParseError,
    Uninitialized,
    UnknownChannel,
)
from cinnamon.keystore import ChannelKeys, KeyStore

from conftest import CAN_ID, CHASKEY_TEST_KEY, SECOND_ID, SPECK_VECTOR_KEY


def test_channel_resolution(keystore):
    binding = keystore.channel_for(CAN_ID)
    assert binding.mac_key_id == "mac-a"
    assert binding.enc_key_id == "enc-a"
    assert keystore.has_channel(CAN_ID)
    assert not keystore.has_channel(0x7FF)
    assert keystore.channel_ids() == (CAN_ID, SECOND_ID)


def test_dangling_key_id():
    store = KeyStore()
    with pytest.raises(DanglingKeyId):
        store.initialize({"only-mac": bytes(16)},
                         [ChannelKeys(1, "only-mac", "missing-enc")])
    # a failed initialize must leave the store uninitialized
    assert not store.initialized


def test_double_init(keystore):
    with pytest.raises(DoubleInit):
        keystore.initialize({}, [])


def test_key_separation_enforced():
    store = KeyStore()
    with pytest.raises(KeySeparationError):
        store.initialize({"k": bytes(16)}, [ChannelKeys(1, "k", "k")])


def test_operations_fail_before_init():
    store = KeyStore()
    with pytest.raises(Uninitialized):
        store.mac_for(CAN_ID, b"")
    with pytest.raises(Uninitialized):
        store.encrypt_for(CAN_ID, 0)
    with pytest.raises(Uninitialized):
        store.has_channel(CAN_ID)


def test_unknown_channel(keystore):
    with pytest.raises(UnknownChannel):
        keystore.mac_for(0x7FF, b"")
    with pytest.raises(UnknownChannel):
        keystore.decrypt_for(0x700, 0)


def test_key_length_enforced():
    store = KeyStore()
    with pytest.raises(ValueError):
        store.initialize({"short": bytes(8)}, [])


def test_mac_delegation_equals_primitive(keystore):
    # the fixture provisioned known key material, so the test can call the
    # primitive directly and compare
    for message in (b"", b"x", bytes(range(13))):
        assert keystore.mac_for(CAN_ID, message) == chaskey.mac(CHASKEY_TEST_KEY, message)


def test_encrypt_delegation_equals_primitive(keystore):
    rng = random.Random(8)
    for _ in range(50):
        block = rng.getrandbits(64)
        assert keystore.encrypt_for(CAN_ID, block) == speck.encrypt(SPECK_VECTOR_KEY, block)
        assert keystore.decrypt_for(CAN_ID, keystore.encrypt_for(CAN_ID, block)) == block


def test_channels_use_distinct_keys(keystore):
    block = 0xDEADBEEF12345678
    assert keystore.encrypt_for(CAN_ID, block) != keystore.encrypt_for(SECOND_ID, block)
    assert keystore.mac_for(CAN_ID, b"m") != keystore.mac_for(SECOND_ID, b"m")


def test_no_key_material_in_public_surfaces(keystore):
    surfaces = [repr(keystore), str(keystore)]
    try:
        keystore.mac_for(0x7FF, b"")
    except UnknownChannel as exc:
        surfaces.append(str(exc))
    try:
        KeyStore().initialize({"k1": bytes(16), "k2": CHASKEY_TEST_KEY},
                              [ChannelKeys(1, "k1", "missing")])
    except DanglingKeyId as exc:
        surfaces.append(str(exc))
    blob = " ".join(surfaces).lower()
    for key in (CHASKEY_TEST_KEY, SPECK_VECTOR_KEY):
        assert key.hex() not in blob
        assert repr(key)[2:-1].lower() not in blob


def test_from_provisioning_document():
    doc = {
        "material": {"m": CHASKEY_TEST_KEY.hex(), "e": SPECK_VECTOR_KEY.hex()},
        "channels": {"0x123": {"mac": "m", "enc": "e"}},
    }
    store = KeyStore.from_provisioning(doc)
    assert store.has_channel(0x123)
    assert store.mac_for(0x123, b"abc") == chaskey.mac(CHASKEY_TEST_KEY, b"abc")


@pytest.mark.parametrize(
    "doc",
    [
        {},
        {"material": {}},
        {"material": {"m": "zz" * 16}, "channels": {}},
        {"material": {"m": "00" * 16}, "channels": {"0x123": {"mac": "m"}}},
        {"material": "nope", "channels": {}},
    ],
)
def test_malformed_provisioning_rejected(doc):
    with pytest.raises(ParseError):
        KeyStore.from_provisioning(doc)


def test_provisioning_file_round_trip(tmp_path):
    import json

    path = tmp_path / "keys.json"
    path.write_text(json.dumps({
        "material": {"m": "00" * 16, "e": "11" * 16},
        "channels": {"291": {"mac": "m", "enc": "e"}},
    }))
    store = KeyStore.from_provisioning_file(path)
    assert store.has_channel(291)
