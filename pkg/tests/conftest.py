import random

import pytest

from cinnamon import ChannelKeys, KeyStore

# Primitive-test keys: the cipher designers' published-vector key and the
# MAC designers' reference test key.
SPECK_VECTOR_KEY = bytes.fromhex("1b1a1918131211100b0a090803020100")
CHASKEY_TEST_KEY = bytes.fromhex("33343d839f389f004fe6982339cf7a41")

CAN_ID = 0x123
SECOND_ID = 0x211


@pytest.fixture
def rng():
    return random.Random(0xC1A0)


@pytest.fixture
def keystore():
    """Two provisioned channels with fixed, known key material."""
    store = KeyStore()
    store.initialize(
        {
            "mac-a": CHASKEY_TEST_KEY,
            "enc-a": SPECK_VECTOR_KEY,
            "mac-b": bytes(range(16)),
            "enc-b": bytes(range(16, 32)),
        },
        [
            ChannelKeys(CAN_ID, "mac-a", "enc-a"),
            ChannelKeys(SECOND_ID, "mac-b", "enc-b"),
        ],
    )
    return store
