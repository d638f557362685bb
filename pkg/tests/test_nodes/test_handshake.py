"""
회로 핸드셰이크 테스트
"""

import random

import pytest

from lib.address import Address
from lib.cell import Cell, serialize_cell
from lib.errors import AuthenticationError
from lib.types import CellType
from nodes import RelayNode
from nodes.base import DROP_AUTH_FAILURE
from nodes.handshake import (
    PSK_NONCE_LEN,
    ClientHandshake,
    HandshakeMode,
    server_handshake,
)
from tests.conftest import TEST_PSK


class TestHandshake:
    """클라이언트/서버 키 일치 테스트"""

    @pytest.mark.parametrize("mode", list(HandshakeMode))
    def test_keys_agree(self, mode):
        client = ClientHandshake(mode, TEST_PSK, random.Random(5))
        server_key, reply = server_handshake(mode, client.onion_skin(), TEST_PSK)
        assert client.finish(reply).key == server_key.key

    def test_psk_skin_is_nonce(self):
        """PSK 모드: CREATE = nonce, CREATED = 빈 페이로드"""
        client = ClientHandshake(HandshakeMode.PSK, TEST_PSK, random.Random(5))
        assert len(client.onion_skin()) == PSK_NONCE_LEN
        assert server_handshake(HandshakeMode.PSK, client.onion_skin(), TEST_PSK)[1] == b""

    def test_psk_deterministic(self):
        """같은 rng 시드 → 같은 키"""
        keys = [
            ClientHandshake(HandshakeMode.PSK, TEST_PSK, random.Random(9)).finish(b"").key
            for _ in range(2)
        ]
        assert keys[0] == keys[1]

    def test_psk_missing_key(self):
        with pytest.raises(AuthenticationError):
            ClientHandshake(HandshakeMode.PSK)
        with pytest.raises(AuthenticationError):
            server_handshake(HandshakeMode.PSK, b"\x00" * PSK_NONCE_LEN)

    def test_psk_bad_nonce(self):
        with pytest.raises(AuthenticationError):
            server_handshake(HandshakeMode.PSK, b"short", TEST_PSK)

    def test_ephemeral_bad_skin(self):
        with pytest.raises(AuthenticationError):
            server_handshake(HandshakeMode.EPHEMERAL, b"\x01" * 7)

    def test_ephemeral_low_order_point(self):
        """저차수 공개키 (0 × 32) → AuthenticationError"""
        with pytest.raises(AuthenticationError):
            server_handshake(HandshakeMode.EPHEMERAL, b"\x00" * 32)


class TestHandshakeDrops:
    """잘못된 핸드셰이크 셀은 예외 없이 드롭"""

    def test_low_order_create_dropped(self, router):
        relay = RelayNode(router.bind(Address("127.0.0.1", 0)), handshake_mode=HandshakeMode.EPHEMERAL)
        peer = router.bind(Address("127.0.0.1", 0))
        peer.send_datagram(relay.address_bytes, serialize_cell(Cell(5, CellType.CREATE, b"\x00" * 32)))

        assert relay.step() == 1
        assert relay.drops[DROP_AUTH_FAILURE] == 1
        assert relay.table_size() == 0
        assert peer.recv() is None
