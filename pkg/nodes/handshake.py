"""
회로 핸드셰이크 (CREATE/CREATED, EXTEND/EXTENDED 페이로드)

모드:
- EPHEMERAL: X25519 임시 키 합의. CREATE = 클라이언트 공개키, CREATED = 서버 공개키
- PSK: 사전 공유 키 + 클라이언트 nonce (결정적 테스트용). CREATE = nonce, CREATED = 빈 페이로드
"""

import random
from enum import Enum

from lib.crypto import EphemeralHandshake, LayerKey, psk_layer_key
from lib.errors import AuthenticationError

PSK_NONCE_LEN = 16


class HandshakeMode(str, Enum):
    """키 합의 방식"""

    EPHEMERAL = "ephemeral"
    PSK = "psk"


class ClientHandshake:
    """회로 빌더(seed) 측 핸드셰이크 상태 (hop 하나당 한 번 사용)"""

    def __init__(
        self,
        mode: HandshakeMode,
        psk: bytes | None = None,
        rng: random.Random | None = None,
    ):
        self.mode = mode
        self._psk = psk
        self._ephemeral: EphemeralHandshake | None = None
        if mode == HandshakeMode.PSK:
            if psk is None:
                raise AuthenticationError("PSK 모드에 사전 공유 키가 없음")
            self._nonce = (rng or random.Random()).randbytes(PSK_NONCE_LEN)
        else:
            self._ephemeral = EphemeralHandshake()

    def onion_skin(self) -> bytes:
        """CREATE/EXTEND에 실을 핸드셰이크 데이터"""
        if self._ephemeral is not None:
            return self._ephemeral.public_bytes
        return self._nonce

    def finish(self, reply: bytes) -> LayerKey:
        """CREATED/EXTENDED 응답으로 레이어 키 확정"""
        if self._ephemeral is not None:
            return LayerKey(self._ephemeral.complete(reply))
        assert self._psk is not None
        return LayerKey(psk_layer_key(self._psk, self._nonce))


def server_handshake(
    mode: HandshakeMode, onion_skin: bytes, psk: bytes | None = None
) -> tuple[LayerKey, bytes]:
    """hop 측 핸드셰이크 응답

    Returns:
        tuple: (hop의 LayerKey, CREATED 페이로드)

    Raises:
        AuthenticationError: 잘못된 핸드셰이크 데이터
    """
    if mode == HandshakeMode.PSK:
        if psk is None:
            raise AuthenticationError("PSK 모드에 사전 공유 키가 없음")
        if len(onion_skin) != PSK_NONCE_LEN:
            raise AuthenticationError(f"PSK nonce 길이 오류: {len(onion_skin)}")
        return LayerKey(psk_layer_key(psk, onion_skin)), b""

    responder = EphemeralHandshake()
    key = LayerKey(responder.complete(onion_skin))
    return key, responder.public_bytes
