"""
레이어드 AEAD 암호화 (onion)

레이어 형식:
    nonce_counter (8바이트 big-endian) || ChaCha20-Poly1305 암호문+태그(16바이트)

- 레이어당 오버헤드 24바이트 고정
- 12바이트 AEAD nonce = 방향(1바이트) || 0x000000 || 카운터(8바이트)
- hop 1 레이어가 가장 바깥 (첫 번째 relay가 먼저 벗김)
- 수신 측은 다음 기대 카운터보다 작은 nonce를 거부 (nonce 재사용 방지)

키 합의:
- 임시 X25519 + HKDF-SHA256 (기본)
- 사전 공유 키(PSK) + HKDF 모드 (결정적 테스트용)
"""

import os
import struct
import threading
from dataclasses import dataclass, field
from typing import Sequence

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives import hashes
from cryptography.hazmat.primitives.asymmetric.x25519 import (
    X25519PrivateKey,
    X25519PublicKey,
)
from cryptography.hazmat.primitives.ciphers.aead import ChaCha20Poly1305
from cryptography.hazmat.primitives.kdf.hkdf import HKDF

from .errors import AuthenticationError, NoLayerError, OversizeError
from .profiler import profiled

KEY_LEN = 32
NONCE_COUNTER_LEN = 8
TAG_LEN = 16
LAYER_OVERHEAD = NONCE_COUNTER_LEN + TAG_LEN  # 24
MAX_ONION_LEN = 0xFFFF  # 셀 페이로드 한도

DIRECTION_FORWARD = 0
DIRECTION_BACKWARD = 1

HKDF_INFO = b"tunnelprof layer key"
MAX_COUNTER = 0xFFFFFFFFFFFFFFFF


@dataclass
class LayerKey:
    """hop 하나의 대칭 레이어 키와 방향별 nonce 카운터

    카운터는 방향별로 단조 증가하며 (key, nonce) 쌍은 재사용되지 않습니다.
    LayerKey는 한 노드에만 속합니다.
    """

    key: bytes
    send_nonce_counter: int = 0
    recv_nonce_counter: int = 0
    direction: int = DIRECTION_FORWARD
    _aead: ChaCha20Poly1305 = field(init=False, repr=False, compare=False)
    _lock: threading.Lock = field(
        default_factory=threading.Lock, init=False, repr=False, compare=False
    )

    def __post_init__(self) -> None:
        if len(self.key) != KEY_LEN:
            raise ValueError(f"레이어 키는 {KEY_LEN}바이트여야 함: {len(self.key)}")
        self._aead = ChaCha20Poly1305(self.key)

    @classmethod
    def generate(cls) -> "LayerKey":
        """무작위 로컬 키 생성 (0-hop 회로용)"""
        return cls(os.urandom(KEY_LEN))

    def copy(self) -> "LayerKey":
        """같은 키를 가진 새 카운터 상태 (상대 노드 측 키)"""
        return LayerKey(self.key, direction=self.direction)

    def next_send_nonce(self) -> int:
        """다음 송신 카운터 예약"""
        with self._lock:
            counter = self.send_nonce_counter
            if counter > MAX_COUNTER:
                raise OversizeError("nonce 카운터 소진")
            self.send_nonce_counter = counter + 1
            return counter

    def accept_recv_nonce(self, counter: int) -> None:
        """수신 카운터 검증 및 전진

        Raises:
            AuthenticationError: 이미 사용된 카운터
        """
        if counter < self.recv_nonce_counter:
            raise AuthenticationError(
                f"재사용된 nonce: {counter} < {self.recv_nonce_counter}"
            )
        self.recv_nonce_counter = counter + 1

    def aead_nonce(self, counter: int) -> bytes:
        return struct.pack("!B3xQ", self.direction, counter)


@dataclass(frozen=True)
class OnionPayload:
    """남은 레이어 수와 (레이어드) 암호문"""

    layers_remaining: int
    ciphertext: bytes


def max_plaintext_len(layers: int) -> int:
    """layers 개 레이어를 씌울 수 있는 최대 평문 길이"""
    return MAX_ONION_LEN - layers * LAYER_OVERHEAD


def seal_layer(plaintext: bytes, key: LayerKey) -> bytes:
    """레이어 하나 암호화: counter || AEAD(plaintext)"""
    counter = key.next_send_nonce()
    sealed = key._aead.encrypt(key.aead_nonce(counter), plaintext, None)
    return struct.pack("!Q", counter) + sealed


def open_layer(ciphertext: bytes, key: LayerKey) -> bytes:
    """레이어 하나 복호화

    Raises:
        AuthenticationError: 잘못된 키, 손상된 암호문, 재사용된 nonce
    """
    if len(ciphertext) < LAYER_OVERHEAD:
        raise AuthenticationError(f"레이어가 너무 짧음: {len(ciphertext)}바이트")
    (counter,) = struct.unpack_from("!Q", ciphertext)
    try:
        plaintext = key._aead.decrypt(
            key.aead_nonce(counter), ciphertext[NONCE_COUNTER_LEN:], None
        )
    except InvalidTag as e:
        raise AuthenticationError("레이어 인증 실패") from e
    key.accept_recv_nonce(counter)
    return plaintext


@profiled("encrypt_str")
def onion_encrypt(plaintext: bytes, keys: Sequence[LayerKey]) -> OnionPayload:
    """hop 순서의 키 목록으로 레이어드 암호화

    hop 1 레이어가 가장 바깥, hop k 레이어가 가장 안쪽입니다.
    k = 0이면 평문을 그대로 layers_remaining = 0으로 감쌉니다.

    Args:
        plaintext: 원본 데이터
        keys: hop 1..k 순서의 LayerKey 목록

    Returns:
        OnionPayload: layers_remaining = k

    Raises:
        OversizeError: 평문이 레이어 오버헤드 예산을 초과
    """
    limit = max_plaintext_len(len(keys))
    if len(plaintext) > limit:
        raise OversizeError(
            f"평문 길이 {len(plaintext)} > 허용치 {limit} ({len(keys)}개 레이어)"
        )
    ciphertext = bytes(plaintext)
    for key in reversed(keys):
        ciphertext = seal_layer(ciphertext, key)
    return OnionPayload(len(keys), ciphertext)


@profiled("decrypt_str")
def peel_layer(onion: OnionPayload, key: LayerKey) -> OnionPayload:
    """가장 바깥 레이어를 벗김

    Raises:
        NoLayerError: layers_remaining = 0
        AuthenticationError: 잘못된 키 또는 손상된 암호문
    """
    if onion.layers_remaining < 1:
        raise NoLayerError("벗길 레이어가 없음")
    return OnionPayload(onion.layers_remaining - 1, open_layer(onion.ciphertext, key))


# ============================================================================
# 키 합의
# ============================================================================


def derive_layer_key(secret: bytes, salt: bytes | None = None) -> bytes:
    """HKDF-SHA256으로 32바이트 레이어 키 유도"""
    hkdf = HKDF(
        algorithm=hashes.SHA256(),
        length=KEY_LEN,
        salt=salt,
        info=HKDF_INFO,
    )
    return hkdf.derive(secret)


class EphemeralHandshake:
    """X25519 임시 키 합의 (한 번 사용)"""

    PUBLIC_LEN = 32

    def __init__(self) -> None:
        self._private = X25519PrivateKey.generate()
        self.public_bytes = self._private.public_key().public_bytes_raw()

    def complete(self, peer_public: bytes) -> bytes:
        """상대 공개키로 공유 비밀을 계산하고 레이어 키 반환"""
        if len(peer_public) != self.PUBLIC_LEN:
            raise AuthenticationError(f"공개키 길이 오류: {len(peer_public)}")
        try:
            shared = self._private.exchange(X25519PublicKey.from_public_bytes(peer_public))
        except ValueError as e:
            # 저차수 점 (공유 비밀이 0)
            raise AuthenticationError(f"잘못된 공개키: {e}") from e
        return derive_layer_key(shared)


def psk_layer_key(psk: bytes, client_nonce: bytes) -> bytes:
    """사전 공유 키 모드: PSK와 클라이언트 nonce로 레이어 키 유도"""
    return derive_layer_key(psk, salt=client_nonce)
