"""
IPv4 주소 바이너리 코덱

문제:
- 터널 내부에서 IP 문자열 ↔ 바이너리 변환이 패킷마다 반복되어 CPU 시간을 소모

해결:
- 주소를 6바이트 바이너리(호스트 4옥텟 + 포트 big-endian 2바이트)로 인코딩
- AddressCache로 변환 결과를 캐시 (정방향/역방향 모두)
- 내부 라우팅 상태는 바이너리 형태만 사용하고 문자열은 CLI 경계에서만 변환
"""

import ipaddress
import struct
import threading
from typing import NamedTuple

from .errors import MalformedAddressError
from .profiler import profiled

ADDRESS_FORMAT = "!4sH"
ADDRESS_LEN = struct.calcsize(ADDRESS_FORMAT)  # 6


class Address(NamedTuple):
    """IPv4 호스트와 포트"""

    host: str
    port: int

    @classmethod
    def parse(cls, text: str) -> "Address":
        """"host:port" 문자열에서 생성 (CLI 경계용)

        Examples:
            >>> Address.parse("127.0.0.1:8000")
            Address(host='127.0.0.1', port=8000)
        """
        host, sep, port = text.rpartition(":")
        if not sep:
            raise MalformedAddressError(f"포트 없는 주소: {text}")
        return cls.validated(host, int(port))

    @classmethod
    def validated(cls, host: str, port: int) -> "Address":
        """호스트가 IPv4 4옥텟이고 포트가 0..65535인지 검증 후 생성"""
        try:
            ipaddress.IPv4Address(host)
        except ValueError as e:
            raise MalformedAddressError(f"잘못된 IPv4 호스트: {host}") from e
        if not 0 <= port <= 0xFFFF:
            raise MalformedAddressError(f"포트 범위 초과: {port}")
        return cls(host, port)

    def __str__(self) -> str:
        return f"{self.host}:{self.port}"


@profiled("encode_address")
def encode_address(addr: Address) -> bytes:
    """Address → 6바이트 바이너리

    Examples:
        >>> encode_address(Address("127.0.0.1", 8000)).hex()
        '7f0000011f40'
    """
    return struct.pack(ADDRESS_FORMAT, ipaddress.IPv4Address(addr.host).packed, addr.port)


@profiled("decode_address")
def decode_address(data: bytes) -> Address:
    """6바이트 바이너리 → Address

    Raises:
        MalformedAddressError: 길이가 6바이트가 아닌 경우
    """
    if len(data) != ADDRESS_LEN:
        raise MalformedAddressError(
            f"주소 길이 오류: {len(data)}바이트 (기대값 {ADDRESS_LEN})"
        )
    packed_host, port = struct.unpack(ADDRESS_FORMAT, data)
    return Address(str(ipaddress.IPv4Address(packed_host)), port)


class AddressCache:
    """주소 변환 캐시 (정방향 + 역방향)

    변환은 서로 다른 입력당 최대 한 번만 수행됩니다.
    여러 노드 컨텍스트에서 동시에 사용 가능 (변환 구간만 락 보호).
    """

    def __init__(self) -> None:
        self._encoded: dict[Address, bytes] = {}
        self._decoded: dict[bytes, Address] = {}
        self._lock = threading.Lock()
        self.hits = 0
        self.conversions = 0

    def encode(self, addr: Address) -> bytes:
        """캐시된 encode_address"""
        cached = self._encoded.get(addr)
        if cached is not None:
            self.hits += 1
            return cached
        with self._lock:
            cached = self._encoded.get(addr)
            if cached is not None:
                self.hits += 1
                return cached
            data = encode_address(addr)
            self.conversions += 1
            self._encoded[addr] = data
            self._decoded.setdefault(data, addr)
            return data

    def decode(self, data: bytes) -> Address:
        """캐시된 decode_address (역방향 조회)"""
        data = bytes(data)
        cached = self._decoded.get(data)
        if cached is not None:
            self.hits += 1
            return cached
        with self._lock:
            cached = self._decoded.get(data)
            if cached is not None:
                self.hits += 1
                return cached
            addr = decode_address(data)
            self.conversions += 1
            self._decoded[data] = addr
            self._encoded.setdefault(addr, data)
            return addr

    def clear(self) -> None:
        """캐시 및 카운터 초기화"""
        with self._lock:
            self._encoded.clear()
            self._decoded.clear()
            self.hits = 0
            self.conversions = 0

    def __len__(self) -> int:
        return len(self._encoded)


def cached_encode_address(addr: Address, cache: AddressCache) -> bytes:
    """캐시를 사용한 encode_address (출력은 비캐시 버전과 동일)"""
    return cache.encode(addr)


def cached_decode_address(data: bytes, cache: AddressCache) -> Address:
    """캐시를 사용한 decode_address (출력은 비캐시 버전과 동일)"""
    return cache.decode(data)
