"""
주소 코덱 및 캐시 테스트
"""

import random

import pytest

from lib.address import (
    ADDRESS_LEN,
    Address,
    AddressCache,
    cached_decode_address,
    cached_encode_address,
    decode_address,
    encode_address,
)
from lib.errors import MalformedAddressError

CORNERS = [
    Address("0.0.0.0", 0),
    Address("255.255.255.255", 65535),
    Address("0.0.0.0", 65535),
    Address("255.255.255.255", 0),
]


def random_address(rng: random.Random) -> Address:
    host = ".".join(str(rng.randrange(256)) for _ in range(4))
    return Address(host, rng.randrange(65536))


class TestEncodeAddress:
    """encode_address / decode_address 테스트"""

    @pytest.mark.parametrize(
        "addr, expected",
        [
            (Address("0.0.0.0", 0), "000000000000"),
            (Address("127.0.0.1", 8000), "7f0000011f40"),
            (Address("255.255.255.255", 65535), "ffffffffffff"),
        ],
    )
    def test_encode_layout(self, addr, expected):
        """호스트 4옥텟 + 포트 big-endian"""
        assert encode_address(addr).hex() == expected

    @pytest.mark.parametrize(
        "data, expected",
        [
            ("000000000000", Address("0.0.0.0", 0)),
            ("7f0000011f40", Address("127.0.0.1", 8000)),
        ],
    )
    def test_decode_layout(self, data, expected):
        """encode의 역변환"""
        assert decode_address(bytes.fromhex(data)) == expected

    @pytest.mark.parametrize("length", [0, 5, 7])
    def test_decode_wrong_length(self, length):
        """6바이트가 아니면 에러"""
        with pytest.raises(MalformedAddressError):
            decode_address(b"\x00" * length)

    def test_bijection(self, rng):
        """decode(encode(a)) == a (무작위 + 모서리 주소)"""
        for addr in CORNERS + [random_address(rng) for _ in range(1000)]:
            data = encode_address(addr)
            assert len(data) == ADDRESS_LEN
            assert decode_address(data) == addr


class TestAddressParse:
    """문자열 경계 변환 테스트"""

    def test_parse(self):
        assert Address.parse("10.0.0.5:9000") == Address("10.0.0.5", 9000)
        assert str(Address("10.0.0.5", 9000)) == "10.0.0.5:9000"

    @pytest.mark.parametrize("text", ["10.0.0.5", "10.0.0:80", "::1:80", "1.2.3.4:70000"])
    def test_parse_invalid(self, text):
        """IPv4 4옥텟 / 포트 범위 검증"""
        with pytest.raises(MalformedAddressError):
            Address.parse(text)


class TestAddressCache:
    """주소 캐시 테스트"""

    def test_repeat_hits(self):
        """같은 입력 두 번: 변환 1회, 히트 1회"""
        cache = AddressCache()
        addr = Address("127.0.0.1", 8000)

        first = cached_encode_address(addr, cache)
        second = cached_encode_address(addr, cache)

        assert first == second == encode_address(addr)
        assert cache.conversions == 1
        assert cache.hits == 1

    def test_conversions_bounded_by_distinct(self, rng):
        """1000회 호출, 서로 다른 주소 10개 → 변환 10회"""
        cache = AddressCache()
        pool = [random_address(rng) for _ in range(10)]
        assert len(set(pool)) == 10

        for _ in range(1000):
            cached_encode_address(rng.choice(pool), cache)

        assert cache.conversions == 10
        assert cache.hits == 990

    def test_reverse_lookup_uses_forward_entry(self):
        """encode 결과는 decode 캐시도 채움"""
        cache = AddressCache()
        addr = Address("192.168.0.1", 443)
        data = cache.encode(addr)

        assert cache.decode(data) == addr
        assert cache.conversions == 1

    def test_differential_against_uncached(self, rng):
        """캐시/비캐시 출력이 1만 개 무작위 입력에서 바이트 단위로 일치"""
        cache = AddressCache()
        pool = [random_address(rng) for _ in range(500)]
        distinct: set[Address] = set()

        for _ in range(10_000):
            addr = rng.choice(pool)
            distinct.add(addr)
            data = cached_encode_address(addr, cache)
            assert data == encode_address(addr)
            assert cached_decode_address(data, cache) == decode_address(data)

        assert cache.conversions <= len(distinct)

    def test_malformed_not_cached(self):
        """잘못된 입력은 비캐시와 같은 에러"""
        cache = AddressCache()
        with pytest.raises(MalformedAddressError):
            cache.decode(b"\x01\x02")
        assert len(cache) == 0

    def test_clear(self):
        cache = AddressCache()
        cache.encode(Address("1.2.3.4", 5))
        cache.clear()

        assert len(cache) == 0
        assert cache.conversions == 0
        assert cache.hits == 0
