"""
데이터그램 전송 추상화

구현:
- InProcessRouter: 프로세스 내 결정적 루프백 (정확히 한 번, 링크별 FIFO, 선택적 지연)
- UdpNetwork: localhost 실제 UDP 소켓 (손실 가능, sent - received로 드롭 계산)

두 구현 모두 같은 API를 제공합니다:
    network.bind(Address) -> Endpoint
    endpoint.send_datagram(dest_bytes, payload)
    endpoint.recv(timeout) -> Datagram | None
    endpoint.task_done()          # 수신한 데이터그램 처리 완료
    network.wait_idle(timeout)    # 모든 데이터그램 처리 완료까지 대기
    network.stats()               # TransportStats

주소는 내부적으로 6바이트 바이너리 형태만 사용합니다.
"""

import logging
import socket
import struct
import threading
import time
from abc import ABC, abstractmethod
from collections import deque
from typing import NamedTuple

from pydantic import BaseModel

from .address import ADDRESS_FORMAT, ADDRESS_LEN, Address
from .errors import BindError, MalformedAddressError, OversizeError
from .types import TransportKind

logger = logging.getLogger(__name__)

MAX_DATAGRAM_LEN = 65507
UDP_RECV_BUFFER = 65535


class Datagram(NamedTuple):
    """수신된 데이터그램"""

    source: bytes  # 6바이트 송신 주소
    payload: bytes
    sent_at: float  # time.monotonic() 기준
    received_at: float


class TransportStats(BaseModel):
    """전송 계층 카운터"""

    sent: int = 0
    delivered: int = 0
    dropped: int = 0


def _check_size(payload: bytes) -> None:
    if len(payload) > MAX_DATAGRAM_LEN:
        raise OversizeError(
            f"데이터그램 크기 초과: {len(payload)} > {MAX_DATAGRAM_LEN}"
        )


class Endpoint(ABC):
    """노드 하나의 데이터그램 엔드포인트"""

    def __init__(self, address: Address, address_bytes: bytes):
        self.address = address
        self.address_bytes = address_bytes

    @abstractmethod
    def send_datagram(self, dest: bytes, payload: bytes) -> None:
        """dest(6바이트 주소)로 payload 전송 (응답 없음)"""

    @abstractmethod
    def recv(self, timeout: float | None = 0.0) -> Datagram | None:
        """데이터그램 하나 수신

        Args:
            timeout: 0이면 즉시 반환, None이면 무한 대기

        Returns:
            Datagram 또는 시간 내 도착한 것이 없으면 None
        """

    @abstractmethod
    def task_done(self) -> None:
        """recv로 받은 데이터그램 처리 완료 통지"""

    def close(self) -> None:
        pass


class Network(ABC):
    """엔드포인트 묶음과 공용 카운터"""

    kind: TransportKind

    def __init__(self) -> None:
        self._cond = threading.Condition()
        self._sent = 0
        self._delivered = 0
        self._dropped = 0
        self._unfinished = 0

    @abstractmethod
    def bind(self, address: Address) -> Endpoint:
        """address에 엔드포인트 바인드 (포트 0이면 자동 할당)

        Raises:
            BindError: 주소 사용 중
        """

    def stats(self) -> TransportStats:
        with self._cond:
            return TransportStats(
                sent=self._sent, delivered=self._delivered, dropped=self._dropped
            )

    @property
    def unfinished(self) -> int:
        """전송됐지만 아직 처리 완료되지 않은 데이터그램 수"""
        return self._unfinished

    def next_delivery_at(self) -> float | None:
        """지연 대기 중인 가장 이른 전달 시각 (없으면 None)"""
        return None

    def wait_idle(self, timeout: float | None = None) -> bool:
        """모든 데이터그램이 처리될 때까지 대기 (queue.Queue.join과 같은 방식)

        Returns:
            bool: 시간 내 유휴 상태가 되면 True
        """
        with self._cond:
            return self._cond.wait_for(lambda: self._unfinished <= 0, timeout)

    def _task_done(self) -> None:
        with self._cond:
            self._unfinished -= 1
            if self._unfinished <= 0:
                self._cond.notify_all()

    def close(self) -> None:
        pass


# ============================================================================
# 프로세스 내 라우터
# ============================================================================


class InProcessEndpoint(Endpoint):
    def __init__(self, router: "InProcessRouter", address: Address, address_bytes: bytes):
        super().__init__(address, address_bytes)
        self._router = router
        self._inbox: deque[tuple[float, bytes, bytes, float]] = deque()
        self._cond = threading.Condition()

    def send_datagram(self, dest: bytes, payload: bytes) -> None:
        _check_size(payload)
        self._router._route(self.address_bytes, bytes(dest), bytes(payload))

    def _enqueue(self, deliver_at: float, source: bytes, payload: bytes, sent_at: float) -> None:
        with self._cond:
            self._inbox.append((deliver_at, source, payload, sent_at))
            self._cond.notify()

    def head_deliver_at(self) -> float | None:
        with self._cond:
            return self._inbox[0][0] if self._inbox else None

    def recv(self, timeout: float | None = 0.0) -> Datagram | None:
        deadline = None if timeout is None else time.monotonic() + timeout
        with self._cond:
            while True:
                now = time.monotonic()
                if self._inbox and self._inbox[0][0] <= now:
                    _, source, payload, sent_at = self._inbox.popleft()
                    break
                if deadline is not None and now >= deadline:
                    return None
                wait = None if deadline is None else deadline - now
                if self._inbox:
                    until_head = self._inbox[0][0] - now
                    wait = until_head if wait is None else min(wait, until_head)
                self._cond.wait(wait)
        self._router._mark_delivered()
        return Datagram(source, payload, sent_at, time.monotonic())

    def task_done(self) -> None:
        self._router._task_done()

    def close(self) -> None:
        self._router._unbind(self.address_bytes)


class InProcessRouter(Network):
    """프로세스 내 데이터그램 라우터

    - 알려진 목적지: 정확히 한 번 전달, 링크별 FIFO
    - 알 수 없는 목적지: 드롭 카운트 (예외 없음)
    - latency > 0: 전달 시각 = 송신 시각 + latency
    """

    kind = TransportKind.INPROC

    def __init__(self, latency: float = 0.0, host: str = "127.0.0.1"):
        super().__init__()
        self.latency = max(latency, 0.0)
        self.host = host
        self._endpoints: dict[bytes, InProcessEndpoint] = {}
        self._next_port = 9000

    def bind(self, address: Address) -> InProcessEndpoint:
        with self._cond:
            if address.port == 0:
                address = self._allocate(address.host)
            data = _pack_address(address)
            if data in self._endpoints:
                raise BindError(f"이미 사용 중인 주소: {address}")
            endpoint = InProcessEndpoint(self, address, data)
            self._endpoints[data] = endpoint
        logger.debug(f"[Transport] inproc 바인드: {address}")
        return endpoint

    def _allocate(self, host: str) -> Address:
        while True:
            candidate = Address(host, self._next_port)
            self._next_port += 1
            if _pack_address(candidate) not in self._endpoints:
                return candidate

    def _unbind(self, data: bytes) -> None:
        with self._cond:
            self._endpoints.pop(data, None)

    def _route(self, source: bytes, dest: bytes, payload: bytes) -> None:
        with self._cond:
            self._sent += 1
            endpoint = self._endpoints.get(dest)
            if endpoint is None:
                self._dropped += 1
                logger.debug(f"[Transport] 알 수 없는 목적지로 드롭: {dest.hex()}")
                return
            self._unfinished += 1
            sent_at = time.monotonic()
            # 엔드포인트 락도 라우터 락 안에서 잡아 링크별 순서 보장
            endpoint._enqueue(sent_at + self.latency, source, payload, sent_at)

    def _mark_delivered(self) -> None:
        with self._cond:
            self._delivered += 1

    def next_delivery_at(self) -> float | None:
        with self._cond:
            endpoints = list(self._endpoints.values())
        pending = [t for t in (ep.head_deliver_at() for ep in endpoints) if t is not None]
        return min(pending) if pending else None


# ============================================================================
# UDP (localhost)
# ============================================================================


class UdpEndpoint(Endpoint):
    def __init__(self, network: "UdpNetwork", sock: socket.socket, address: Address):
        super().__init__(address, _pack_address(address))
        self._network = network
        self._sock = sock
        self._peers: dict[bytes, tuple[str, int]] = {}
        self._sources: dict[tuple[str, int], bytes] = {}

    def send_datagram(self, dest: bytes, payload: bytes) -> None:
        _check_size(payload)
        peer = self._peers.get(dest)
        if peer is None:
            peer = self._peers[bytes(dest)] = _unpack_address(dest)
        self._network._count_sent()
        try:
            self._sock.sendto(payload, peer)
        except OSError as e:
            logger.debug(f"[Transport] UDP 전송 실패 {peer}: {e}")

    def recv(self, timeout: float | None = 0.0) -> Datagram | None:
        self._sock.settimeout(timeout)
        try:
            payload, peer = self._sock.recvfrom(UDP_RECV_BUFFER)
        except (BlockingIOError, TimeoutError, socket.timeout):
            return None
        except OSError as e:
            logger.debug(f"[Transport] UDP 수신 오류: {e}")
            return None
        now = time.monotonic()
        source = self._sources.get(peer)
        if source is None:
            source = self._sources[peer] = _pack_address(Address(*peer))
        self._network._count_received()
        return Datagram(source, payload, now, now)

    def task_done(self) -> None:
        self._network._task_done()

    def close(self) -> None:
        self._sock.close()


class UdpNetwork(Network):
    """localhost UDP 소켓 묶음

    손실을 알 수 없으므로 drop = sent - delivered로 계산합니다.
    wait_idle은 손실이 있으면 타임아웃까지 대기합니다.
    """

    kind = TransportKind.UDP

    def __init__(self, host: str = "127.0.0.1"):
        super().__init__()
        self.host = host
        self._endpoints: list[UdpEndpoint] = []

    def bind(self, address: Address) -> UdpEndpoint:
        sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        try:
            sock.bind((address.host, address.port))
        except OSError as e:
            sock.close()
            raise BindError(f"UDP 바인드 실패 {address}: {e}") from e
        host, port = sock.getsockname()
        endpoint = UdpEndpoint(self, sock, Address(host, port))
        with self._cond:
            self._endpoints.append(endpoint)
        logger.debug(f"[Transport] UDP 바인드: {endpoint.address}")
        return endpoint

    def _count_sent(self) -> None:
        with self._cond:
            self._sent += 1
            self._unfinished += 1

    def _count_received(self) -> None:
        with self._cond:
            self._delivered += 1

    def stats(self) -> TransportStats:
        with self._cond:
            return TransportStats(
                sent=self._sent,
                delivered=self._delivered,
                dropped=self._sent - self._delivered,
            )

    def close(self) -> None:
        with self._cond:
            endpoints, self._endpoints = self._endpoints, []
        for endpoint in endpoints:
            endpoint.close()


def create_network(
    kind: TransportKind, latency: float = 0.0, host: str = "127.0.0.1"
) -> Network:
    """설정에 맞는 Network 생성

    Args:
        kind: INPROC 또는 UDP
        latency: 링크 지연 (초, INPROC 전용)
        host: 엔드포인트 호스트
    """
    if TransportKind(kind) == TransportKind.UDP:
        if latency > 0:
            logger.warning("[Transport] UDP 전송에서는 링크 지연 설정이 무시됨")
        return UdpNetwork(host)
    return InProcessRouter(latency=latency, host=host)


def _pack_address(address: Address) -> bytes:
    return struct.pack(ADDRESS_FORMAT, socket.inet_aton(address.host), address.port)


def _unpack_address(data: bytes) -> tuple[str, int]:
    if len(data) != ADDRESS_LEN:
        raise MalformedAddressError(f"잘못된 목적지 주소 길이: {len(data)}")
    packed, port = struct.unpack(ADDRESS_FORMAT, data)
    return socket.inet_ntoa(packed), port
