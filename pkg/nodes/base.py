"""
노드 공통 기반

각 노드는 단일 스레드 이벤트 기반 상태 머신입니다.
- step(): 받은편지함을 비블로킹으로 비움 (결정적 라운드로빈 스케줄러용)
- serve(): 독립 스레드에서 수신 루프 실행 (성능 모드)

데이터그램 처리 중 발생한 프로토콜 에러는 전파하지 않고 drops 카운터에 기록합니다.
"""

import logging
import random
import threading
from collections import Counter
from typing import Callable

from lib.address import Address, AddressCache, decode_address, encode_address
from lib.cell import Cell, parse_cell, serialize_cell
from lib.errors import AuthenticationError, TunnelError
from lib.profiler import Profiler, activate, scope
from lib.transport import Datagram, Endpoint
from lib.types import CellType, NodeRole

from .handshake import HandshakeMode

logger = logging.getLogger(__name__)

# drops 카운터 키
DROP_UNKNOWN_CIRCUIT = "unknown_circuit"
DROP_AUTH_FAILURE = "auth_failure"
DROP_MALFORMED = "malformed"
DROP_UNEXPECTED = "unexpected"


class Node:
    """터널 노드 기반 클래스"""

    role: NodeRole

    def __init__(
        self,
        endpoint: Endpoint,
        profiler: Profiler | None = None,
        rng: random.Random | None = None,
        address_cache: AddressCache | None = None,
        handshake_mode: HandshakeMode = HandshakeMode.EPHEMERAL,
        psk: bytes | None = None,
        name: str | None = None,
    ):
        """
        Args:
            endpoint: 바인드된 전송 엔드포인트
            profiler: 이 노드의 측정을 기록할 프로파일러 (역할별로 공유 가능)
            rng: 회로 ID/nonce 생성용 난수 생성기
            address_cache: 주소 변환 캐시 (None이면 매번 변환)
            handshake_mode: EPHEMERAL 또는 PSK
            psk: PSK 모드의 사전 공유 키
            name: 로그용 이름
        """
        self.endpoint = endpoint
        self.profiler = profiler or Profiler(self.role.value)
        self.rng = rng or random.Random()
        self.address_cache = address_cache
        self.handshake_mode = handshake_mode
        self.psk = psk
        self.name = name or f"{self.role.value}@{endpoint.address}"
        self.drops: Counter[str] = Counter()
        # 프로파일러와 독립적으로 센 라벨별 호출 횟수
        self.invocations: Counter[str] = Counter()
        self._count_lock = threading.Lock()

    @property
    def address(self) -> Address:
        return self.endpoint.address

    @property
    def address_bytes(self) -> bytes:
        return self.endpoint.address_bytes

    def count(self, label: str, n: int = 1) -> None:
        """라벨 호출 횟수 기록"""
        if n:
            with self._count_lock:
                self.invocations[label] += n

    def reset_counters(self) -> None:
        with self._count_lock:
            self.invocations.clear()
        self.drops.clear()

    # ========================================================================
    # 주소 변환 (캐시 선택)
    # ========================================================================

    def encode(self, addr: Address) -> bytes:
        if self.address_cache is None:
            self.count("encode_address")
            return encode_address(addr)
        before = self.address_cache.conversions
        data = self.address_cache.encode(addr)
        self.count("encode_address", self.address_cache.conversions - before)
        return data

    def decode(self, data: bytes) -> Address:
        if self.address_cache is None:
            self.count("decode_address")
            return decode_address(data)
        before = self.address_cache.conversions
        try:
            return self.address_cache.decode(data)
        finally:
            self.count("decode_address", self.address_cache.conversions - before)

    # ========================================================================
    # 수신 처리
    # ========================================================================

    def send_cell(self, dest: bytes, cell: Cell) -> None:
        with scope("serialize_cell"):
            data = serialize_cell(cell)
        self.endpoint.send_datagram(dest, data)

    def handle(self, datagram: Datagram) -> None:
        """데이터그램 하나 처리 (예외를 밖으로 내보내지 않음)"""
        with activate(self.profiler):
            try:
                self.on_datagram(datagram)
            except AuthenticationError as e:
                self.drop(DROP_AUTH_FAILURE, f"{type(e).__name__}: {e}")
            except TunnelError as e:
                self.drop(DROP_MALFORMED, f"{type(e).__name__}: {e}")

    def on_datagram(self, datagram: Datagram) -> None:
        """기본 동작: 셀로 파싱해 타입별 핸들러에 전달"""
        with scope("parse_cell"):
            cell = parse_cell(datagram.payload)
        handler = self._handlers().get(cell.cell_type)
        if handler is None:
            self.drop(DROP_UNEXPECTED, f"처리할 수 없는 셀 타입 {cell.cell_type.name}")
            return
        with scope(f"on_{cell.cell_type.name.lower()}"):
            handler(datagram.source, cell)

    def _handlers(self) -> dict[CellType, Callable[[bytes, Cell], None]]:
        return {}

    def drop(self, reason: str, detail: str = "") -> None:
        self.drops[reason] += 1
        logger.debug(f"[{self.role.value.capitalize()}] {self.name} 드롭 ({reason}): {detail}")

    def step(self, max_items: int | None = None) -> int:
        """받은편지함을 비블로킹으로 처리

        Returns:
            int: 처리한 데이터그램 수
        """
        processed = 0
        while max_items is None or processed < max_items:
            datagram = self.endpoint.recv(timeout=0.0)
            if datagram is None:
                break
            try:
                self.handle(datagram)
            finally:
                self.endpoint.task_done()
            processed += 1
        return processed

    def serve(self, stop: threading.Event, poll_interval: float = 0.02) -> None:
        """stop이 설정될 때까지 수신 루프 (스레드 대상 함수)"""
        logger.debug(f"[{self.role.value.capitalize()}] {self.name} 수신 루프 시작")
        while not stop.is_set():
            datagram = self.endpoint.recv(timeout=poll_interval)
            if datagram is None:
                continue
            try:
                self.handle(datagram)
            except Exception as e:
                logger.error(f"[{self.role.value.capitalize()}] {self.name} 처리 실패: {e}")
            finally:
                self.endpoint.task_done()

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.name})"
