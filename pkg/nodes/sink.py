"""
Sink 노드

받은 데이터를 세고 즉시 버립니다. 응답은 보내지 않습니다.
"""

import hashlib
import logging
import time
from dataclasses import dataclass, field

from lib.cell import parse_cell
from lib.errors import MalformedCellError, UndefinedGoodputError
from lib.profiler import profiled
from lib.transport import Datagram
from lib.types import CellType, NodeRole

from .base import DROP_MALFORMED, DROP_UNEXPECTED, Node

logger = logging.getLogger(__name__)


@dataclass
class SinkCounters:
    """수신 바이트/패킷 카운터"""

    bytes_received: int = 0
    packets_received: int = 0
    first_receipt: float | None = None
    last_receipt: float | None = None

    def record(self, nbytes: int, at: float | None = None) -> None:
        at = time.monotonic() if at is None else at
        self.bytes_received += nbytes
        self.packets_received += 1
        if self.first_receipt is None:
            self.first_receipt = at
        self.last_receipt = at

    def throughput(self) -> float:
        """bytes_received / (last - first) 초당 바이트

        Raises:
            UndefinedGoodputError: 수신 구간 길이가 0
        """
        if self.first_receipt is None or self.last_receipt is None:
            raise UndefinedGoodputError("수신한 패킷이 없음")
        duration = self.last_receipt - self.first_receipt
        if duration <= 0:
            raise UndefinedGoodputError("수신 구간 길이가 0")
        return self.bytes_received / duration


@dataclass
class StreamDigest:
    """(송신 주소, circuit_id) 스트림 하나의 누적 해시"""

    nbytes: int = 0
    packets: int = 0
    _hash: "hashlib._Hash" = field(default_factory=hashlib.sha256, repr=False)

    def update(self, data: bytes) -> None:
        self._hash.update(data)
        self.nbytes += len(data)
        self.packets += 1

    def hexdigest(self) -> str:
        return self._hash.hexdigest()


class SinkNode(Node):
    role = NodeRole.SINK

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.counters = SinkCounters()
        self.streams: dict[tuple[bytes, int], StreamDigest] = {}

    def on_datagram(self, datagram: Datagram) -> None:
        self.sink_receive(datagram)

    @profiled("sink_receive")
    def sink_receive(self, datagram: Datagram) -> SinkCounters:
        """DATA 셀의 페이로드 길이를 세고 버림"""
        self.count("sink_receive")
        try:
            cell = parse_cell(datagram.payload)
        except MalformedCellError as e:
            self.drop(DROP_MALFORMED, str(e))
            return self.counters
        if cell.cell_type != CellType.DATA:
            self.drop(DROP_UNEXPECTED, cell.cell_type.name)
            return self.counters

        self.counters.record(len(cell.payload), datagram.received_at)
        key = (datagram.source, cell.circuit_id)
        stream = self.streams.get(key)
        if stream is None:
            stream = self.streams[key] = StreamDigest()
        stream.update(cell.payload)
        return self.counters

    def stream_digests(self) -> list[str]:
        """스트림별 해시 (정렬) - 송신 측 해시 목록과 비교용"""
        return sorted(stream.hexdigest() for stream in self.streams.values())

    def reset(self) -> None:
        self.counters = SinkCounters()
        self.streams.clear()
