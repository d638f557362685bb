"""
Relay / Exit 노드

회로 테이블:
- relay_from_to: (이전 hop 주소, 들어오는 circuit_id) -> RelayTableEntry
- relay_to_from: (다음 hop 주소, 나가는 circuit_id) -> RelayTableEntry (역방향 조회)

나가는 레이블이 없는 엔트리는 이 노드가 회로의 exit임을 뜻합니다.
DATA 셀은 레이어 하나를 벗긴 뒤 레이블을 바꿔 전달하며,
exit은 평문 앞 6바이트 목적지 주소를 읽어 sink로 보냅니다.
"""

import logging
import struct
from dataclasses import dataclass

from lib.address import ADDRESS_LEN
from lib.cell import MAX_CIRCUIT_ID, Cell
from lib.crypto import LayerKey, OnionPayload, peel_layer
from lib.errors import AuthenticationError, MalformedAddressError
from lib.profiler import profiled
from lib.types import CellType, NodeRole

from .base import (
    DROP_AUTH_FAILURE,
    DROP_MALFORMED,
    DROP_UNEXPECTED,
    DROP_UNKNOWN_CIRCUIT,
    Node,
)
from .handshake import server_handshake

logger = logging.getLogger(__name__)

CIRCUIT_ID_FORMAT = "!I"
CIRCUIT_ID_LEN = struct.calcsize(CIRCUIT_ID_FORMAT)


@dataclass
class RelayTableEntry:
    """relay 노드의 회로 하나

    inbound/outbound 레이블은 (6바이트 주소, circuit_id) 쌍입니다.
    """

    inbound: tuple[bytes, int]
    layer_key: LayerKey
    outbound: tuple[bytes, int] | None = None
    extending: bool = False  # 다음 hop의 CREATED 대기 중

    @property
    def is_exit(self) -> bool:
        return self.outbound is None


class RelayNode(Node):
    """relay 및 exit 역할 노드 (역할은 프로파일 구분용)"""

    role = NodeRole.RELAY

    def __init__(self, *args, role: NodeRole = NodeRole.RELAY, **kwargs):
        self.role = role
        super().__init__(*args, **kwargs)
        self.relay_from_to: dict[tuple[bytes, int], RelayTableEntry] = {}
        self.relay_to_from: dict[tuple[bytes, int], RelayTableEntry] = {}

    @property
    def tag(self) -> str:
        return "[Exit]" if self.role == NodeRole.EXIT else "[Relay]"

    def _handlers(self):
        return {
            CellType.DATA: self.relay_packet,
            CellType.CREATE: self.on_create,
            CellType.CREATED: self.on_created,
            CellType.EXTEND: self.on_extend,
            CellType.EXTENDED: self.on_extended,
            CellType.DESTROY: self.on_destroy,
        }

    def _generate_circuit_id(self, next_hop: bytes) -> int:
        # 링크별로 유일해야 함, 충돌 시 재시도
        while True:
            circuit_id = self.rng.randint(1, MAX_CIRCUIT_ID)
            if (next_hop, circuit_id) not in self.relay_to_from:
                return circuit_id

    # ========================================================================
    # 데이터 경로
    # ========================================================================

    @profiled("relay_packet")
    def relay_packet(self, source: bytes, cell: Cell) -> bool:
        """DATA 셀의 레이어 하나를 벗기고 다음 hop 또는 sink로 전달

        회로 길이와 관계없이 패킷당 작업량은 일정합니다.

        Returns:
            bool: 전달했으면 True, 드롭했으면 False
        """
        self.count("relay_packet")
        entry = self.relay_from_to.get((source, cell.circuit_id))
        if entry is None:
            self.drop(DROP_UNKNOWN_CIRCUIT, f"circuit {cell.circuit_id}")
            return False

        self.count("decrypt_str")
        try:
            inner = peel_layer(OnionPayload(1, cell.payload), entry.layer_key)
        except AuthenticationError as e:
            self.drop(DROP_AUTH_FAILURE, str(e))
            return False

        if entry.outbound is None:
            return self.exit_forward(entry, inner.ciphertext)

        next_hop, out_id = entry.outbound
        self.send_cell(next_hop, Cell(out_id, CellType.DATA, inner.ciphertext))
        return True

    def exit_forward(self, entry: RelayTableEntry, plaintext: bytes) -> bool:
        """평문 앞의 목적지 주소를 읽고 나머지 데이터를 sink로 전송"""
        prefix = plaintext[:ADDRESS_LEN]
        try:
            self.decode(prefix)
        except MalformedAddressError as e:
            self.drop(DROP_MALFORMED, str(e))
            return False
        self.send_packet(prefix, entry.inbound[1], plaintext[ADDRESS_LEN:])
        return True

    @profiled("send_packet")
    def send_packet(self, dest: bytes, circuit_id: int, data: bytes) -> None:
        self.count("send_packet")
        self.send_cell(dest, Cell(circuit_id, CellType.DATA, data))

    # ========================================================================
    # 회로 제어
    # ========================================================================

    def on_create(self, source: bytes, cell: Cell) -> None:
        label = (source, cell.circuit_id)
        if label in self.relay_from_to:
            self.drop(DROP_UNEXPECTED, f"중복 CREATE circuit {cell.circuit_id}")
            return
        key, reply = server_handshake(self.handshake_mode, cell.payload, self.psk)
        self.relay_from_to[label] = RelayTableEntry(inbound=label, layer_key=key)
        self.send_cell(source, Cell(cell.circuit_id, CellType.CREATED, reply))
        logger.debug(f"{self.tag} {self.name} 회로 합류: circuit {cell.circuit_id}")

    def on_extend(self, source: bytes, cell: Cell) -> None:
        entry = self.relay_from_to.get((source, cell.circuit_id))
        if entry is None:
            self.drop(DROP_UNKNOWN_CIRCUIT, f"EXTEND circuit {cell.circuit_id}")
            return

        if entry.outbound is not None:
            # 이미 연장된 구간: 다음 hop으로 그대로 전달
            if entry.extending:
                self.drop(DROP_UNEXPECTED, "연장 진행 중 EXTEND")
                return
            next_hop, out_id = entry.outbound
            self.send_cell(next_hop, Cell(out_id, CellType.EXTEND, cell.payload))
            return

        next_hop = cell.payload[:ADDRESS_LEN]
        try:
            self.decode(next_hop)
        except MalformedAddressError as e:
            self.drop(DROP_MALFORMED, str(e))
            return
        out_id = self._generate_circuit_id(next_hop)
        entry.outbound = (next_hop, out_id)
        entry.extending = True
        self.relay_to_from[entry.outbound] = entry
        self.send_cell(next_hop, Cell(out_id, CellType.CREATE, cell.payload[ADDRESS_LEN:]))

    def on_created(self, source: bytes, cell: Cell) -> None:
        entry = self.relay_to_from.get((source, cell.circuit_id))
        if entry is None or not entry.extending:
            self.drop(DROP_UNKNOWN_CIRCUIT, f"CREATED circuit {cell.circuit_id}")
            return
        entry.extending = False
        prev_hop, in_id = entry.inbound
        payload = struct.pack(CIRCUIT_ID_FORMAT, cell.circuit_id) + cell.payload
        self.send_cell(prev_hop, Cell(in_id, CellType.EXTENDED, payload))

    def on_extended(self, source: bytes, cell: Cell) -> None:
        entry = self.relay_to_from.get((source, cell.circuit_id))
        if entry is None:
            self.drop(DROP_UNKNOWN_CIRCUIT, f"EXTENDED circuit {cell.circuit_id}")
            return
        prev_hop, in_id = entry.inbound
        self.send_cell(prev_hop, Cell(in_id, CellType.EXTENDED, cell.payload))

    def on_destroy(self, source: bytes, cell: Cell) -> None:
        entry = self.relay_from_to.pop((source, cell.circuit_id), None)
        if entry is None:
            self.drop(DROP_UNKNOWN_CIRCUIT, f"DESTROY circuit {cell.circuit_id}")
            return
        if entry.outbound is not None:
            self.relay_to_from.pop(entry.outbound, None)
            next_hop, out_id = entry.outbound
            self.send_cell(next_hop, Cell(out_id, CellType.DESTROY))
        logger.debug(f"{self.tag} {self.name} 회로 제거: circuit {cell.circuit_id}")

    def table_size(self) -> int:
        """회로 테이블 엔트리 수"""
        return len(self.relay_from_to)
