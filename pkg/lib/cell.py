"""
셀 와이어 포맷

    byte 0      magic 0x54
    bytes 1..4  circuit_id (big-endian)
    byte 5      cell_type
    bytes 6..7  payload 길이 (big-endian)
    bytes 8..   payload

UDP 데이터그램은 직렬화된 셀 바이트만 담습니다 (추가 프레이밍 없음).
"""

import struct
from dataclasses import dataclass

from .errors import MalformedCellError
from .types import CellType

CELL_MAGIC = 0x54
CELL_HEADER_FORMAT = "!BIBH"
CELL_HEADER_LEN = struct.calcsize(CELL_HEADER_FORMAT)  # 8
MAX_PAYLOAD_LEN = 0xFFFF
MAX_CIRCUIT_ID = 0xFFFFFFFF


@dataclass(frozen=True)
class Cell:
    """터널 와이어 단위"""

    circuit_id: int
    cell_type: CellType
    payload: bytes = b""

    def __post_init__(self) -> None:
        if not 0 <= self.circuit_id <= MAX_CIRCUIT_ID:
            raise MalformedCellError(f"circuit_id 범위 초과: {self.circuit_id}")
        if len(self.payload) > MAX_PAYLOAD_LEN:
            raise MalformedCellError(f"페이로드 길이 초과: {len(self.payload)}")


def serialize_cell(cell: Cell) -> bytes:
    """Cell → 와이어 바이트

    Examples:
        >>> serialize_cell(Cell(1, CellType.DATA, b"x")).hex()
        '540000000100000178'
    """
    header = struct.pack(
        CELL_HEADER_FORMAT,
        CELL_MAGIC,
        cell.circuit_id,
        int(cell.cell_type),
        len(cell.payload),
    )
    return header + cell.payload


def parse_cell(data: bytes) -> Cell:
    """와이어 바이트 → Cell

    Raises:
        MalformedCellError: 짧은 버퍼, 잘못된 magic, 알 수 없는 타입, 길이 불일치
    """
    if len(data) < CELL_HEADER_LEN:
        raise MalformedCellError(f"헤더보다 짧은 버퍼: {len(data)}바이트")

    magic, circuit_id, raw_type, length = struct.unpack_from(CELL_HEADER_FORMAT, data)
    if magic != CELL_MAGIC:
        raise MalformedCellError(f"잘못된 magic: 0x{magic:02x}")
    try:
        cell_type = CellType(raw_type)
    except ValueError as e:
        raise MalformedCellError(f"알 수 없는 셀 타입: {raw_type}") from e
    if len(data) - CELL_HEADER_LEN != length:
        raise MalformedCellError(
            f"길이 불일치: 헤더 {length}, 실제 {len(data) - CELL_HEADER_LEN}"
        )
    return Cell(circuit_id, cell_type, bytes(data[CELL_HEADER_LEN:]))
