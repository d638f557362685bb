"""
셀 와이어 포맷 테스트
"""

import pytest

from lib.cell import (
    CELL_HEADER_LEN,
    CELL_MAGIC,
    MAX_CIRCUIT_ID,
    Cell,
    parse_cell,
    serialize_cell,
)
from lib.errors import MalformedCellError
from lib.types import CellType


class TestSerializeCell:
    """serialize_cell 테스트"""

    def test_data_cell_layout(self):
        """DATA 셀, 회로 1, 페이로드 "x" """
        data = serialize_cell(Cell(1, CellType.DATA, b"x"))
        assert data == bytes([0x54, 0, 0, 0, 1, 0, 0, 1, 0x78])

    def test_empty_payload(self):
        """빈 페이로드는 헤더만"""
        data = serialize_cell(Cell(7, CellType.DESTROY))
        assert len(data) == CELL_HEADER_LEN
        assert data[0] == CELL_MAGIC
        assert data[5] == CellType.DESTROY

    @pytest.mark.parametrize("circuit_id", [-1, MAX_CIRCUIT_ID + 1])
    def test_circuit_id_range(self, circuit_id):
        """circuit_id는 부호 없는 32비트"""
        with pytest.raises(MalformedCellError):
            Cell(circuit_id, CellType.DATA)


class TestParseCell:
    """parse_cell 테스트"""

    @pytest.mark.parametrize("cell_type", list(CellType))
    def test_round_trip(self, cell_type):
        """모든 셀 타입 직렬화 왕복"""
        cell = Cell(0xDEADBEEF, cell_type, b"payload")
        assert parse_cell(serialize_cell(cell)) == cell

    def test_short_buffer(self):
        """헤더보다 짧은 버퍼"""
        with pytest.raises(MalformedCellError, match="짧은"):
            parse_cell(bytes.fromhex("54000000"))

    def test_bad_magic(self):
        data = bytearray(serialize_cell(Cell(1, CellType.DATA, b"x")))
        data[0] = 0x55
        with pytest.raises(MalformedCellError, match="magic"):
            parse_cell(bytes(data))

    def test_unknown_type(self):
        data = bytearray(serialize_cell(Cell(1, CellType.DATA, b"x")))
        data[5] = 0x7F
        with pytest.raises(MalformedCellError, match="타입"):
            parse_cell(bytes(data))

    @pytest.mark.parametrize("delta", [-1, 1])
    def test_length_mismatch(self, delta):
        """헤더 길이와 실제 페이로드 길이가 다르면 에러"""
        data = serialize_cell(Cell(1, CellType.DATA, b"xyz"))
        data = data[:-1] if delta < 0 else data + b"!"
        with pytest.raises(MalformedCellError, match="길이 불일치"):
            parse_cell(data)
