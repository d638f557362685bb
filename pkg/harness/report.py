"""
리포트 테이블 생성

ScenarioResult를 그래프용 CSV 테이블로 변환합니다.

- RELATIVE: 역할 하나의 함수별 시간 비율, hop 수마다 열 하나 (열 합계 1)
- ABSOLUTE: 총 배타 시간 상위 N개 함수 (초), hop 수마다 열 하나
- GOODPUT: hop 수별 초당 바이트

CSV는 UTF-8, 헤더 행, `\\n` 줄바꿈, 실수는 repr 형식으로 기록되어
같은 결과에서는 항상 같은 바이트가 나옵니다.
"""

import csv
import io
import logging
from pathlib import Path
from typing import Mapping, Sequence

from pydantic import BaseModel, Field

from lib.errors import ReportError
from lib.profiler import CRYPTO_SET, NETWORKING_SET, OTHER_SET, category_of
from lib.types import NodeRole, TableKind

from .results import RoleResult, ScenarioResult

logger = logging.getLogger(__name__)

RELATIVE_FLOOR = 0.01
TOP_N = 20
OTHER_SMALL = "other-small"
CATEGORY_HEADER = "category"
_CATEGORY_ORDER = {CRYPTO_SET: 0, NETWORKING_SET: 1, OTHER_SET: 2}


class ReportRow(BaseModel):
    label: str
    category: str = ""
    values: list[float] = Field(default_factory=list)


class ReportTable(BaseModel):
    """리포트 테이블 하나 (CSV 한 파일)"""

    caption: str
    kind: TableKind
    columns: list[str]
    rows: list[ReportRow] = Field(default_factory=list)
    label_header: str = "label"
    with_category: bool = True

    def column_sums(self) -> list[float]:
        return [sum(row.values[i] for row in self.rows) for i in range(len(self.columns))]

    def labels(self) -> list[str]:
        return [row.label for row in self.rows]

    def to_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        header = [self.label_header]
        if self.with_category:
            header.append(CATEGORY_HEADER)
        writer.writerow(header + self.columns)
        for row in self.rows:
            prefix = [row.label, row.category] if self.with_category else [row.label]
            writer.writerow(prefix + [repr(value) for value in row.values])
        return buffer.getvalue()

    @classmethod
    def from_csv(cls, text: str, kind: TableKind, caption: str = "") -> "ReportTable":
        """to_csv 출력을 다시 테이블로 파싱

        Raises:
            ReportError: 헤더가 없거나 행 길이가 맞지 않음
        """
        rows = list(csv.reader(io.StringIO(text)))
        if not rows:
            raise ReportError("빈 CSV")
        header = rows[0]
        with_category = len(header) > 1 and header[1] == CATEGORY_HEADER
        start = 2 if with_category else 1
        columns = header[start:]

        table_rows = []
        for line_no, row in enumerate(rows[1:], start=2):
            if len(row) != len(header):
                raise ReportError(f"{line_no}행 열 수 불일치: {len(row)} != {len(header)}")
            table_rows.append(
                ReportRow(
                    label=row[0],
                    category=row[1] if with_category else "",
                    values=[float(value) for value in row[start:]],
                )
            )
        return cls(
            caption=caption,
            kind=kind,
            columns=columns,
            rows=table_rows,
            label_header=header[0],
            with_category=with_category,
        )


def hop_column(hops: int) -> str:
    return f"{hops}-hop"


def _cells(
    result: ScenarioResult, role: NodeRole, hop_columns: Sequence[int] | None
) -> list[tuple[int, RoleResult]]:
    role = NodeRole(role)
    if hop_columns is None:
        hop_columns = [hop.hops for hop in result.results if role in hop.roles]
        if not hop_columns:
            raise ReportError(f"결과에 역할 {role.value} 셀이 없음")
    cells = []
    for hops in hop_columns:
        cell = result.cell(hops, role)
        if cell is None:
            raise ReportError(f"결과에 ({hops}, {role.value}) 셀이 없음")
        cells.append((hops, cell))
    return cells


def _sort_key(label: str, category: str) -> tuple[int, int, str]:
    # other-small은 항상 마지막
    return (label == OTHER_SMALL, _CATEGORY_ORDER.get(category, len(_CATEGORY_ORDER)), label)


def emit_relative_table(
    result: ScenarioResult,
    role: NodeRole,
    hop_columns: Sequence[int] | None = None,
    floor: float = RELATIVE_FLOOR,
    taxonomy: Mapping[str, Sequence[str]] | None = None,
) -> ReportTable:
    """역할 하나의 함수별 시간 비율 테이블

    모든 열에서 floor 미만인 함수는 `other-small` 행으로 합칩니다.

    Args:
        result: 실행 결과
        role: 노드 역할
        hop_columns: 열로 사용할 hop 수 (None이면 역할이 있는 모든 hop 수)
        floor: 합치기 기준 비율
        taxonomy: 함수 분류 (None이면 결과에 저장된 분류)

    Raises:
        ReportError: 요청한 (hop, role) 셀이 없거나 총 시간이 0
    """
    taxonomy = taxonomy if taxonomy is not None else result.taxonomy
    cells = _cells(result, role, hop_columns)

    fractions: dict[str, list[float]] = {}
    for column, (hops, cell) in enumerate(cells):
        total = cell.total_seconds
        if total <= 0:
            raise ReportError(f"({hops}, {cell.role.value}) 셀의 총 시간이 0")
        for stat in cell.stats:
            values = fractions.setdefault(stat.name, [0.0] * len(cells))
            values[column] = stat.total_time / total

    rows: list[ReportRow] = []
    small = [0.0] * len(cells)
    folded = 0
    for label, values in fractions.items():
        if max(values) < floor:
            small = [a + b for a, b in zip(small, values)]
            folded += 1
            continue
        rows.append(ReportRow(label=label, category=category_of(label, taxonomy), values=values))
    if folded:
        rows.append(ReportRow(label=OTHER_SMALL, category=OTHER_SET, values=small))
    rows.sort(key=lambda row: _sort_key(row.label, row.category))

    role_value = NodeRole(role).value
    return ReportTable(
        caption=f"Relative {_clock(cells)} time per function of the {role_value} node",
        kind=TableKind.RELATIVE,
        columns=[hop_column(hops) for hops, _ in cells],
        rows=rows,
    )


def emit_absolute_table(
    result: ScenarioResult,
    role: NodeRole,
    hop_columns: Sequence[int] | None = None,
    top_n: int = TOP_N,
    taxonomy: Mapping[str, Sequence[str]] | None = None,
) -> ReportTable:
    """총 배타 시간 상위 top_n개 함수 테이블 (초)

    정렬: 모든 열 합계 내림차순, 같으면 라벨 오름차순

    Raises:
        ReportError: 요청한 (hop, role) 셀이 없음
    """
    taxonomy = taxonomy if taxonomy is not None else result.taxonomy
    cells = _cells(result, role, hop_columns)

    seconds: dict[str, list[float]] = {}
    for column, (_, cell) in enumerate(cells):
        for stat in cell.stats:
            seconds.setdefault(stat.name, [0.0] * len(cells))[column] = stat.total_time

    ranked = sorted(seconds.items(), key=lambda item: (-sum(item[1]), item[0]))[:top_n]
    rows = [
        ReportRow(label=label, category=category_of(label, taxonomy), values=values)
        for label, values in ranked
    ]

    role_value = NodeRole(role).value
    return ReportTable(
        caption=(
            f"Absolute time spent for the top {top_n} functions of the {role_value} node "
            f"({result.config.circuits} circuits)"
        ),
        kind=TableKind.ABSOLUTE,
        columns=[hop_column(hops) for hops, _ in cells],
        rows=rows,
    )


def emit_goodput_table(result: ScenarioResult) -> ReportTable:
    """hop 수별 goodput (`hops,bytes_per_second`)

    goodput이 정의되지 않은 행(에러 행, 전송 없음)은 제외합니다.
    """
    rows = [
        ReportRow(label=str(hop.hops), values=[hop.goodput])
        for hop in result.results
        if hop.ok and hop.goodput is not None
    ]
    return ReportTable(
        caption="Download speed per amount of hops",
        kind=TableKind.GOODPUT,
        columns=["bytes_per_second"],
        rows=rows,
        label_header="hops",
        with_category=False,
    )


def _clock(cells: list[tuple[int, RoleResult]]) -> str:
    for _, cell in cells:
        if cell.stats:
            return cell.stats[0].clock.value.upper()
    return "CPU"


def report_name(kind: TableKind, role: NodeRole, hop_columns: Sequence[int]) -> str:
    """relative_<role>_<hops>.csv / absolute_<role>_<hops>.csv"""
    hops = "-".join(str(h) for h in hop_columns)
    return f"{TableKind(kind).value}_{NodeRole(role).value}_{hops}.csv"


def write_reports(
    result: ScenarioResult,
    out_dir: str | Path,
    floor: float = RELATIVE_FLOOR,
    top_n: int = TOP_N,
    taxonomy: Mapping[str, Sequence[str]] | None = None,
) -> list[Path]:
    """결과에 있는 모든 역할의 relative/absolute 테이블 저장

    Returns:
        list[Path]: 저장한 파일 경로
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    for role in NodeRole:
        hop_columns = [hop.hops for hop in result.results if role in hop.roles]
        if not hop_columns:
            continue
        tables = [emit_absolute_table(result, role, hop_columns, top_n, taxonomy)]
        try:
            tables.insert(0, emit_relative_table(result, role, hop_columns, floor, taxonomy))
        except ReportError as e:
            logger.warning(f"[Report] {role.value} relative 테이블 생략: {e}")
        for table in tables:
            path = out / report_name(table.kind, role, hop_columns)
            path.write_text(table.to_csv(), encoding="utf-8", newline="\n")
            written.append(path)

    logger.info(f"[Report] 리포트 {len(written)}개 저장: {out}")
    return written
