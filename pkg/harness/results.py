"""
실행 결과 모델

ScenarioResult
 ├─ results: HopResult (hop 수마다 하나)
 │   ├─ roles: NodeRole -> RoleResult (함수별 통계 + 분류 + 호출 횟수)
 │   ├─ 송수신 바이트/패킷, 전송 계층 카운터, 드롭
 │   └─ goodput, 소요 시간, 스트림 해시
 └─ snapshots: 시나리오 snapshot 명령 기록

모든 모델은 pydantic이므로 result.json으로 그대로 직렬화됩니다.
"""

from pydantic import BaseModel, Field

from lib.errors import UndefinedGoodputError
from lib.profiler import CategoryBreakdown, FunctionStats
from lib.transport import TransportStats
from lib.types import NodeRole

from .config import ScenarioConfig


def goodput(nbytes: int, seconds: float) -> float:
    """초당 바이트

    Raises:
        UndefinedGoodputError: seconds가 0 이하

    Examples:
        >>> goodput(5 * 1024 * 1024, 2.0) / (1024 * 1024)
        2.5
    """
    if seconds <= 0:
        raise UndefinedGoodputError(f"전송 시간이 0 이하: {seconds}")
    return nbytes / seconds


class RoleResult(BaseModel):
    """(hop 수, 역할) 셀 하나의 프로파일"""

    role: NodeRole
    nodes: int = 1  # 이 역할을 맡은 노드 수 (relay는 여러 개일 수 있음)
    stats: list[FunctionStats] = Field(default_factory=list)
    breakdown: CategoryBreakdown = Field(default_factory=CategoryBreakdown)
    invocations: dict[str, int] = Field(default_factory=dict)
    drops: dict[str, int] = Field(default_factory=dict)

    def stat(self, label: str) -> FunctionStats | None:
        for stat in self.stats:
            if stat.name == label:
                return stat
        return None

    def mean_inclusive(self, label: str) -> float | None:
        """label의 호출당 평균 포함 시간 (호출이 없으면 None)"""
        stat = self.stat(label)
        if stat is None or stat.ncalls == 0:
            return None
        return stat.inclusive_time / stat.ncalls

    @property
    def total_seconds(self) -> float:
        return sum(stat.total_time for stat in self.stats)


class HopResult(BaseModel):
    """hop 수 하나의 실행 결과"""

    hops: int
    circuits: int = 0
    roles: dict[NodeRole, RoleResult] = Field(default_factory=dict)

    bytes_sent: int = 0
    packets_sent: int = 0
    bytes_received: int = 0
    packets_received: int = 0
    transport: TransportStats = Field(default_factory=TransportStats)
    node_drops: int = 0

    build_seconds: float = 0.0
    transfer_seconds: float = 0.0
    wall_seconds: float = 0.0
    goodput: float | None = None
    sink_throughput: float | None = None  # sink 기준: bytes / (마지막 - 첫 수신)

    sent_digests: list[str] = Field(default_factory=list)
    received_digests: list[str] = Field(default_factory=list)

    error: str | None = None
    failed_hop_index: int | None = None

    @property
    def ok(self) -> bool:
        return self.error is None

    @property
    def dropped_packets(self) -> int:
        """전송 계층 드롭 + 노드 드롭"""
        return self.transport.dropped + self.node_drops

    @property
    def lossless(self) -> bool:
        return self.ok and self.dropped_packets == 0

    def role(self, role: NodeRole) -> RoleResult | None:
        return self.roles.get(NodeRole(role))


class SnapshotCell(BaseModel):
    hops: int
    role: NodeRole
    stats: list[FunctionStats] = Field(default_factory=list)


class SnapshotRecord(BaseModel):
    """시나리오 snapshot 명령 시점의 프로파일"""

    label: str
    offset: float
    elapsed: float  # 실행 시작 기준 실제 시각
    cells: list[SnapshotCell] = Field(default_factory=list)


class ScenarioResult(BaseModel):
    """run_scenario / 시나리오 파일 실행 결과"""

    config: ScenarioConfig
    results: list[HopResult] = Field(default_factory=list)
    snapshots: list[SnapshotRecord] = Field(default_factory=list)
    taxonomy: dict[str, list[str]] | None = None
    wall_seconds: float = 0.0

    def hop(self, hops: int) -> HopResult | None:
        for result in self.results:
            if result.hops == hops:
                return result
        return None

    def cell(self, hops: int, role: NodeRole) -> RoleResult | None:
        result = self.hop(hops)
        return None if result is None else result.role(role)

    @property
    def failed(self) -> bool:
        """에러 행이 하나라도 있으면 True"""
        return any(not result.ok for result in self.results)

    def byte_counts(self) -> list[tuple[int, int, int, int]]:
        """(hops, 송신 바이트, 수신 바이트, 수신 패킷) - 재현성 비교용"""
        return [
            (r.hops, r.bytes_sent, r.bytes_received, r.packets_received) for r in self.results
        ]
