"""
함수별 타이밍 프로파일러

명시적으로 이름 붙인 스코프(`@profiled("encrypt_str")`, `with scope(...)`)의
호출 횟수와 배타(self)/포함(inclusive) 시간을 기록합니다.

설계:
- 인터프리터 트레이싱 없이 명시적 스코프만 측정 (호출 횟수 정확)
- 스레드별 누적기에 기록하고 snapshot 시 병합 (핫 패스에 전역 락 없음)
- 중첩된 스코프의 시간은 부모의 배타 시간에서 제외
- CPU 시계 = 스레드 CPU 시간, WALL 시계 = 단조 시계

사용법:
    ```python
    profiler = Profiler("seed")
    profiler.start(ClockKind.CPU)
    with activate(profiler):
        send_packet(...)
    profiler.stop()
    stats = profiler.snapshot()
    breakdown = categorize(stats)
    ```
"""

import csv
import functools
import io
import logging
import threading
import time
from typing import Any, Callable, Mapping, Sequence, TypeVar

from pydantic import BaseModel

from .errors import ProfilerStateError, UndefinedEstimateError
from .types import ClockKind

logger = logging.getLogger(__name__)

F = TypeVar("F", bound=Callable[..., Any])

# 터널 함수 분류 (crypto / networking, 나머지는 other)
CRYPTO_SET = "crypto"
NETWORKING_SET = "networking"
OTHER_SET = "other"

DEFAULT_TAXONOMY: dict[str, list[str]] = {
    CRYPTO_SET: [
        "encrypt_str",
        "decrypt_str",
        "encode_address",
        "decode_address",
        "crypto_out",
    ],
    NETWORKING_SET: ["send_packet", "relay_packet"],
}

STATS_CSV_HEADER = ["label", "ncalls", "total_seconds", "clock", "category"]


class FunctionStats(BaseModel):
    """함수별 프로파일 레코드"""

    name: str
    ncalls: int
    total_time: float  # 배타 시간 (초)
    inclusive_time: float = 0.0
    clock: ClockKind = ClockKind.CPU


class CategoryBreakdown(BaseModel):
    """crypto / networking / other 시간 비율"""

    crypto_fraction: float = 0.0
    networking_fraction: float = 0.0
    other_fraction: float = 0.0
    crypto_seconds: float = 0.0
    networking_seconds: float = 0.0
    other_seconds: float = 0.0
    defined: bool = False  # 총 시간이 0이면 비율 미정의

    @property
    def total_seconds(self) -> float:
        return self.crypto_seconds + self.networking_seconds + self.other_seconds


class _Accumulator:
    """스레드 하나의 누적 상태"""

    __slots__ = ("generation", "records", "stack")

    def __init__(self, generation: int):
        self.generation = generation
        # label -> [ncalls, exclusive, inclusive]
        self.records: dict[str, list[Any]] = {}
        # [label, start, child_time]
        self.stack: list[list[Any]] = []


class Profiler:
    """시작/정지 가능한 함수별 타이밍 레지스트리"""

    def __init__(self, name: str = "default"):
        """
        Args:
            name: 프로파일러 이름 (로그 및 노드 역할 구분용)
        """
        self.name = name
        self.clock = ClockKind.CPU
        self._timer: Callable[[], float] = time.thread_time
        self._running = False
        self._started = False
        self._generation = 0
        self._local = threading.local()
        self._accumulators: list[_Accumulator] = []
        self._lock = threading.Lock()  # 누적기 등록/병합 전용

    @property
    def running(self) -> bool:
        return self._running

    def start(self, clock: ClockKind = ClockKind.CPU, reset: bool = True) -> None:
        """측정 시작

        Args:
            clock: CPU (스레드 CPU 시간) 또는 WALL (단조 시계)
            reset: True면 이전 기록 초기화, False면 누적
        """
        clock = ClockKind(clock)
        if self._started and not reset and clock != self.clock:
            raise ProfilerStateError(
                f"누적 모드에서 시계 변경 불가: {self.clock.value} -> {clock.value}"
            )
        self.clock = clock
        self._timer = time.thread_time if clock == ClockKind.CPU else time.perf_counter
        if reset or not self._started:
            with self._lock:
                self._generation += 1
                self._accumulators = []
        self._started = True
        self._running = True
        logger.debug(f"[Profiler] {self.name} 시작: clock={clock.value}, reset={reset}")

    def stop(self) -> None:
        """측정 정지 (카운터 고정)"""
        if not self._running:
            raise ProfilerStateError(f"프로파일러 {self.name}가 실행 중이 아님")
        self._running = False
        logger.debug(f"[Profiler] {self.name} 정지")

    def snapshot(self) -> list[FunctionStats]:
        """현재까지의 함수별 통계 (라벨 순 정렬)

        Raises:
            ProfilerStateError: 한 번도 시작하지 않은 경우
        """
        if not self._started:
            raise ProfilerStateError(f"프로파일러 {self.name}가 시작되지 않음")

        merged: dict[str, list[Any]] = {}
        with self._lock:
            accumulators = [
                acc for acc in self._accumulators if acc.generation == self._generation
            ]
        for acc in accumulators:
            for label, record in list(acc.records.items()):
                total = merged.setdefault(label, [0, 0.0, 0.0])
                total[0] += record[0]
                total[1] += record[1]
                total[2] += record[2]

        return [
            FunctionStats(
                name=label,
                ncalls=values[0],
                total_time=max(values[1], 0.0),
                inclusive_time=values[2],
                clock=self.clock,
            )
            for label, values in sorted(merged.items())
        ]

    def _accumulator(self) -> _Accumulator:
        acc: _Accumulator | None = getattr(self._local, "acc", None)
        if acc is None or acc.generation != self._generation:
            acc = _Accumulator(self._generation)
            self._local.acc = acc
            with self._lock:
                self._accumulators.append(acc)
        return acc

    def _begin(self, label: str) -> _Accumulator:
        acc = self._accumulator()
        acc.stack.append([label, self._timer(), 0.0])
        return acc

    def _end(self, acc: _Accumulator) -> None:
        now = self._timer()
        label, started, child = acc.stack.pop()
        if not self._running or acc.generation != self._generation:
            return
        inclusive = now - started
        record = acc.records.get(label)
        if record is None:
            record = acc.records[label] = [0, 0.0, 0.0]
        record[0] += 1
        record[1] += inclusive - child
        record[2] += inclusive
        if acc.stack:
            acc.stack[-1][2] += inclusive


# ============================================================================
# 활성 프로파일러 (스레드별)
# ============================================================================

_default_profiler = Profiler("default")
_active = threading.local()


def current_profiler() -> Profiler:
    """현재 스레드에 활성화된 프로파일러 (없으면 기본 프로파일러)"""
    return getattr(_active, "profiler", None) or _default_profiler


class activate:
    """with 블록 동안 현재 스레드의 기록 대상을 지정"""

    __slots__ = ("_profiler", "_previous")

    def __init__(self, profiler: Profiler | None):
        self._profiler = profiler
        self._previous: Profiler | None = None

    def __enter__(self) -> Profiler | None:
        self._previous = getattr(_active, "profiler", None)
        _active.profiler = self._profiler
        return self._profiler

    def __exit__(self, exc_type, exc_val, exc_tb) -> bool:
        _active.profiler = self._previous
        return False


class scope:
    """이름 붙인 측정 구간 (context manager)"""

    __slots__ = ("label", "_profiler", "_acc")

    def __init__(self, label: str):
        self.label = label
        self._profiler: Profiler | None = None
        self._acc: _Accumulator | None = None

    def __enter__(self) -> "scope":
        profiler = current_profiler()
        if profiler._running:
            self._profiler = profiler
            self._acc = profiler._begin(self.label)
        return self

    def __exit__(self, exc_type, exc_val, exc_tb) -> bool:
        if self._profiler is not None and self._acc is not None:
            self._profiler._end(self._acc)
            self._profiler = None
            self._acc = None
        return False


def profiled(label: str) -> Callable[[F], F]:
    """함수 호출을 label 이름으로 측정하는 데코레이터

    Args:
        label: 프로파일 라벨 (예: "encrypt_str")
    """

    def decorator(fn: F) -> F:
        @functools.wraps(fn)
        def wrapper(*args: Any, **kwargs: Any) -> Any:
            profiler = current_profiler()
            if not profiler._running:
                return fn(*args, **kwargs)
            acc = profiler._begin(label)
            try:
                return fn(*args, **kwargs)
            finally:
                profiler._end(acc)

        return wrapper  # type: ignore[return-value]

    return decorator


def profiler_start(clock: ClockKind = ClockKind.CPU, reset: bool = True) -> None:
    """기본 프로파일러 시작"""
    _default_profiler.start(clock, reset=reset)


def profiler_stop() -> None:
    """기본 프로파일러 정지"""
    _default_profiler.stop()


def profiler_snapshot() -> list[FunctionStats]:
    """기본 프로파일러 스냅샷"""
    return _default_profiler.snapshot()


# ============================================================================
# 분류 및 파이프라인 추정
# ============================================================================


def category_of(label: str, taxonomy: Mapping[str, Sequence[str]] | None = None) -> str:
    """라벨이 속한 함수 집합 이름 (미등록 라벨은 other)"""
    taxonomy = DEFAULT_TAXONOMY if taxonomy is None else taxonomy
    for set_name, labels in taxonomy.items():
        if label in labels:
            return set_name
    return OTHER_SET


def categorize(
    stats: Sequence[FunctionStats],
    taxonomy: Mapping[str, Sequence[str]] | None = None,
) -> CategoryBreakdown:
    """함수별 배타 시간을 crypto / networking / other로 집계

    Args:
        stats: 터널 관련 함수 통계 (필터링된 목록)
        taxonomy: 집합 이름 -> 라벨 목록 (기본: DEFAULT_TAXONOMY)

    Returns:
        CategoryBreakdown: 총합이 0이면 defined=False인 0 분해
    """
    totals = {CRYPTO_SET: 0.0, NETWORKING_SET: 0.0, OTHER_SET: 0.0}
    for stat in stats:
        set_name = category_of(stat.name, taxonomy)
        if set_name not in totals:
            set_name = OTHER_SET
        totals[set_name] += stat.total_time

    grand_total = sum(totals.values())
    if grand_total <= 0:
        return CategoryBreakdown()

    return CategoryBreakdown(
        crypto_fraction=totals[CRYPTO_SET] / grand_total,
        networking_fraction=totals[NETWORKING_SET] / grand_total,
        other_fraction=totals[OTHER_SET] / grand_total,
        crypto_seconds=totals[CRYPTO_SET],
        networking_seconds=totals[NETWORKING_SET],
        other_seconds=totals[OTHER_SET],
        defined=True,
    )


def estimate_pipeline_speedup(breakdown: CategoryBreakdown) -> float:
    """두 단계(crypto → network) 파이프라인의 완전 중첩 속도 향상 한계

    min(crypto, networking) / (crypto + networking + other)

    Raises:
        UndefinedEstimateError: 총 시간이 0인 경우
    """
    crypto = breakdown.crypto_seconds
    networking = breakdown.networking_seconds
    if crypto == networking == breakdown.other_seconds == 0.0:
        # 비율만 채워진 분해도 허용
        crypto = breakdown.crypto_fraction
        networking = breakdown.networking_fraction
        total = crypto + networking + breakdown.other_fraction
    else:
        total = breakdown.total_seconds
    if total <= 0:
        raise UndefinedEstimateError("총 시간이 0이라 속도 향상을 추정할 수 없음")
    return min(crypto, networking) / total


# ============================================================================
# CSV 직렬화
# ============================================================================


def stats_to_csv(
    stats: Sequence[FunctionStats],
    taxonomy: Mapping[str, Sequence[str]] | None = None,
) -> str:
    """통계를 `label,ncalls,total_seconds,clock,category` CSV로 변환"""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(STATS_CSV_HEADER)
    for stat in stats:
        writer.writerow(
            [
                stat.name,
                stat.ncalls,
                repr(stat.total_time),
                stat.clock.value,
                category_of(stat.name, taxonomy),
            ]
        )
    return buffer.getvalue()


def parse_stats_csv(text: str) -> list[FunctionStats]:
    """stats_to_csv 출력을 다시 FunctionStats 목록으로 파싱"""
    reader = csv.DictReader(io.StringIO(text))
    return [
        FunctionStats(
            name=row["label"],
            ncalls=int(row["ncalls"]),
            total_time=float(row["total_seconds"]),
            clock=ClockKind(row["clock"]),
        )
        for row in reader
    ]
