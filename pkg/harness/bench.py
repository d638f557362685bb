"""
파이프라인 송신 벤치마크 (합성 스테이지 비용)

패킷마다 other → crypto → send 스테이지를 고정 시간(sleep)으로 실행하고
순차 실행과 파이프라인 실행(send를 별도 스레드로 분리)의 벽시계 시간을 비교합니다.

측정된 속도 향상 = 1 - t_pipelined / t_sequential
추정 속도 향상   = estimate_pipeline_speedup(순차 실행 프로파일 분류)

crypto 30ms / send 20ms / other 50ms 이면 추정치는 0.2입니다.
"""

import logging
import time

from pydantic import BaseModel

from lib.profiler import (
    CategoryBreakdown,
    Profiler,
    activate,
    categorize,
    estimate_pipeline_speedup,
    profiled,
    scope,
)
from lib.types import ClockKind
from nodes.pipeline import DEFAULT_CAPACITY, SendPipeline

logger = logging.getLogger(__name__)

OTHER_LABEL = "bench_other"


class BenchResult(BaseModel):
    """순차/파이프라인 비교 결과"""

    packets: int
    crypto_ms: float
    send_ms: float
    other_ms: float
    sequential_seconds: float
    pipelined_seconds: float
    measured_speedup: float
    estimated_speedup: float
    breakdown: CategoryBreakdown

    @property
    def error(self) -> float:
        """측정치 - 추정치"""
        return self.measured_speedup - self.estimated_speedup


class SyntheticStages:
    """고정 비용 스테이지 (라벨은 실제 터널 함수와 같은 분류를 따름)"""

    def __init__(self, crypto_ms: float, send_ms: float, other_ms: float):
        for name, value in (("crypto_ms", crypto_ms), ("send_ms", send_ms), ("other_ms", other_ms)):
            if value < 0:
                raise ValueError(f"{name}는 0 이상이어야 함: {value}")
        self.crypto = crypto_ms / 1000
        self.send = send_ms / 1000
        self.other = other_ms / 1000

    def other_stage(self) -> None:
        with scope(OTHER_LABEL):
            time.sleep(self.other)

    @profiled("crypto_out")
    def crypto_stage(self, packet: int) -> int:
        time.sleep(self.crypto)
        return packet

    @profiled("send_packet")
    def send_stage(self, packet: int) -> None:
        time.sleep(self.send)


def run_pipeline_bench(
    crypto_ms: float = 30.0,
    send_ms: float = 20.0,
    other_ms: float = 50.0,
    packets: int = 100,
    capacity: int = DEFAULT_CAPACITY,
) -> BenchResult:
    """순차/파이프라인 실행 시간 측정 및 추정치 비교

    Args:
        crypto_ms: 패킷당 crypto 스테이지 시간
        send_ms: 패킷당 send 스테이지 시간
        other_ms: 패킷당 기타 처리 시간
        packets: 패킷 수 (1 이상)
        capacity: 파이프라인 큐 용량

    Raises:
        ValueError: 잘못된 인자
        UndefinedEstimateError: 모든 스테이지 비용이 0
    """
    if packets < 1:
        raise ValueError(f"packets는 1 이상이어야 함: {packets}")
    stages = SyntheticStages(crypto_ms, send_ms, other_ms)

    # 1. 순차 실행 (WALL 프로파일로 추정치 계산)
    profiler = Profiler("bench")
    profiler.start(ClockKind.WALL)
    started = time.perf_counter()
    with activate(profiler):
        for packet in range(packets):
            stages.other_stage()
            stages.send_stage(stages.crypto_stage(packet))
    sequential = time.perf_counter() - started
    profiler.stop()
    breakdown = categorize(profiler.snapshot())
    estimated = estimate_pipeline_speedup(breakdown)

    # 2. 파이프라인 실행 (send 스테이지는 네트워크 스레드)
    started = time.perf_counter()
    with SendPipeline(stages.send_stage, capacity=capacity, name="bench-pipeline") as pipeline:
        for packet in range(packets):
            stages.other_stage()
            pipeline.submit(stages.crypto_stage(packet))
        pipeline.flush()
    pipelined = time.perf_counter() - started

    result = BenchResult(
        packets=packets,
        crypto_ms=crypto_ms,
        send_ms=send_ms,
        other_ms=other_ms,
        sequential_seconds=sequential,
        pipelined_seconds=pipelined,
        measured_speedup=1.0 - pipelined / sequential,
        estimated_speedup=estimated,
        breakdown=breakdown,
    )
    logger.info(
        f"[Bench] 순차 {sequential:.3f}s, 파이프라인 {pipelined:.3f}s, "
        f"측정 {result.measured_speedup:.1%} / 추정 {estimated:.1%}"
    )
    return result
