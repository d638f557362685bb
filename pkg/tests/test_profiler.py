"""
프로파일러 테스트

호출 횟수 정확성, 배타/포함 시간, 분류, 파이프라인 추정.
"""

import threading
import time

import pytest

from lib.errors import ProfilerStateError, UndefinedEstimateError
from lib.profiler import (
    CategoryBreakdown,
    FunctionStats,
    Profiler,
    activate,
    categorize,
    category_of,
    estimate_pipeline_speedup,
    parse_stats_csv,
    profiled,
    profiler_snapshot,
    profiler_start,
    profiler_stop,
    scope,
    stats_to_csv,
)
from lib.types import ClockKind


@profiled("leaf")
def leaf() -> int:
    return sum(range(200))


@profiled("outer")
def outer() -> None:
    leaf()
    leaf()


def stats_by_name(profiler: Profiler) -> dict[str, FunctionStats]:
    return {stat.name: stat for stat in profiler.snapshot()}


def stats(**seconds: float) -> list[FunctionStats]:
    return [FunctionStats(name=name, ncalls=1, total_time=value) for name, value in seconds.items()]


class TestProfilerLifecycle:
    """start / stop / snapshot 테스트"""

    def test_exact_call_count(self):
        """start, 5회 호출, stop → ncalls 정확히 5"""
        profiler = Profiler("test")
        profiler.start()
        with activate(profiler):
            for _ in range(5):
                leaf()
        profiler.stop()

        assert stats_by_name(profiler)["leaf"].ncalls == 5

    def test_calls_while_stopped_not_recorded(self):
        profiler = Profiler("test")
        profiler.start()
        with activate(profiler):
            leaf()
            profiler.stop()
            leaf()
            leaf()

        assert stats_by_name(profiler)["leaf"].ncalls == 1

    def test_stop_without_start(self):
        """실행 중이 아닐 때 stop → 상태 에러"""
        with pytest.raises(ProfilerStateError):
            Profiler("idle").stop()

    def test_snapshot_before_start(self):
        with pytest.raises(ProfilerStateError):
            Profiler("idle").snapshot()

    def test_reset_clears_records(self):
        profiler = Profiler("test")
        profiler.start()
        with activate(profiler):
            leaf()
        profiler.stop()

        profiler.start(reset=True)
        with activate(profiler):
            leaf()
        profiler.stop()

        assert stats_by_name(profiler)["leaf"].ncalls == 1

    def test_accumulate_without_reset(self):
        profiler = Profiler("test")
        profiler.start()
        with activate(profiler):
            leaf()
        profiler.stop()

        profiler.start(reset=False)
        with activate(profiler):
            leaf()
        profiler.stop()

        assert stats_by_name(profiler)["leaf"].ncalls == 2

    def test_accumulate_clock_change_rejected(self):
        """누적 모드에서 시계 변경 불가"""
        profiler = Profiler("test")
        profiler.start(ClockKind.CPU)
        profiler.stop()
        with pytest.raises(ProfilerStateError):
            profiler.start(ClockKind.WALL, reset=False)

    def test_snapshot_sorted_by_label(self):
        profiler = Profiler("test")
        profiler.start()
        with activate(profiler):
            with scope("zeta"):
                pass
            with scope("alpha"):
                pass
        profiler.stop()

        assert [stat.name for stat in profiler.snapshot()] == ["alpha", "zeta"]

    def test_inactive_profiler_ignored(self):
        """활성화되지 않은 프로파일러에는 기록되지 않음"""
        profiler = Profiler("test")
        profiler.start()
        leaf()
        profiler.stop()
        assert profiler.snapshot() == []

    def test_default_profiler(self):
        """모듈 수준 기본 프로파일러"""
        profiler_start(ClockKind.WALL)
        try:
            leaf()
        finally:
            profiler_stop()
        snapshot = {stat.name: stat for stat in profiler_snapshot()}
        assert snapshot["leaf"].ncalls == 1
        assert snapshot["leaf"].clock == ClockKind.WALL


class TestNestedTiming:
    """중첩 스코프의 배타/포함 시간"""

    def test_exclusive_sums_to_inclusive(self):
        """A 배타 + B 배타 = A 포함"""
        profiler = Profiler("nested")
        profiler.start(ClockKind.WALL)
        with activate(profiler):
            for _ in range(20):
                outer()
        profiler.stop()

        stats = stats_by_name(profiler)
        assert stats["outer"].ncalls == 20
        assert stats["leaf"].ncalls == 40
        assert stats["outer"].total_time + stats["leaf"].total_time == pytest.approx(
            stats["outer"].inclusive_time, abs=1e-6
        )
        assert stats["leaf"].inclusive_time == pytest.approx(stats["leaf"].total_time)

    def test_wall_clock_counts_sleep(self):
        profiler = Profiler("wall")
        profiler.start(ClockKind.WALL)
        with activate(profiler), scope("sleep"):
            time.sleep(0.02)
        profiler.stop()

        assert stats_by_name(profiler)["sleep"].total_time >= 0.015

    def test_threads_merged(self):
        """스레드별 누적기는 snapshot에서 합쳐짐"""
        profiler = Profiler("threads")
        profiler.start()

        def work():
            with activate(profiler):
                for _ in range(100):
                    leaf()

        threads = [threading.Thread(target=work) for _ in range(4)]
        for thread in threads:
            thread.start()
        for thread in threads:
            thread.join()
        profiler.stop()

        assert stats_by_name(profiler)["leaf"].ncalls == 400


class TestCategorize:
    """crypto / networking / other 분류 테스트"""

    def test_seeder_zero_hop_breakdown(self):
        """0-hop seed 예시 → crypto 0.44, networking 0.13"""
        breakdown = categorize(
            stats(
                encrypt_str=0.18,
                encode_address=0.06,
                decode_address=0.08,
                crypto_out=0.12,
                send_packet=0.13,
                other=0.43,
            )
        )
        assert breakdown.defined
        assert breakdown.crypto_fraction == pytest.approx(0.44)
        assert breakdown.networking_fraction == pytest.approx(0.13)
        assert breakdown.other_fraction == pytest.approx(0.43)

    def test_exit_breakdown(self):
        """exit 예시 → crypto 0.20, networking 0.19"""
        breakdown = categorize(
            stats(
                decrypt_str=0.15,
                decode_address=0.05,
                send_packet=0.08,
                relay_packet=0.11,
                other=0.61,
            )
        )
        assert breakdown.crypto_fraction == pytest.approx(0.20)
        assert breakdown.networking_fraction == pytest.approx(0.19)

    def test_single_function(self):
        breakdown = categorize(stats(relay_packet=0.5))
        assert breakdown.networking_fraction == 1.0
        assert breakdown.crypto_fraction == 0.0

    def test_empty_undefined(self):
        """빈 통계 → 0 분해, 비율 미정의"""
        breakdown = categorize([])
        assert not breakdown.defined
        assert breakdown.total_seconds == 0.0

    def test_custom_taxonomy(self):
        taxonomy = {"crypto": ["hash"], "networking": []}
        assert category_of("hash", taxonomy) == "crypto"
        assert category_of("encrypt_str", taxonomy) == "other"
        assert categorize(stats(hash=1.0, encrypt_str=1.0), taxonomy).crypto_fraction == 0.5

    def test_unknown_set_counts_as_other(self):
        """taxonomy의 추가 집합은 other로 합산"""
        taxonomy = {"crypto": ["a"], "networking": ["b"], "storage": ["c"]}
        breakdown = categorize(stats(a=1.0, b=1.0, c=2.0), taxonomy)
        assert breakdown.other_fraction == pytest.approx(0.5)


class TestEstimatePipelineSpeedup:
    """min(crypto, networking) / total"""

    @pytest.mark.parametrize(
        "fractions, expected",
        [
            ((0.5, 0.5, 0.0), 0.5),
            ((0.44, 0.13, 0.43), 0.13),
            ((0.20, 0.19, 0.61), 0.19),
        ],
    )
    def test_estimate(self, fractions, expected):
        crypto, networking, other = fractions
        breakdown = CategoryBreakdown(
            crypto_fraction=crypto,
            networking_fraction=networking,
            other_fraction=other,
            defined=True,
        )
        assert estimate_pipeline_speedup(breakdown) == pytest.approx(expected)

    def test_from_seconds(self):
        breakdown = categorize(stats(crypto_out=3.0, send_packet=2.0, other=5.0))
        assert estimate_pipeline_speedup(breakdown) == pytest.approx(0.2)

    def test_zero_total(self):
        with pytest.raises(UndefinedEstimateError):
            estimate_pipeline_speedup(CategoryBreakdown())


class TestStatsCsv:
    """함수별 통계 CSV 테스트"""

    def test_header_and_category(self):
        text = stats_to_csv(stats(encrypt_str=0.25, serialize_cell=0.5))
        lines = text.splitlines()
        assert lines[0] == "label,ncalls,total_seconds,clock,category"
        assert lines[1] == "encrypt_str,1,0.25,cpu,crypto"
        assert lines[2] == "serialize_cell,1,0.5,cpu,other"

    def test_parse_back(self):
        original = stats(send_packet=0.125, relay_packet=1e-7)
        parsed = parse_stats_csv(stats_to_csv(original))
        assert [(s.name, s.ncalls, s.total_time) for s in parsed] == [
            (s.name, s.ncalls, s.total_time) for s in original
        ]
