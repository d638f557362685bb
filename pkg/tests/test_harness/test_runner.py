"""
실험 실행기 테스트
"""

import json
import logging
from unittest.mock import Mock, patch

import pytest

from harness.config import ScenarioConfig
from harness.results import HopResult, RoleResult, ScenarioResult, goodput
from harness.runner import (
    HopRun,
    check_seed_trend,
    measure_goodput,
    packet_sizes,
    roles_for,
    run_hop,
    run_scenario,
    run_scenario_script,
    write_results,
)
from harness.scenario import parse_scenario
from lib.errors import BuildFailureError, UndefinedGoodputError
from lib.profiler import FunctionStats
from lib.types import ExecutionMode, NodeRole, TransportKind
from nodes import SeedNode


def small_config(**overrides) -> ScenarioConfig:
    """회로 2개, 회로당 4 KiB (256바이트 × 16)"""
    base = {
        "hop_counts": [0, 1, 2, 3],
        "circuits": 2,
        "payload_bytes": 256,
        "total_bytes_per_run": 4096,
        "deterministic_keys": True,
        "rng_seed": 7,
    }
    base.update(overrides)
    return ScenarioConfig.build(base)


def seed_result(hops: int, seconds: float) -> HopResult:
    stats = [FunctionStats(name="send_packet", ncalls=1, total_time=seconds)]
    return HopResult(hops=hops, roles={NodeRole.SEED: RoleResult(role=NodeRole.SEED, stats=stats)})


class TestHelpers:
    @pytest.mark.parametrize(
        "hops, roles",
        [
            (0, [NodeRole.SEED]),
            (1, [NodeRole.SEED, NodeRole.EXIT, NodeRole.SINK]),
            (3, [NodeRole.SEED, NodeRole.RELAY, NodeRole.EXIT, NodeRole.SINK]),
        ],
    )
    def test_roles_for(self, hops, roles):
        assert roles_for(hops) == roles

    @pytest.mark.parametrize(
        "total, payload, expected",
        [(1024, 256, [256] * 4), (1000, 256, [256, 256, 256, 232]), (0, 256, []), (10, 0, [])],
    )
    def test_packet_sizes(self, total, payload, expected):
        assert packet_sizes(total, payload) == expected

    def test_goodput(self):
        """5 MiB / 2.0초 → 2.5 MiB/s"""
        assert goodput(5 * 1024 * 1024, 2.0) == 2.5 * 1024 * 1024

    def test_goodput_zero_duration(self):
        with pytest.raises(UndefinedGoodputError):
            goodput(100, 0.0)


class TestHopRun:
    """HopRun 토폴로지 테스트"""

    @pytest.mark.parametrize("hops, node_count", [(0, 1), (1, 3), (2, 4), (3, 5)])
    def test_topology(self, hops, node_count):
        with HopRun(small_config(), hops) as run:
            assert len(run.nodes) == node_count
            assert len(run.path) == hops
            assert len(run.nodes_for(NodeRole.RELAY)) == max(hops - 1, 0)

    def test_relays_share_role_profiler(self):
        """같은 역할의 노드는 프로파일러 하나를 공유"""
        with HopRun(small_config(), 3) as run:
            first, second = run.relays
            assert first.profiler is second.profiler
            assert run.exit.profiler is not first.profiler


class TestRunHop:
    """run_hop 테스트"""

    def test_zero_hop_seeder_stats(self):
        """0-hop: seed만, encrypt_str와 crypto_out 모두 기록"""
        result = run_hop(small_config(), 0)

        assert list(result.roles) == [NodeRole.SEED]
        seed = result.roles[NodeRole.SEED]
        assert seed.stat("encrypt_str").ncalls == 2 * 2 * 16
        assert seed.stat("crypto_out").ncalls == 2 * 16
        assert seed.stat("decrypt_str").ncalls == 2 * 16
        assert result.bytes_received == result.bytes_sent == 2 * 4096
        assert result.lossless
        assert result.sent_digests == result.received_digests

    @pytest.mark.parametrize("hops", [1, 2, 3])
    def test_bytes_conserved(self, hops):
        result = run_hop(small_config(), hops)

        assert result.ok
        assert result.circuits == 2
        assert result.packets_sent == result.packets_received == 32
        assert result.bytes_received == 2 * 4096
        assert result.sent_digests == result.received_digests
        assert result.transport.dropped == 0
        assert result.goodput is not None and result.goodput > 0

    def test_invocations_match_profile(self):
        result = run_hop(small_config(), 3)
        for role, cell in result.roles.items():
            for stat in cell.stats:
                if stat.name in cell.invocations:
                    assert stat.ncalls == cell.invocations[stat.name], (role, stat.name)

    def test_build_failure_row(self):
        """빌드 실패 → 에러 행 (예외 전파 없음)"""
        failure = BuildFailureError("hop 2 타임아웃", hop_index=2)
        with patch.object(SeedNode, "create_circuit", side_effect=failure):
            result = run_hop(small_config(), 2)

        assert not result.ok
        assert result.failed_hop_index == 2
        assert result.packets_sent == 0
        assert result.goodput is None

    def test_pipelined_equivalent(self):
        sequential = run_hop(small_config(), 2)
        pipelined = run_hop(small_config(pipelined=True, queue_capacity=4), 2)

        assert pipelined.bytes_received == sequential.bytes_received
        assert pipelined.received_digests == sequential.received_digests

    def test_concurrent_circuits(self):
        """회로를 번갈아 보내도 회로별 순서와 총량 유지"""
        serial = run_hop(small_config(), 1)
        interleaved = run_hop(small_config(concurrent_circuits=True), 1)
        assert interleaved.bytes_received == serial.bytes_received
        assert interleaved.received_digests == interleaved.sent_digests

    def test_threaded_execution(self):
        result = run_hop(small_config(execution=ExecutionMode.THREADED), 2)
        assert result.bytes_received == 2 * 4096
        assert result.lossless

    def test_cached_addresses(self):
        """캐시 사용 → seed의 주소 변환은 서로 다른 주소 수만큼"""
        result = run_hop(small_config(cache_addresses=True), 3)
        seed = result.roles[NodeRole.SEED]
        assert seed.invocations["encode_address"] == 4
        assert seed.stat("encode_address").ncalls == 4

    def test_udp_transport(self):
        config = small_config(transport=TransportKind.UDP, circuits=1, total_bytes_per_run=2048)
        result = run_hop(config, 1)
        assert result.ok
        assert result.transport.sent >= result.packets_sent
        assert result.bytes_received <= result.bytes_sent

    def test_udp_matches_inproc(self):
        """무손실 실행: UDP와 프로세스 내 전송이 같은 바이트 수와 스트림 해시"""
        inproc = run_hop(small_config(circuits=1, total_bytes_per_run=2048), 2)
        udp = run_hop(
            small_config(transport=TransportKind.UDP, circuits=1, total_bytes_per_run=2048), 2
        )

        assert inproc.lossless and udp.lossless
        assert udp.sent_digests == inproc.sent_digests
        assert udp.received_digests == inproc.received_digests == inproc.sent_digests
        assert udp.bytes_received == inproc.bytes_received == 2048

    def test_sink_throughput_recorded(self):
        result = run_hop(small_config(), 1)
        assert result.sink_throughput is not None and result.sink_throughput > 0


class TestRunScenario:
    """run_scenario 테스트"""

    def test_all_hops(self):
        result = run_scenario(small_config())

        assert [r.hops for r in result.results] == [0, 1, 2, 3]
        assert not result.failed
        assert result.cell(3, NodeRole.RELAY).nodes == 2
        assert result.cell(0, NodeRole.EXIT) is None

    def test_deterministic_repeat(self):
        """같은 시드, 결정적 모드 → 같은 바이트 수와 스트림 해시"""
        first = run_scenario(small_config(hop_counts=[0, 3]))
        second = run_scenario(small_config(hop_counts=[0, 3]))

        assert first.byte_counts() == second.byte_counts()
        assert [r.received_digests for r in first.results] == [
            r.received_digests for r in second.results
        ]

        def ncalls(result):
            return {
                (hop.hops, role, stat.name): stat.ncalls
                for hop in result.results
                for role, cell in hop.roles.items()
                for stat in cell.stats
            }

        assert ncalls(first) == ncalls(second)
        assert ncalls(first)[(3, NodeRole.RELAY, "relay_packet")] == 2 * 2 * 16

    def test_failure_marks_result(self):
        failure = BuildFailureError("timeout", hop_index=1)
        with patch.object(SeedNode, "create_circuit", side_effect=failure):
            result = run_scenario(small_config(hop_counts=[1]))
        assert result.failed


class TestRunScenarioScript:
    """시나리오 파일 실행 테스트"""

    def test_script(self):
        scenario = parse_scenario(
            "@0 set payload_bytes 256\n"
            "@0 set deterministic_keys true\n"
            "@0 build_circuits 2 0\n"
            "@0 build_circuits 2 3\n"
            "@0.5 send 4096\n"
            "@0.5 snapshot mid\n"
            "@1 destroy_all\n"
        )
        sleep = Mock()
        result = run_scenario_script(scenario, sleep=sleep)

        assert [r.hops for r in result.results] == [0, 3]
        assert result.config.hop_counts == [0, 3]
        assert all(r.bytes_received == 2 * 4096 for r in result.results)
        assert [s.label for s in result.snapshots] == ["mid"]
        assert len(result.snapshots[0].cells) == 1 + 4
        assert sleep.call_count >= 1
        assert all(0 < call.args[0] <= 1.0 for call in sleep.call_args_list)

    def test_send_without_circuits(self):
        scenario = parse_scenario("@0 send 1024\n")
        result = run_scenario_script(scenario, sleep=Mock())
        assert result.results == []

    def test_build_failure_in_script(self):
        scenario = parse_scenario("@0 build_circuits 1 2\n@0 send 1024\n")
        failure = BuildFailureError("timeout", hop_index=2)
        with patch.object(SeedNode, "create_circuit", side_effect=failure):
            result = run_scenario_script(scenario, sleep=Mock())
        assert result.failed
        assert result.results[0].failed_hop_index == 2


class TestGoodputAndTrend:
    def test_measure_goodput_skips_errors(self):
        ok = HopResult(hops=1, bytes_received=1000, transfer_seconds=2.0)
        failed = HopResult(hops=2, error="timeout")
        result = ScenarioResult(config=small_config(), results=[ok, failed])
        assert measure_goodput(result) == {1: 500.0}

    def test_measure_goodput_zero_duration(self):
        with pytest.raises(UndefinedGoodputError):
            measure_goodput(HopResult(hops=1, bytes_received=10, transfer_seconds=0.0))

    def test_seed_trend_warning(self, caplog):
        """hop이 늘었는데 seed 총 시간 감소 → WARNING, 에러 아님"""
        result = ScenarioResult(
            config=small_config(),
            results=[seed_result(0, 2.0), seed_result(1, 1.0), seed_result(3, 3.0)],
        )
        with caplog.at_level(logging.WARNING, logger="harness.runner"):
            assert not check_seed_trend(result)
        assert "0-hop" in caplog.text

    def test_seed_trend_consistent(self):
        result = ScenarioResult(
            config=small_config(),
            results=[seed_result(0, 1.0), seed_result(3, 2.0)],
        )
        assert check_seed_trend(result)


class TestWriteResults:
    def test_files(self, tmp_path):
        result = run_scenario(small_config(hop_counts=[0, 1]))
        written = write_results(result, tmp_path)

        names = {path.name for path in written}
        assert {"result.json", "goodput.csv", "stats_0_seed.csv", "stats_1_exit.csv"} <= names
        data = json.loads((tmp_path / "result.json").read_text(encoding="utf-8"))
        assert [r["hops"] for r in data["results"]] == [0, 1]
        header = (tmp_path / "stats_1_sink.csv").read_text(encoding="utf-8").splitlines()[0]
        assert header == "label,ncalls,total_seconds,clock,category"

    def test_round_trip_json(self, tmp_path):
        result = run_scenario(small_config(hop_counts=[1]))
        write_results(result, tmp_path)
        loaded = ScenarioResult.model_validate_json(
            (tmp_path / "result.json").read_text(encoding="utf-8")
        )
        assert loaded.byte_counts() == result.byte_counts()
