"""
실험 실행기

hop 수마다 독립된 토폴로지를 만들고 다음 순서로 실행합니다:

1. 노드 바인드 (seed, relay h-1개, exit, sink / 0-hop은 seed만)
2. 역할별 프로파일러 시작
3. 회로 circuits개 구성 (모두 같은 경로, relay 재사용)
4. 회로마다 total_bytes_per_run 바이트를 payload_bytes 단위로 전송
5. 파이프라인/네트워크가 비워질 때까지 대기 후 회로 제거
6. 프로파일러 정지, 역할별 스냅샷 (결과는 노드 종류별로 평가)

결정적 모드(라운드로빈)에서는 패킷 하나를 보낼 때마다 스케줄러를 한 번 진행시켜
모든 노드가 호출 스레드 하나에서 실행됩니다.
"""

import hashlib
import logging
import random
import time
from collections import Counter
from pathlib import Path
from typing import Callable, Iterator, Mapping, Sequence

from lib.address import Address, AddressCache
from lib.errors import BuildFailureError, UndefinedGoodputError
from lib.profiler import Profiler, categorize, stats_to_csv
from lib.transport import create_network
from lib.types import NodeRole
from nodes import (
    Circuit,
    HandshakeMode,
    Node,
    RelayNode,
    SeedNode,
    SinkNode,
    create_scheduler,
)

from .config import ScenarioConfig
from .report import emit_goodput_table
from .results import (
    HopResult,
    RoleResult,
    ScenarioResult,
    SnapshotCell,
    SnapshotRecord,
    goodput,
)
from .scenario import BUILD_CIRCUITS, DESTROY_ALL, SEND, SNAPSHOT, Scenario

logger = logging.getLogger(__name__)

PSK_CONTEXT = "tunnelprof-psk"


def roles_for(hops: int) -> list[NodeRole]:
    """hop 수별 결과에 포함되는 역할"""
    if hops == 0:
        return [NodeRole.SEED]
    if hops == 1:
        return [NodeRole.SEED, NodeRole.EXIT, NodeRole.SINK]
    return [NodeRole.SEED, NodeRole.RELAY, NodeRole.EXIT, NodeRole.SINK]


def packet_sizes(total_bytes: int, payload_bytes: int) -> list[int]:
    """회로 하나의 패킷 크기 목록 (마지막 패킷은 짧을 수 있음)"""
    if payload_bytes <= 0 or total_bytes <= 0:
        return []
    full, rest = divmod(total_bytes, payload_bytes)
    return [payload_bytes] * full + ([rest] if rest else [])


# ============================================================================
# hop 수 하나의 토폴로지
# ============================================================================


class HopRun:
    """hop 수 하나의 노드 묶음과 실행 상태"""

    def __init__(
        self,
        config: ScenarioConfig,
        hops: int,
        taxonomy: Mapping[str, Sequence[str]] | None = None,
    ):
        """
        Args:
            config: 실험 설정
            hops: 회로 hop 수 (0~3)
            taxonomy: 함수 분류 (None이면 기본 분류)

        Raises:
            BindError: 엔드포인트 바인드 실패
        """
        self.config = config
        self.hops = hops
        self.taxonomy = taxonomy
        self.profilers = {role: Profiler(role.value) for role in roles_for(hops)}
        self.payload_rng = random.Random(f"{config.rng_seed}:{hops}")
        self.circuits: list[Circuit] = []
        self.built: list[Circuit] = []
        self.build_seconds = 0.0
        self.transfer_seconds = 0.0
        self._created_at = time.monotonic()
        self._started = False
        self._closed = False

        if config.deterministic_keys:
            self.handshake_mode = HandshakeMode.PSK
            self.psk: bytes | None = hashlib.sha256(
                f"{PSK_CONTEXT}:{config.rng_seed}".encode()
            ).digest()
        else:
            self.handshake_mode = HandshakeMode.EPHEMERAL
            self.psk = None

        self.network = create_network(config.transport, config.link_latency, config.udp_host)
        try:
            self._build_nodes()
        except Exception:
            self.network.close()
            raise

        self.scheduler = create_scheduler(config.execution, self.network, self.nodes)
        self.seed.attach(self.scheduler.wait_for)

    def _node_kwargs(self, role: NodeRole, index: int) -> dict:
        return {
            "profiler": self.profilers[role],
            "rng": random.Random(f"{self.config.rng_seed}:{self.hops}:{role.value}:{index}"),
            "address_cache": AddressCache() if self.config.cache_addresses else None,
            "handshake_mode": self.handshake_mode,
            "psk": self.psk,
        }

    def _bind(self):
        return self.network.bind(Address(self.config.udp_host, 0))

    def _build_nodes(self) -> None:
        self.seed = SeedNode(
            self._bind(),
            build_timeout=self.config.build_timeout,
            **self._node_kwargs(NodeRole.SEED, 0),
        )
        self.relays: list[RelayNode] = [
            RelayNode(self._bind(), role=NodeRole.RELAY, **self._node_kwargs(NodeRole.RELAY, i))
            for i in range(max(self.hops - 1, 0))
        ]
        self.exit: RelayNode | None = None
        self.sink: SinkNode | None = None
        if self.hops > 0:
            self.exit = RelayNode(
                self._bind(), role=NodeRole.EXIT, **self._node_kwargs(NodeRole.EXIT, 0)
            )
            self.sink = SinkNode(self._bind(), **self._node_kwargs(NodeRole.SINK, 0))

    @property
    def nodes(self) -> list[Node]:
        """경로 순서의 노드 목록 (라운드로빈 순서)"""
        nodes: list[Node] = [self.seed, *self.relays]
        if self.exit is not None and self.sink is not None:
            nodes += [self.exit, self.sink]
        return nodes

    def nodes_for(self, role: NodeRole) -> list[Node]:
        return [node for node in self.nodes if node.role == role]

    @property
    def path(self) -> list[Address]:
        """seed가 회로에 사용할 hop 주소 (마지막이 exit)"""
        if self.exit is None:
            return []
        return [relay.address for relay in self.relays] + [self.exit.address]

    @property
    def destination(self) -> Address | None:
        return self.sink.address if self.sink is not None else None

    # ========================================================================
    # 실행 단계
    # ========================================================================

    def start(self) -> None:
        if self._started:
            return
        self._started = True
        self.scheduler.start()
        for profiler in self.profilers.values():
            profiler.start(self.config.clock)

    def build_circuits(self, count: int) -> list[Circuit]:
        """같은 경로로 회로 count개 구성

        Raises:
            BuildFailureError: 핸드셰이크 타임아웃
        """
        started = time.monotonic()
        built: list[Circuit] = []
        try:
            for _ in range(count):
                circuit = self.seed.create_circuit(self.path, self.destination)
                built.append(circuit)
                self.circuits.append(circuit)
                self.built.append(circuit)
        finally:
            self.build_seconds += time.monotonic() - started
        logger.info(f"[Harness] {self.hops}-hop 회로 {len(built)}개 구성")
        return built

    def _order(self, sizes: list[int]) -> Iterator[tuple[Circuit, int]]:
        active = [circuit for circuit in self.circuits if circuit.established]
        if self.config.concurrent_circuits:
            # 패킷 단위로 회로를 번갈아 전송
            for size in sizes:
                for circuit in active:
                    yield circuit, size
        else:
            for circuit in active:
                for size in sizes:
                    yield circuit, size

    def send(self, bytes_per_circuit: int) -> int:
        """활성 회로마다 bytes_per_circuit 바이트의 난수 데이터 전송

        Returns:
            int: 보낸 패킷 수
        """
        sizes = packet_sizes(bytes_per_circuit, self.config.payload_bytes)
        if not sizes or not self.circuits:
            return 0

        send: Callable[[Circuit, bytes], None] = self.seed.send_packet
        if self.config.pipelined:
            self.seed.enable_pipeline(self.config.queue_capacity)
            send = self.seed.pipelined_send

        sent = 0
        started = time.monotonic()
        for circuit, size in self._order(sizes):
            send(circuit, self.payload_rng.randbytes(size))
            self.scheduler.poll()
            sent += 1
        self.seed.flush()
        self.settle()
        self.transfer_seconds += time.monotonic() - started
        logger.debug(f"[Harness] {self.hops}-hop 패킷 {sent}개 전송")
        return sent

    def destroy_all(self) -> None:
        for circuit in self.circuits:
            self.seed.destroy_circuit(circuit)
        self.circuits = []
        self.settle()

    def settle(self) -> bool:
        """처리 대기 중인 데이터그램이 없어질 때까지 진행"""
        if self.scheduler.quiesce(self.config.build_timeout):
            return True
        logger.warning(
            f"[Harness] {self.hops}-hop 네트워크 미처리 데이터그램 {self.network.unfinished}개"
        )
        return False

    # ========================================================================
    # 결과 수집
    # ========================================================================

    def role_results(self) -> dict[NodeRole, RoleResult]:
        """역할별 통계 (같은 역할 노드는 프로파일러와 카운터를 합산)"""
        roles: dict[NodeRole, RoleResult] = {}
        for role, profiler in self.profilers.items():
            nodes = self.nodes_for(role)
            invocations: Counter[str] = Counter()
            drops: Counter[str] = Counter()
            for node in nodes:
                invocations.update(node.invocations)
                drops.update(node.drops)
            stats = profiler.snapshot()
            roles[role] = RoleResult(
                role=role,
                nodes=len(nodes),
                stats=stats,
                breakdown=categorize(stats, self.taxonomy),
                invocations=dict(invocations),
                drops=dict(drops),
            )
        return roles

    def snapshot_cells(self) -> list[SnapshotCell]:
        return [
            SnapshotCell(hops=self.hops, role=role, stats=profiler.snapshot())
            for role, profiler in self.profilers.items()
        ]

    def finish(self, error: str | None = None, failed_hop_index: int | None = None) -> HopResult:
        """프로파일러를 정지하고 결과 조립"""
        self.seed.close()
        for profiler in self.profilers.values():
            if profiler.running:
                profiler.stop()

        if self.sink is not None:
            counters = self.sink.counters
            received_digests = self.sink.stream_digests()
        else:
            counters = self.seed.local_sink
            received_digests = self.seed.local_stream_digests()

        result = HopResult(
            hops=self.hops,
            circuits=len(self.built),
            roles=self.role_results(),
            bytes_sent=sum(c.bytes_sent for c in self.built),
            packets_sent=sum(c.packets_sent for c in self.built),
            bytes_received=counters.bytes_received,
            packets_received=counters.packets_received,
            transport=self.network.stats(),
            node_drops=sum(sum(node.drops.values()) for node in self.nodes),
            build_seconds=self.build_seconds,
            transfer_seconds=self.transfer_seconds,
            wall_seconds=time.monotonic() - self._created_at,
            sent_digests=sorted(c.sent_digest() for c in self.built if c.packets_sent),
            received_digests=received_digests,
            error=error,
            failed_hop_index=failed_hop_index,
        )
        if result.packets_sent:
            try:
                result.goodput = goodput(result.bytes_received, result.transfer_seconds)
            except UndefinedGoodputError as e:
                logger.warning(f"[Harness] {self.hops}-hop goodput 미정의: {e}")
            try:
                result.sink_throughput = counters.throughput()
            except UndefinedGoodputError as e:
                logger.debug(f"[Harness] {self.hops}-hop sink 처리량 미정의: {e}")
        return result

    def close(self) -> None:
        if self._closed:
            return
        self._closed = True
        self.scheduler.stop()
        self.seed.close()
        self.network.close()

    def __enter__(self) -> "HopRun":
        return self

    def __exit__(self, exc_type, exc_val, exc_tb) -> bool:
        self.close()
        return False


# ============================================================================
# 실행 진입점
# ============================================================================


def run_hop(
    config: ScenarioConfig,
    hops: int,
    taxonomy: Mapping[str, Sequence[str]] | None = None,
) -> HopResult:
    """hop 수 하나 실행 (빌드 실패는 에러 행으로 반환)

    Raises:
        BindError: 엔드포인트 바인드 실패
    """
    with HopRun(config, hops, taxonomy) as run:
        run.start()
        try:
            run.build_circuits(config.circuits)
        except BuildFailureError as e:
            logger.warning(f"[Harness] {hops}-hop 실행 중단: {e}")
            run.destroy_all()
            return run.finish(error=str(e), failed_hop_index=e.hop_index)
        run.send(config.total_bytes_per_run)
        run.destroy_all()
        return run.finish()


def run_scenario(
    config: ScenarioConfig,
    taxonomy: Mapping[str, Sequence[str]] | None = None,
) -> ScenarioResult:
    """설정의 hop 수마다 실행하고 결과 조립

    Args:
        config: 실험 설정
        taxonomy: 함수 분류 (None이면 기본 분류)

    Returns:
        ScenarioResult: hop 수별 결과 (빌드 실패는 error가 설정된 행)

    Raises:
        BindError: 엔드포인트 바인드 실패 (설정 오류)
    """
    started = time.monotonic()
    logger.info(
        f"[Harness] 실행 시작: hops={config.hop_counts}, circuits={config.circuits}, "
        f"{config.total_bytes_per_run} bytes/circuit, transport={config.transport.value}, "
        f"pipelined={config.pipelined}"
    )

    results: list[HopResult] = []
    for hops in config.hop_counts:
        result = run_hop(config, hops, taxonomy)
        results.append(result)
        _log_hop(result)

    scenario_result = ScenarioResult(
        config=config,
        results=results,
        taxonomy=_taxonomy_dict(taxonomy),
        wall_seconds=time.monotonic() - started,
    )
    check_seed_trend(scenario_result)
    logger.info(f"[Harness] 실행 완료: {scenario_result.wall_seconds:.2f}초")
    return scenario_result


def run_scenario_script(
    scenario: Scenario,
    taxonomy: Mapping[str, Sequence[str]] | None = None,
    sleep: Callable[[float], None] = time.sleep,
) -> ScenarioResult:
    """시나리오 파일 명령을 offset 순서대로 실행

    build_circuits가 처음 사용하는 hop 수마다 토폴로지를 하나 만들고,
    send/destroy_all은 열려 있는 모든 토폴로지에 적용됩니다.
    """
    config = scenario.config
    runs: dict[int, HopRun] = {}
    finished: dict[int, HopResult] = {}
    snapshots: list[SnapshotRecord] = []
    started = time.monotonic()

    try:
        for command in scenario.commands:
            delay = command.offset - (time.monotonic() - started)
            if delay > 0:
                sleep(delay)
            logger.debug(f"[Harness] {command.line}행: @{command.offset} {command.command}")

            if command.command == BUILD_CIRCUITS:
                count, hops = command.args
                if hops in finished:
                    continue
                run = runs.get(hops)
                if run is None:
                    run = runs[hops] = HopRun(config, hops, taxonomy)
                    run.start()
                try:
                    run.build_circuits(count)
                except BuildFailureError as e:
                    logger.warning(f"[Harness] {hops}-hop 실행 중단: {e}")
                    run.destroy_all()
                    finished[hops] = run.finish(error=str(e), failed_hop_index=e.hop_index)
                    runs.pop(hops).close()
            elif command.command == SEND:
                for run in runs.values():
                    run.send(command.args[0])
            elif command.command == DESTROY_ALL:
                for run in runs.values():
                    run.destroy_all()
            elif command.command == SNAPSHOT:
                snapshots.append(
                    SnapshotRecord(
                        label=command.args[0],
                        offset=command.offset,
                        elapsed=time.monotonic() - started,
                        cells=[cell for run in runs.values() for cell in run.snapshot_cells()],
                    )
                )

        for hops, run in runs.items():
            run.destroy_all()
            finished[hops] = run.finish()
    finally:
        for run in runs.values():
            run.close()

    hop_counts = scenario.hop_counts
    results = [finished[hops] for hops in hop_counts if hops in finished]
    for result in results:
        _log_hop(result)
    if hop_counts:
        config = config.with_overrides(hop_counts=hop_counts)

    scenario_result = ScenarioResult(
        config=config,
        results=results,
        snapshots=snapshots,
        taxonomy=_taxonomy_dict(taxonomy),
        wall_seconds=time.monotonic() - started,
    )
    check_seed_trend(scenario_result)
    return scenario_result


def measure_goodput(result: ScenarioResult | HopResult) -> dict[int, float]:
    """hop 수별 goodput (수신 바이트 / 전송 구간 시간)

    0-hop은 seed 로컬 루프가 받은 바이트를 사용합니다.
    에러 행은 제외합니다.

    Raises:
        UndefinedGoodputError: 전송 구간 시간이 0인 hop이 있음
    """
    hop_results = [result] if isinstance(result, HopResult) else result.results
    return {
        hop.hops: goodput(hop.bytes_received, hop.transfer_seconds)
        for hop in hop_results
        if hop.ok
    }


def check_seed_trend(result: ScenarioResult) -> bool:
    """hop 수가 늘었는데 seed 총 시간이 줄면 WARNING (에러 아님)

    Returns:
        bool: 이상 없으면 True
    """
    totals = sorted(
        (hop.hops, hop.roles[NodeRole.SEED].total_seconds)
        for hop in result.results
        if hop.ok and NodeRole.SEED in hop.roles
    )
    consistent = True
    for (fewer, fewer_total), (more, more_total) in zip(totals, totals[1:]):
        if more_total < fewer_total:
            consistent = False
            logger.warning(
                f"[Harness] seed 총 시간이 hop 증가에 따라 감소: "
                f"{fewer}-hop {fewer_total:.4f}s > {more}-hop {more_total:.4f}s"
            )
    return consistent


def write_results(
    result: ScenarioResult,
    out_dir: str | Path,
    taxonomy: Mapping[str, Sequence[str]] | None = None,
) -> list[Path]:
    """result.json, stats_<hop>_<role>.csv, goodput.csv 저장

    Returns:
        list[Path]: 저장한 파일 경로
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    taxonomy = taxonomy if taxonomy is not None else result.taxonomy

    written = [out / "result.json"]
    written[0].write_text(result.model_dump_json(indent=2), encoding="utf-8")

    for hop in result.results:
        for role, cell in hop.roles.items():
            path = out / f"stats_{hop.hops}_{role.value}.csv"
            path.write_text(stats_to_csv(cell.stats, taxonomy), encoding="utf-8", newline="\n")
            written.append(path)

    goodput_path = out / "goodput.csv"
    goodput_path.write_text(emit_goodput_table(result).to_csv(), encoding="utf-8", newline="\n")
    written.append(goodput_path)

    logger.info(f"[Harness] 결과 저장: {out} ({len(written)}개 파일)")
    return written


def _taxonomy_dict(taxonomy: Mapping[str, Sequence[str]] | None) -> dict[str, list[str]] | None:
    if taxonomy is None:
        return None
    return {name: list(labels) for name, labels in taxonomy.items()}


def _log_hop(result: HopResult) -> None:
    if not result.ok:
        logger.warning(
            f"[Harness] {result.hops}-hop 에러 행: {result.error} "
            f"(hop {result.failed_hop_index})"
        )
        return
    speed = f"{result.goodput / 1024 / 1024:.2f} MiB/s" if result.goodput else "N/A"
    logger.info(
        f"[Harness] {result.hops}-hop 완료: 송신 {result.bytes_sent} B, "
        f"수신 {result.bytes_received} B, 드롭 {result.dropped_packets}, goodput {speed}"
    )
