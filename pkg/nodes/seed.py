"""
Seed 노드 (트래픽 발신자)

회로 구성 (텔레스코핑):
    1. CREATE(c1, skin1) → hop 1, CREATED(c1, reply1) ← hop 1
    2. EXTEND(c1, addr2 || skin2) → hop 1 → CREATE(c2) → hop 2
       EXTENDED(c1, c2 || reply2) ← hop 1 ← CREATED(c2) ← hop 2
    3. hop 3도 같은 방식으로 기존 구간을 통해 연장

데이터 송신:
    plaintext = encode_address(목적지) || data
    cell = crypto_out(circuit, plaintext)   # 모든 hop 키로 레이어 암호화
    순차 모드: send_packet이 바로 hop 1에 전송
    파이프라인 모드: 셀을 큐에 넣고 네트워크 스레드가 전송

0-hop 회로는 핸드셰이크 없이 로컬 키만 만듭니다. 셀은 로컬 키로 한 번 더
암호화되어 seed 자신의 엔드포인트로 전송되고, on_data에서 복호화 후
local_sink에 기록됩니다 (전송 계층 비용을 다른 hop 수와 동일하게 포함).
"""

import hashlib
import logging
import struct
from dataclasses import dataclass, field
from typing import Callable

from lib.address import ADDRESS_LEN, Address
from lib.cell import CELL_HEADER_LEN, MAX_CIRCUIT_ID, Cell
from lib.crypto import (
    KEY_LEN,
    LayerKey,
    OnionPayload,
    onion_encrypt,
    peel_layer,
)
from lib.errors import (
    AuthenticationError,
    BuildFailureError,
    CircuitStateError,
    ConfigurationError,
    MalformedAddressError,
    OversizeError,
)
from lib.profiler import activate, profiled
from lib.transport import MAX_DATAGRAM_LEN
from lib.types import CellType, CircuitState, NodeRole

from .base import (
    DROP_AUTH_FAILURE,
    DROP_MALFORMED,
    DROP_UNEXPECTED,
    DROP_UNKNOWN_CIRCUIT,
    Node,
)
from .handshake import ClientHandshake, HandshakeMode
from .pipeline import DEFAULT_CAPACITY, SendPipeline
from .relay import CIRCUIT_ID_FORMAT, CIRCUIT_ID_LEN
from .sink import SinkCounters, StreamDigest

logger = logging.getLogger(__name__)

DEFAULT_BUILD_TIMEOUT = 5.0
MAX_HOPS = 3


@dataclass
class Hop:
    """회로의 hop 하나"""

    address: Address
    address_bytes: bytes
    key: LayerKey | None = None
    remote_circuit_id: int | None = None  # 이 hop으로 들어가는 링크의 circuit_id


@dataclass
class Circuit:
    """seed가 만든 회로

    hop_count = len(hops). 0-hop 회로는 hops가 비어 있고 local_key를 가집니다.
    """

    local_circuit_id: int
    hops: list[Hop]
    destination: Address
    state: CircuitState = CircuitState.BUILDING
    local_key: LayerKey | None = None
    bytes_sent: int = 0
    packets_sent: int = 0
    _digest: "hashlib._Hash" = field(default_factory=hashlib.sha256, repr=False)
    _handshake: ClientHandshake | None = field(default=None, repr=False)

    @property
    def hop_count(self) -> int:
        return len(self.hops)

    @property
    def keys(self) -> list[LayerKey]:
        """hop 순서의 레이어 키 (hop 1이 가장 바깥)"""
        return [hop.key for hop in self.hops if hop.key is not None]

    @property
    def established(self) -> bool:
        return self.state == CircuitState.ESTABLISHED

    def record_sent(self, data: bytes) -> None:
        self._digest.update(data)
        self.bytes_sent += len(data)
        self.packets_sent += 1

    def sent_digest(self) -> str:
        return self._digest.hexdigest()


class SeedNode(Node):
    role = NodeRole.SEED

    def __init__(
        self,
        *args,
        build_timeout: float = DEFAULT_BUILD_TIMEOUT,
        **kwargs,
    ):
        super().__init__(*args, **kwargs)
        self.build_timeout = build_timeout
        self.circuits: dict[int, Circuit] = {}
        # 0-hop 루프백 수신 카운터
        self.local_sink = SinkCounters()
        self.local_streams: dict[int, StreamDigest] = {}
        self.pipeline: SendPipeline[tuple[Circuit, Cell]] | None = None
        self._wait_for: Callable[[Callable[[], bool], float], bool] | None = None

    def attach(self, wait_for: Callable[[Callable[[], bool], float], bool]) -> None:
        """스케줄러의 wait_for 연결 (회로 빌드 중 응답 대기용)"""
        self._wait_for = wait_for

    def _handlers(self):
        return {
            CellType.CREATED: self.on_created,
            CellType.EXTENDED: self.on_extended,
            CellType.DATA: self.on_data,
        }

    def _generate_circuit_id(self) -> int:
        while True:
            circuit_id = self.rng.randint(1, MAX_CIRCUIT_ID)
            if circuit_id not in self.circuits:
                return circuit_id

    # ========================================================================
    # 회로 수명주기
    # ========================================================================

    def create_circuit(
        self, hop_addresses: list[Address], destination: Address | None = None
    ) -> Circuit:
        """hop_addresses를 거치는 회로 구성 (ESTABLISHED가 될 때까지 블로킹)

        Args:
            hop_addresses: 0~3개 hop 주소 (마지막이 exit)
            destination: exit이 평문을 보낼 주소 (기본: seed 자신)

        Returns:
            Circuit: ESTABLISHED 상태

        Raises:
            BuildFailureError: 핸드셰이크 타임아웃 (hop_index는 1부터)
        """
        if len(hop_addresses) > MAX_HOPS:
            raise ConfigurationError(f"hop 수는 {MAX_HOPS} 이하: {len(hop_addresses)}")

        with activate(self.profiler):
            destination = destination or self.address
            circuit = Circuit(
                local_circuit_id=self._generate_circuit_id(),
                hops=[Hop(addr, self.encode(addr)) for addr in hop_addresses],
                destination=destination,
            )
            self.circuits[circuit.local_circuit_id] = circuit

            if not circuit.hops:
                circuit.local_key = self._local_key()
                circuit.state = CircuitState.ESTABLISHED
                logger.debug(f"[Seed] 0-hop 회로 생성: {circuit.local_circuit_id}")
                return circuit

            if self._wait_for is None:
                raise CircuitStateError("스케줄러가 연결되지 않음")

            first = circuit.hops[0]
            first.remote_circuit_id = circuit.local_circuit_id
            for index, hop in enumerate(circuit.hops):
                circuit._handshake = ClientHandshake(self.handshake_mode, self.psk, self.rng)
                skin = circuit._handshake.onion_skin()
                if index == 0:
                    self.send_cell(
                        first.address_bytes,
                        Cell(circuit.local_circuit_id, CellType.CREATE, skin),
                    )
                else:
                    self.send_cell(
                        first.address_bytes,
                        Cell(circuit.local_circuit_id, CellType.EXTEND, hop.address_bytes + skin),
                    )

                if not self._wait_for(lambda h=hop: h.key is not None, self.build_timeout):
                    circuit._handshake = None
                    self._abandon(circuit)
                    logger.warning(
                        f"[Seed] 회로 빌드 실패: hop {index + 1} ({hop.address}) 응답 없음"
                    )
                    raise BuildFailureError(
                        f"hop {index + 1} ({hop.address}) 핸드셰이크 타임아웃",
                        hop_index=index + 1,
                    )

            circuit._handshake = None
            circuit.state = CircuitState.ESTABLISHED
            logger.info(
                f"[Seed] 회로 구성 완료: circuit {circuit.local_circuit_id}, "
                f"{circuit.hop_count} hops"
            )
            return circuit

    def _local_key(self) -> LayerKey:
        if self.handshake_mode == HandshakeMode.PSK:
            return LayerKey(self.rng.randbytes(KEY_LEN))
        return LayerKey.generate()

    def _abandon(self, circuit: Circuit) -> None:
        # 이미 구성된 앞 구간 정리
        if circuit.hops and circuit.hops[0].key is not None:
            self.send_cell(
                circuit.hops[0].address_bytes,
                Cell(circuit.local_circuit_id, CellType.DESTROY),
            )
        circuit.state = CircuitState.DESTROYED
        self.circuits.pop(circuit.local_circuit_id, None)

    def on_created(self, source: bytes, cell: Cell) -> None:
        circuit = self.circuits.get(cell.circuit_id)
        if circuit is None or not circuit.hops or source != circuit.hops[0].address_bytes:
            self.drop(DROP_UNKNOWN_CIRCUIT, f"CREATED circuit {cell.circuit_id}")
            return
        self._complete_hop(circuit, 0, cell.payload)

    def on_extended(self, source: bytes, cell: Cell) -> None:
        circuit = self.circuits.get(cell.circuit_id)
        if circuit is None or not circuit.hops or source != circuit.hops[0].address_bytes:
            self.drop(DROP_UNKNOWN_CIRCUIT, f"EXTENDED circuit {cell.circuit_id}")
            return
        index = len(circuit.keys)
        if index == 0 or index >= circuit.hop_count or len(cell.payload) < CIRCUIT_ID_LEN:
            self.drop(DROP_UNEXPECTED, f"EXTENDED circuit {cell.circuit_id}")
            return
        (remote_id,) = struct.unpack_from(CIRCUIT_ID_FORMAT, cell.payload)
        circuit.hops[index].remote_circuit_id = remote_id
        self._complete_hop(circuit, index, cell.payload[CIRCUIT_ID_LEN:])

    def _complete_hop(self, circuit: Circuit, index: int, reply: bytes) -> None:
        handshake = circuit._handshake
        hop = circuit.hops[index]
        if handshake is None or hop.key is not None:
            self.drop(DROP_UNEXPECTED, f"대기 중이 아닌 hop {index + 1} 응답")
            return
        hop.key = handshake.finish(reply)

    def destroy_circuit(self, circuit: Circuit) -> bool:
        """회로 제거 (DESTROY를 hop별로 전파)

        Returns:
            bool: 제거했으면 True, 이미 제거된 회로면 False (no-op)
        """
        if circuit.state == CircuitState.DESTROYED:
            return False
        # 파이프라인에 남은 DATA 셀이 DESTROY보다 먼저 나가야 함
        self.flush()
        if circuit.hop_count == 0 and self._wait_for is not None:
            self._wait_for(
                lambda: self._local_packets(circuit) >= circuit.packets_sent, self.build_timeout
            )
        with activate(self.profiler):
            if circuit.hops and circuit.hops[0].key is not None:
                self.send_cell(
                    circuit.hops[0].address_bytes,
                    Cell(circuit.local_circuit_id, CellType.DESTROY),
                )
            circuit.state = CircuitState.DESTROYED
            self.circuits.pop(circuit.local_circuit_id, None)
        logger.debug(f"[Seed] 회로 제거: circuit {circuit.local_circuit_id}")
        return True

    # ========================================================================
    # 데이터 경로
    # ========================================================================

    def _require_established(self, circuit: Circuit) -> None:
        if circuit.state != CircuitState.ESTABLISHED:
            raise CircuitStateError(
                f"circuit {circuit.local_circuit_id} 상태 {circuit.state.value}"
            )

    @profiled("crypto_out")
    def crypto_out(self, circuit: Circuit, plaintext: bytes) -> Cell:
        """모든 hop 키로 레이어 암호화한 DATA 셀 (hop 1 레이블)

        Raises:
            CircuitStateError: 회로가 ESTABLISHED가 아님
            OversizeError: 평문이 레이어 오버헤드 예산 초과
        """
        self.count("crypto_out")
        self._require_established(circuit)
        self.count("encrypt_str")
        onion = onion_encrypt(plaintext, circuit.keys)
        return Cell(circuit.local_circuit_id, CellType.DATA, onion.ciphertext)

    def _seal(self, circuit: Circuit, data: bytes) -> Cell:
        # 목적지 주소는 패킷마다 변환 (캐시 활성화 시 최초 1회)
        cell = self.crypto_out(circuit, self.encode(circuit.destination) + data)
        if circuit.hop_count == 0:
            # 0-hop: 로컬 키 레이어도 crypto 스테이지에서 씌움
            assert circuit.local_key is not None
            self.count("encrypt_str")
            onion = onion_encrypt(cell.payload, [circuit.local_key])
            cell = Cell(cell.circuit_id, CellType.DATA, onion.ciphertext)
        size = len(cell.payload) + CELL_HEADER_LEN
        if size > MAX_DATAGRAM_LEN:
            raise OversizeError(f"전송 크기 초과: {size} > {MAX_DATAGRAM_LEN}")
        return cell

    def send_packet(self, circuit: Circuit, data: bytes) -> None:
        """순차 송신: crypto_out 직후 hop 1로 전송 (0-hop은 로컬 루프)

        Raises:
            CircuitStateError: 회로가 ESTABLISHED가 아님
            OversizeError: 페이로드가 너무 큼
        """
        self._require_established(circuit)
        with activate(self.profiler):
            self._send_packet(circuit, data)
        circuit.record_sent(data)

    @profiled("send_packet")
    def _send_packet(self, circuit: Circuit, data: bytes) -> None:
        self.count("send_packet")
        self._transmit(circuit, self._seal(circuit, data))

    def _transmit(self, circuit: Circuit, cell: Cell) -> None:
        # 0-hop은 자기 엔드포인트로 루프백
        dest = circuit.hops[0].address_bytes if circuit.hop_count > 0 else self.address_bytes
        self.send_cell(dest, cell)

    def on_data(self, source: bytes, cell: Cell) -> None:
        """0-hop 루프백 수신: 로컬 키로 복호화하고 목적지 확인 후 카운트"""
        circuit = self.circuits.get(cell.circuit_id)
        if source != self.address_bytes or circuit is None or circuit.local_key is None:
            self.drop(DROP_UNKNOWN_CIRCUIT, f"DATA circuit {cell.circuit_id}")
            return
        self.count("decrypt_str")
        try:
            plaintext = peel_layer(OnionPayload(1, cell.payload), circuit.local_key).ciphertext
        except AuthenticationError as e:
            self.drop(DROP_AUTH_FAILURE, str(e))
            return
        try:
            self.decode(plaintext[:ADDRESS_LEN])
        except MalformedAddressError as e:
            self.drop(DROP_MALFORMED, str(e))
            return
        data = plaintext[ADDRESS_LEN:]
        self.local_sink.record(len(data))
        stream = self.local_streams.get(circuit.local_circuit_id)
        if stream is None:
            stream = self.local_streams[circuit.local_circuit_id] = StreamDigest()
        stream.update(data)

    # ========================================================================
    # 파이프라인 송신
    # ========================================================================

    def enable_pipeline(self, capacity: int = DEFAULT_CAPACITY) -> SendPipeline:
        """네트워크 스테이지 스레드 시작"""
        if self.pipeline is None:
            self.pipeline = SendPipeline(
                self._send_cell_stage,
                capacity=capacity,
                profiler=self.profiler,
                name=f"pipeline-{self.name}",
            ).start()
        return self.pipeline

    def pipelined_send(self, circuit: Circuit, data: bytes) -> None:
        """crypto 스테이지: 암호화한 셀을 송신 큐에 추가 (가득 차면 블로킹)

        Raises:
            ConfigurationError: 파이프라인이 활성화되지 않음
            CircuitStateError: 회로가 ESTABLISHED가 아님
            OversizeError: 페이로드가 너무 큼
        """
        if self.pipeline is None:
            raise ConfigurationError("파이프라인 송신이 비활성화됨")
        self._require_established(circuit)
        with activate(self.profiler):
            cell = self._seal(circuit, data)
        self.pipeline.submit((circuit, cell))
        circuit.record_sent(data)

    def _send_cell_stage(self, item: tuple[Circuit, Cell]) -> None:
        circuit, cell = item
        self._send_staged(circuit, cell)

    @profiled("send_packet")
    def _send_staged(self, circuit: Circuit, cell: Cell) -> None:
        self.count("send_packet")
        self._transmit(circuit, cell)

    def flush(self) -> None:
        """파이프라인 큐를 완전히 비움 (비활성화 상태면 no-op)"""
        if self.pipeline is not None:
            self.pipeline.flush()

    def close(self) -> None:
        if self.pipeline is not None:
            self.pipeline.close()
            self.pipeline = None

    # ========================================================================
    # 결과 조회
    # ========================================================================

    def _local_packets(self, circuit: Circuit) -> int:
        stream = self.local_streams.get(circuit.local_circuit_id)
        return 0 if stream is None else stream.packets

    def local_stream_digests(self) -> list[str]:
        return sorted(stream.hexdigest() for stream in self.local_streams.values())
