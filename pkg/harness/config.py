"""
하네스 설정

- ScenarioConfig: 실행 단위 실험 설정 (pydantic 검증)
- HarnessSettings: 환경변수 기반 실행 환경 설정 (TUNNELPROF_ 접두사)
"""

import logging
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from lib.address import ADDRESS_LEN
from lib.cell import CELL_HEADER_LEN
from lib.crypto import LAYER_OVERHEAD
from lib.errors import ConfigurationError
from lib.transport import MAX_DATAGRAM_LEN
from lib.types import ClockKind, ExecutionMode, TransportKind

logger = logging.getLogger(__name__)

MIB = 1024 * 1024
VALID_HOPS = (0, 1, 2, 3)
# 3-hop 회로에서도 데이터그램 하나에 들어가는 최대 데이터 크기
MAX_PAYLOAD_BYTES = (
    MAX_DATAGRAM_LEN - CELL_HEADER_LEN - ADDRESS_LEN - max(VALID_HOPS) * LAYER_OVERHEAD
)


class ScenarioConfig(BaseModel):
    """실험 설정

    hop_counts의 각 hop 수마다 circuits개 회로를 만들고,
    회로당 total_bytes_per_run 바이트를 payload_bytes 단위로 전송합니다.
    """

    model_config = ConfigDict(extra="forbid", validate_assignment=True)

    hop_counts: list[int] = Field(default_factory=lambda: [0, 1, 2, 3])
    circuits: int = Field(default=4, ge=1)
    payload_bytes: int = Field(default=1024, ge=0, le=MAX_PAYLOAD_BYTES)
    total_bytes_per_run: int = Field(default=5 * MIB, ge=0)
    transport: TransportKind = TransportKind.INPROC
    clock: ClockKind = ClockKind.CPU
    pipelined: bool = False
    deterministic_keys: bool = False
    rng_seed: int = Field(default=42, ge=0, le=2**64 - 1)
    link_latency: float = Field(default=0.0, ge=0.0)  # 초

    # 확장 설정
    concurrent_circuits: bool = False
    cache_addresses: bool = False
    queue_capacity: int = Field(default=1024, ge=1)
    execution: ExecutionMode = ExecutionMode.DETERMINISTIC
    build_timeout: float = Field(default=5.0, gt=0.0)
    udp_host: str = "127.0.0.1"

    @field_validator("hop_counts")
    @classmethod
    def _check_hops(cls, value: list[int]) -> list[int]:
        if not value:
            raise ValueError("hop_counts는 비어 있을 수 없음")
        invalid = [h for h in value if h not in VALID_HOPS]
        if invalid:
            raise ValueError(f"hop 수는 0~3: {invalid}")
        if len(set(value)) != len(value):
            raise ValueError(f"hop 수 중복: {value}")
        return value

    @model_validator(mode="after")
    def _check_totals(self) -> "ScenarioConfig":
        if self.total_bytes_per_run < self.payload_bytes:
            raise ValueError(
                f"total_bytes_per_run({self.total_bytes_per_run}) < "
                f"payload_bytes({self.payload_bytes})"
            )
        return self

    @property
    def packets_per_circuit(self) -> int:
        """회로당 패킷 수 (마지막 패킷은 짧을 수 있음)"""
        if self.payload_bytes == 0:
            return 0
        return -(-self.total_bytes_per_run // self.payload_bytes)

    @classmethod
    def build(cls, *layers: dict[str, Any]) -> "ScenarioConfig":
        """뒤쪽 레이어가 앞쪽을 덮어쓰도록 병합해 생성

        Raises:
            ConfigurationError: 검증 실패
        """
        merged: dict[str, Any] = {}
        for layer in layers:
            merged.update({k: v for k, v in layer.items() if v is not None})
        try:
            return cls(**merged)
        except ValidationError as e:
            raise ConfigurationError(f"잘못된 시나리오 설정: {e}") from e

    def with_overrides(self, **overrides: Any) -> "ScenarioConfig":
        return ScenarioConfig.build(self.model_dump(), overrides)


class HarnessSettings(BaseSettings):
    """실행 환경 설정 (환경변수 TUNNELPROF_*)"""

    model_config = SettingsConfigDict(env_prefix="TUNNELPROF_", extra="ignore")

    config_path: str = "config/tunnelprof.yaml"
    out_dir: str = "results"
    log_level: str | None = None
    udp_host: str = "127.0.0.1"
