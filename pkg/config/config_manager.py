"""
설정 관리

실험 기본값, 함수 분류(taxonomy), 리포트 옵션을 YAML로 관리합니다.

설계 원칙:
- 코드 변경 없이 YAML 설정만 수정하여 실험 기본값 변경
- ${VAR} / $VAR 환경변수 치환
- 싱글톤 패턴으로 전역 접근

사용법:
    ```python
    store = ConfigStore()
    store.reload("config/tunnelprof.yaml")

    defaults = store.scenario_defaults      # ScenarioConfig 기본값 dict
    taxonomy = store.taxonomy               # {"crypto": [...], "networking": [...]}
    floor = store.report.relative_floor
    ```
"""

import logging
import os
import re
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from lib.errors import ConfigurationError
from lib.profiler import DEFAULT_TAXONOMY

logger = logging.getLogger(__name__)

DEFAULT_CONFIG_PATH = "config/tunnelprof.yaml"


@dataclass
class ReportConfig:
    """리포트 설정"""

    relative_floor: float = 0.01  # 이 비율 미만 함수는 other-small로 합침
    top_n: int = 20  # 절대 시간 테이블 행 수


@dataclass
class LoggingConfig:
    """로깅 설정"""

    level: str = "INFO"
    format: str = "%(asctime)s [%(levelname)s] %(name)s: %(message)s"


@dataclass
class _Snapshot:
    version: str = "0.0.0"
    scenario: dict[str, Any] = field(default_factory=dict)
    taxonomy: dict[str, list[str]] = field(
        default_factory=lambda: {k: list(v) for k, v in DEFAULT_TAXONOMY.items()}
    )
    report: ReportConfig = field(default_factory=ReportConfig)
    logging: LoggingConfig = field(default_factory=LoggingConfig)


class ConfigStore:
    """설정 저장소 (싱글톤)

    모든 설정은 이 클래스를 통해 접근합니다.
    reload 전에는 내장 기본값을 반환합니다.
    """

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
            cls._instance._initialized = False
        return cls._instance

    def __init__(self):
        if self._initialized:
            return
        self._initialized = True

        self._snapshot = _Snapshot()
        self._lock = threading.Lock()

    def reload(self, config_path: str = DEFAULT_CONFIG_PATH) -> None:
        """설정 파일 리로드

        Args:
            config_path: 설정 파일 경로 (없으면 기본 설정 파일 생성)

        Raises:
            ConfigurationError: YAML 형식 오류 또는 잘못된 섹션 값
        """
        with self._lock:
            logger.info(f"[ConfigStore] 설정 리로드 시작: {config_path}")

            if not Path(config_path).exists():
                logger.warning(f"[ConfigStore] 설정 파일 없음: {config_path}")
                self._create_default_config(config_path)

            try:
                with open(config_path, encoding="utf-8") as f:
                    raw_config = yaml.safe_load(f) or {}
            except yaml.YAMLError as e:
                raise ConfigurationError(f"YAML 파싱 실패: {config_path} - {e}") from e

            if not isinstance(raw_config, dict):
                raise ConfigurationError(f"최상위 값이 매핑이 아님: {config_path}")

            config = self._substitute_env_vars(raw_config)
            self._snapshot = self._parse(config)

            logger.info(
                f"[ConfigStore] 설정 리로드 완료: v{self._snapshot.version}, "
                f"분류 {len(self._snapshot.taxonomy)}개 집합"
            )

    def _parse(self, config: dict[str, Any]) -> _Snapshot:
        scenario = config.get("scenario") or {}
        taxonomy = config.get("taxonomy") or {}
        report = config.get("report") or {}
        log = config.get("logging") or {}
        for name, section in (
            ("scenario", scenario),
            ("taxonomy", taxonomy),
            ("report", report),
            ("logging", log),
        ):
            if not isinstance(section, dict):
                raise ConfigurationError(f"{name} 섹션은 매핑이어야 함")

        snapshot = _Snapshot(version=str(config.get("version", "1.0.0")), scenario=dict(scenario))
        if taxonomy:
            snapshot.taxonomy = {str(k): [str(label) for label in v] for k, v in taxonomy.items()}
        try:
            snapshot.report = ReportConfig(
                relative_floor=float(report.get("relative_floor", 0.01)),
                top_n=int(report.get("top_n", 20)),
            )
        except (TypeError, ValueError) as e:
            raise ConfigurationError(f"report 섹션 값 오류: {e}") from e
        snapshot.logging = LoggingConfig(
            level=str(log.get("level", "INFO")).upper(),
            format=str(log.get("format", LoggingConfig.format)),
        )
        return snapshot

    def _create_default_config(self, config_path: str) -> None:
        """기본 설정 파일 생성"""
        default_config = {
            "version": "1.0.0",
            "scenario": {
                "hop_counts": [0, 1, 2, 3],
                "circuits": 4,
                "payload_bytes": 1024,
                "total_bytes_per_run": 5 * 1024 * 1024,
                "transport": "inproc",
                "clock": "cpu",
            },
            "taxonomy": {k: list(v) for k, v in DEFAULT_TAXONOMY.items()},
            "report": {"relative_floor": 0.01, "top_n": 20},
            "logging": {"level": "INFO"},
        }

        Path(config_path).parent.mkdir(parents=True, exist_ok=True)
        with open(config_path, "w", encoding="utf-8") as f:
            yaml.dump(default_config, f, default_flow_style=False, allow_unicode=True)

        logger.info(f"[ConfigStore] 기본 설정 파일 생성: {config_path}")

    def _substitute_env_vars(self, config: Any) -> Any:
        """설정 값에서 환경변수 치환

        ${VAR_NAME} 또는 $VAR_NAME 형식을 환경변수 값으로 치환합니다.
        """
        if isinstance(config, dict):
            return {k: self._substitute_env_vars(v) for k, v in config.items()}
        elif isinstance(config, list):
            return [self._substitute_env_vars(item) for item in config]
        elif isinstance(config, str):
            def replace(match: re.Match) -> str:
                return os.getenv(match.group(1), match.group(0))

            result = re.sub(r"\$\{([^}]+)\}", replace, config)
            return re.sub(r"\$([A-Z_][A-Z0-9_]*)", replace, result)
        return config

    @property
    def scenario_defaults(self) -> dict[str, Any]:
        """ScenarioConfig 기본값 (CLI 인자가 덮어씀)"""
        return dict(self._snapshot.scenario)

    @property
    def taxonomy(self) -> dict[str, list[str]]:
        return {k: list(v) for k, v in self._snapshot.taxonomy.items()}

    @property
    def report(self) -> ReportConfig:
        return self._snapshot.report

    @property
    def logging(self) -> LoggingConfig:
        return self._snapshot.logging

