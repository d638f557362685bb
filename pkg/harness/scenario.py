"""
시나리오 파일 파서

형식 (한 줄에 명령 하나):
    # 주석과 빈 줄은 무시
    @<offset 초> <command> <args...>

명령:
    build_circuits <n> <hops>   hops개 hop을 거치는 회로 n개 구성
    send <bytes>                활성 회로마다 bytes 바이트 전송
    destroy_all                 모든 회로 제거
    snapshot <label>            현재 프로파일 기록
    set <key> <value>           ScenarioConfig 필드 덮어쓰기 (파싱 시 적용)

offset은 실행 시작 기준 최소 시작 시각입니다. 명령은 파일 순서대로 실행되며,
앞 명령이 늦게 끝나면 다음 명령은 offset을 기다리지 않고 바로 시작합니다.

Examples:
    >>> scenario = parse_scenario("@0 build_circuits 4 3\\n@1 send 1048576\\n@5 destroy_all")
    >>> [(c.offset, c.command) for c in scenario.commands]
    [(0.0, 'build_circuits'), (1.0, 'send'), (5.0, 'destroy_all')]
"""

import logging
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from lib.errors import ConfigurationError, ScenarioParseError

from .config import VALID_HOPS, ScenarioConfig

logger = logging.getLogger(__name__)

BUILD_CIRCUITS = "build_circuits"
SEND = "send"
DESTROY_ALL = "destroy_all"
SNAPSHOT = "snapshot"
SET = "set"

# 명령 -> 인자 수
COMMAND_ARITY: dict[str, int] = {
    BUILD_CIRCUITS: 2,
    SEND: 1,
    DESTROY_ALL: 0,
    SNAPSHOT: 1,
    SET: 2,
}

_TOKEN = re.compile(r"\S+")


@dataclass(frozen=True)
class ScenarioCommand:
    """시간 지정 명령 하나"""

    offset: float
    command: str
    args: tuple[Any, ...] = ()
    line: int = 0


@dataclass
class Scenario:
    """파싱된 시나리오 (설정 + 명령 목록)"""

    config: ScenarioConfig
    commands: list[ScenarioCommand] = field(default_factory=list)

    @property
    def hop_counts(self) -> list[int]:
        """build_circuits가 사용하는 hop 수 (등장 순서, 중복 제거)"""
        seen: list[int] = []
        for cmd in self.commands:
            if cmd.command == BUILD_CIRCUITS and cmd.args[1] not in seen:
                seen.append(cmd.args[1])
        return seen


def parse_scenario_file(path: str | Path, base: ScenarioConfig | None = None) -> Scenario:
    """시나리오 파일 파싱

    Args:
        path: 시나리오 파일 경로
        base: set 명령이 덮어쓸 기본 설정 (없으면 ScenarioConfig 기본값)

    Raises:
        ConfigurationError: 파일을 읽을 수 없음
        ScenarioParseError: 문법 오류 (줄, 열 포함)
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigurationError(f"시나리오 파일 읽기 실패: {path} - {e}") from e
    scenario = parse_scenario(text, base)
    logger.info(f"[Scenario] {path.name}: 명령 {len(scenario.commands)}개")
    return scenario


def parse_scenario(text: str, base: ScenarioConfig | None = None) -> Scenario:
    """시나리오 텍스트 파싱

    Raises:
        ScenarioParseError: 문법 오류 (줄, 열 포함)
    """
    config = base or ScenarioConfig()
    commands: list[ScenarioCommand] = []

    for line_no, raw in enumerate(text.splitlines(), start=1):
        tokens = [(m.group(0), m.start() + 1) for m in _TOKEN.finditer(raw)]
        if not tokens or tokens[0][0].startswith("#"):
            continue

        offset = _parse_offset(tokens[0], line_no)
        if len(tokens) < 2:
            raise ScenarioParseError(
                "명령이 없음", line=line_no, column=len(raw.rstrip()) + 1
            )

        name, name_col = tokens[1]
        arity = COMMAND_ARITY.get(name)
        if arity is None:
            raise ScenarioParseError(f"알 수 없는 명령: {name}", line=line_no, column=name_col)

        arg_tokens = tokens[2:]
        if len(arg_tokens) != arity:
            column = arg_tokens[arity][1] if len(arg_tokens) > arity else len(raw.rstrip()) + 1
            raise ScenarioParseError(
                f"{name}: 인자 {arity}개 필요, {len(arg_tokens)}개 받음",
                line=line_no,
                column=column,
            )

        if name == SET:
            config = _apply_set(config, arg_tokens, line_no)
            continue

        args = _parse_args(name, arg_tokens, line_no)
        commands.append(ScenarioCommand(offset=offset, command=name, args=args, line=line_no))

    return Scenario(config=config, commands=commands)


def _parse_offset(token: tuple[str, int], line_no: int) -> float:
    text, column = token
    if not text.startswith("@"):
        raise ScenarioParseError(f"'@<offset>'으로 시작해야 함: {text}", line=line_no, column=column)
    try:
        offset = float(text[1:])
    except ValueError:
        raise ScenarioParseError(
            f"잘못된 offset: {text}", line=line_no, column=column + 1
        ) from None
    if offset < 0 or not math.isfinite(offset):
        raise ScenarioParseError(f"offset은 0 이상: {text}", line=line_no, column=column + 1)
    return offset


def _parse_int(token: tuple[str, int], line_no: int, minimum: int = 0) -> int:
    text, column = token
    try:
        value = int(text)
    except ValueError:
        raise ScenarioParseError(f"정수가 아님: {text}", line=line_no, column=column) from None
    if value < minimum:
        raise ScenarioParseError(f"{minimum} 이상이어야 함: {text}", line=line_no, column=column)
    return value


def _parse_args(name: str, tokens: list[tuple[str, int]], line_no: int) -> tuple[Any, ...]:
    if name == BUILD_CIRCUITS:
        count = _parse_int(tokens[0], line_no, minimum=1)
        hops = _parse_int(tokens[1], line_no)
        if hops not in VALID_HOPS:
            raise ScenarioParseError(
                f"hop 수는 0~3: {hops}", line=line_no, column=tokens[1][1]
            )
        return (count, hops)
    if name == SEND:
        return (_parse_int(tokens[0], line_no),)
    if name == SNAPSHOT:
        return (tokens[0][0],)
    return ()


def _apply_set(
    config: ScenarioConfig, tokens: list[tuple[str, int]], line_no: int
) -> ScenarioConfig:
    (key, key_col), (raw_value, value_col) = tokens
    if key not in ScenarioConfig.model_fields:
        raise ScenarioParseError(f"알 수 없는 설정 키: {key}", line=line_no, column=key_col)
    try:
        value = yaml.safe_load(raw_value)
    except yaml.YAMLError:
        value = raw_value
    try:
        return config.with_overrides(**{key: value})
    except ConfigurationError as e:
        raise ScenarioParseError(
            f"set {key} 실패: {e}", line=line_no, column=value_col
        ) from e
