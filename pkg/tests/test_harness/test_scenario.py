"""
시나리오 파일 파서 테스트
"""

from pathlib import Path

import pytest

from harness.config import ScenarioConfig
from harness.scenario import (
    BUILD_CIRCUITS,
    DESTROY_ALL,
    SEND,
    SNAPSHOT,
    parse_scenario,
    parse_scenario_file,
)
from lib.errors import ConfigurationError, ScenarioParseError


class TestParseScenario:
    """parse_scenario 테스트"""

    def test_basic_grammar(self):
        """명령 3개, offset 0, 1, 5"""
        scenario = parse_scenario("@0 build_circuits 4 3\n@1 send 1048576\n@5 destroy_all")

        assert [(c.offset, c.command, c.args) for c in scenario.commands] == [
            (0.0, BUILD_CIRCUITS, (4, 3)),
            (1.0, SEND, (1048576,)),
            (5.0, DESTROY_ALL, ()),
        ]
        assert [c.line for c in scenario.commands] == [1, 2, 3]

    def test_empty_file(self):
        """빈 파일 → 명령 없음, 기본 설정"""
        scenario = parse_scenario("")
        assert scenario.commands == []
        assert scenario.config == ScenarioConfig()

    def test_comments_and_blank_lines(self):
        text = "# hop sweep\n\n   \n@0.25 snapshot warmup\n"
        scenario = parse_scenario(text)
        assert scenario.commands[0].command == SNAPSHOT
        assert scenario.commands[0].args == ("warmup",)
        assert scenario.commands[0].offset == 0.25
        assert scenario.commands[0].line == 4

    def test_hop_counts_in_order(self):
        text = "@0 build_circuits 1 3\n@0 build_circuits 2 0\n@1 build_circuits 1 3\n"
        assert parse_scenario(text).hop_counts == [3, 0]

    @pytest.mark.parametrize(
        "text, line, column",
        [
            ("@x send 10", 1, 2),
            ("send 10", 1, 1),
            ("@0 send 10\n@-1 send 10", 2, 2),
            ("@0 fly 10", 1, 4),
            ("@0", 1, 3),
            ("@0 send", 1, 8),
            ("@0 send 10 20", 1, 12),
            ("@0 send ten", 1, 9),
            ("@0 build_circuits 0 3", 1, 19),
            ("@0 build_circuits 1 4", 1, 21),
            ("@0 destroy_all now", 1, 16),
        ],
    )
    def test_parse_errors(self, text, line, column):
        """문법 오류 → 줄/열 번호를 가진 에러"""
        with pytest.raises(ScenarioParseError) as exc_info:
            parse_scenario(text)
        assert exc_info.value.line == line
        assert exc_info.value.column == column


class TestSetCommand:
    """set 명령 테스트"""

    def test_set_overrides_config(self):
        text = "set payload_bytes 512\n"
        with pytest.raises(ScenarioParseError):
            parse_scenario(text)  # offset 없음

        scenario = parse_scenario(
            "@0 set payload_bytes 512\n@0 set deterministic_keys true\n@0 set clock wall\n"
        )
        assert scenario.config.payload_bytes == 512
        assert scenario.config.deterministic_keys is True
        assert scenario.config.clock.value == "wall"
        assert scenario.commands == []

    def test_set_on_base(self):
        base = ScenarioConfig(circuits=7)
        scenario = parse_scenario("@0 set rng_seed 9", base)
        assert scenario.config.circuits == 7
        assert scenario.config.rng_seed == 9

    def test_set_list_value(self):
        scenario = parse_scenario("@0 set hop_counts [0,3]")
        assert scenario.config.hop_counts == [0, 3]

    def test_unknown_key(self):
        with pytest.raises(ScenarioParseError) as exc_info:
            parse_scenario("@0 set colour blue")
        assert exc_info.value.column == 8

    def test_invalid_value(self):
        with pytest.raises(ScenarioParseError) as exc_info:
            parse_scenario("@0 set circuits 0")
        assert exc_info.value.column == 17


class TestParseScenarioFile:
    def test_file(self, tmp_path):
        path = tmp_path / "sweep.scenario"
        path.write_text("@0 build_circuits 2 1\n@0.5 send 4096\n", encoding="utf-8")
        scenario = parse_scenario_file(path)
        assert len(scenario.commands) == 2

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigurationError):
            parse_scenario_file(tmp_path / "missing.scenario")

    def test_bundled_scenario(self):
        """저장소에 포함된 시나리오"""
        path = Path(__file__).parent.parent.parent / "scenarios" / "hop_sweep.scenario"
        scenario = parse_scenario_file(path)
        assert scenario.hop_counts == [0, 3]
        assert scenario.config.payload_bytes == 1024
        assert scenario.config.deterministic_keys
