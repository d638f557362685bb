"""
에러 분류 시스템 테스트

카테고리 분류와 CLI 종료 코드 매핑 테스트.
"""

import pytest

from lib.errors import (
    EXIT_CONFIG_ERROR,
    EXIT_RUN_FAILURE,
    AuthenticationError,
    BindError,
    BuildFailureError,
    ConfigurationError,
    ErrorCategory,
    ErrorClassifier,
    MalformedCellError,
    ReportError,
    ScenarioParseError,
    TunnelError,
    UndefinedGoodputError,
)


class TestErrorClassifier:
    """에러 분류기 테스트"""

    @pytest.mark.parametrize(
        "error, expected",
        [
            (MalformedCellError("short"), ErrorCategory.PROTOCOL),
            (AuthenticationError("tag"), ErrorCategory.PROTOCOL),
            (BuildFailureError("timeout", hop_index=2), ErrorCategory.RUN),
            (UndefinedGoodputError("zero"), ErrorCategory.RUN),
            (ReportError("missing"), ErrorCategory.RUN),
            (ConfigurationError("bad"), ErrorCategory.CONFIG),
            (BindError("in use"), ErrorCategory.CONFIG),
            (ScenarioParseError("bad", line=1), ErrorCategory.CONFIG),
        ],
    )
    def test_classify_tunnel_errors(self, error, expected):
        """TunnelError는 자체 카테고리 사용"""
        assert ErrorClassifier.classify(error) == expected

    def test_classify_os_error(self):
        """OSError는 실행 실패"""
        assert ErrorClassifier.classify(OSError("disk full")) == ErrorCategory.RUN

    def test_classify_value_error(self):
        """ValueError는 설정 오류"""
        assert ErrorClassifier.classify(ValueError("invalid")) == ErrorCategory.CONFIG

    def test_classify_unknown(self):
        """분류되지 않음: 알 수 없는 에러"""
        assert ErrorClassifier.classify(Exception("Some random error")) == ErrorCategory.UNKNOWN

    def test_category_override(self):
        """생성자에서 카테고리 지정"""
        error = TunnelError("custom", category=ErrorCategory.CONFIG)
        assert ErrorClassifier.classify(error) == ErrorCategory.CONFIG


class TestExitCode:
    """CLI 종료 코드 테스트"""

    def test_config_error_exit_code(self):
        """설정 오류 → 2"""
        assert ErrorClassifier.exit_code(ConfigurationError("bad")) == EXIT_CONFIG_ERROR
        assert ErrorClassifier.exit_code(BindError("in use")) == EXIT_CONFIG_ERROR

    def test_run_failure_exit_code(self):
        """그 외 → 3"""
        assert ErrorClassifier.exit_code(BuildFailureError("x", hop_index=1)) == EXIT_RUN_FAILURE
        assert ErrorClassifier.exit_code(MalformedCellError("x")) == EXIT_RUN_FAILURE
        assert ErrorClassifier.exit_code(RuntimeError("x")) == EXIT_RUN_FAILURE


class TestErrorDetails:
    """에러 속성 테스트"""

    def test_build_failure_hop_index(self):
        """빌드 실패는 hop 번호를 가짐"""
        error = BuildFailureError("hop 2 timeout", hop_index=2)
        assert error.hop_index == 2

    def test_scenario_parse_error_position(self):
        """파싱 에러는 줄/열 번호를 메시지에 포함"""
        error = ScenarioParseError("bad offset", line=3, column=2)
        assert error.line == 3
        assert error.column == 2
        assert str(error).startswith("3:2:")

    def test_format_message_label(self):
        """메시지에 카테고리 라벨 포함"""
        message = ErrorClassifier.format_message(ConfigurationError("missing key"))
        assert message.startswith("[설정 오류]")
        assert "ConfigurationError" in message
        assert "missing key" in message
