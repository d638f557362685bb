"""
에러 분류 시스템

터널 구성요소의 예외를 카테고리별로 분류하여 CLI 종료 코드와
데이터그램 드롭 처리에 활용.
"""

from enum import Enum


class ErrorCategory(str, Enum):
    """에러 카테고리"""

    CONFIG = "config"  # 설정 오류, 시나리오 파싱 오류, 바인드 실패
    RUN = "run"  # 회로 빌드 실패, 상태 오류, 측정 불가
    PROTOCOL = "protocol"  # 잘못된 셀/주소, 인증 실패 (드롭 대상)
    UNKNOWN = "unknown"


# CLI 종료 코드
EXIT_OK = 0
EXIT_CONFIG_ERROR = 2
EXIT_RUN_FAILURE = 3


class TunnelError(Exception):
    """터널 기본 에러"""

    category = ErrorCategory.UNKNOWN

    def __init__(self, message: str, category: ErrorCategory | None = None):
        super().__init__(message)
        if category is not None:
            self.category = category


# ============================================================================
# 프로토콜 에러 (onion-core)
# ============================================================================


class MalformedAddressError(TunnelError):
    """주소 바이너리 형식 오류 (6바이트 아님)"""

    category = ErrorCategory.PROTOCOL


class MalformedCellError(TunnelError):
    """셀 파싱 오류 (짧은 버퍼, 알 수 없는 타입, 길이 불일치)"""

    category = ErrorCategory.PROTOCOL


class OversizeError(TunnelError):
    """페이로드가 레이어 오버헤드 예산 또는 데이터그램 한도를 초과"""

    category = ErrorCategory.PROTOCOL


class AuthenticationError(TunnelError):
    """AEAD 인증 실패 (잘못된 키, 손상된 암호문, 재사용된 nonce)"""

    category = ErrorCategory.PROTOCOL


class NoLayerError(TunnelError):
    """벗겨낼 레이어가 없음"""

    category = ErrorCategory.PROTOCOL


# ============================================================================
# 실행 에러 (nodes / profiler / harness / report)
# ============================================================================


class CircuitStateError(TunnelError):
    """회로가 요청된 작업에 맞는 상태가 아님"""

    category = ErrorCategory.RUN


class BuildFailureError(TunnelError):
    """회로 빌드 실패 (핸드셰이크 타임아웃)"""

    category = ErrorCategory.RUN

    def __init__(self, message: str, hop_index: int):
        super().__init__(message)
        self.hop_index = hop_index


class ProfilerStateError(TunnelError):
    """프로파일러 상태 오류 (start 없이 stop 등)"""

    category = ErrorCategory.RUN


class UndefinedEstimateError(TunnelError):
    """총 시간이 0이라 파이프라인 속도 향상 추정 불가"""

    category = ErrorCategory.RUN


class UndefinedGoodputError(TunnelError):
    """전송 시간이 0이라 goodput 계산 불가"""

    category = ErrorCategory.RUN


class ReportError(TunnelError):
    """리포트 생성 오류 (결과에 요청한 (hop, role) 셀이 없음)"""

    category = ErrorCategory.RUN


# ============================================================================
# 설정 에러
# ============================================================================


class ConfigurationError(TunnelError):
    """설정 오류"""

    category = ErrorCategory.CONFIG


class BindError(TunnelError):
    """엔드포인트 바인드 실패 (주소 사용 중)"""

    category = ErrorCategory.CONFIG


class ScenarioParseError(TunnelError):
    """시나리오 파일 파싱 오류"""

    category = ErrorCategory.CONFIG

    def __init__(self, message: str, line: int, column: int = 1):
        super().__init__(f"{line}:{column}: {message}")
        self.line = line
        self.column = column


class ErrorClassifier:
    """에러 분류기"""

    @classmethod
    def classify(cls, error: Exception) -> ErrorCategory:
        """에러를 분류하여 카테고리 반환

        Args:
            error: 분류할 예외 객체

        Returns:
            ErrorCategory: 에러 카테고리
        """
        if isinstance(error, TunnelError):
            return error.category

        # 예외 타입 기반 분류
        if isinstance(error, (TimeoutError, ConnectionError, OSError)):
            return ErrorCategory.RUN

        if isinstance(error, (ValueError, KeyError)):
            return ErrorCategory.CONFIG

        return ErrorCategory.UNKNOWN

    @classmethod
    def exit_code(cls, error: Exception) -> int:
        """CLI 종료 코드 반환 (설정 오류 2, 그 외 실행 실패 3)"""
        if cls.classify(error) == ErrorCategory.CONFIG:
            return EXIT_CONFIG_ERROR
        return EXIT_RUN_FAILURE

    @classmethod
    def format_message(cls, error: Exception, include_traceback: bool = False) -> str:
        """에러 메시지 포맷팅

        Args:
            error: 포맷팅할 예외 객체
            include_traceback: 상세 스택 트레이스 포함 여부

        Returns:
            str: 카테고리 라벨이 포함된 에러 메시지
        """
        category = cls.classify(error)
        label = {
            ErrorCategory.CONFIG: "[설정 오류]",
            ErrorCategory.RUN: "[실행 실패]",
            ErrorCategory.PROTOCOL: "[프로토콜 오류]",
            ErrorCategory.UNKNOWN: "[분류되지 않음]",
        }

        message = f"{label[category]} {type(error).__name__}: {str(error)}"

        if include_traceback:
            import traceback

            message += f"\n\n상세 정보:\n{traceback.format_exc()}"

        return message
