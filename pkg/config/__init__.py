"""
설정 관리 모듈

ConfigStore를 통해 실험 기본값과 리포트 설정을 관리합니다.
"""

from .config_manager import ConfigStore, LoggingConfig, ReportConfig

__all__ = ["ConfigStore", "LoggingConfig", "ReportConfig"]
