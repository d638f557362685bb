"""
실험 하네스

시나리오 설정, hop/회로 스윕 실행, goodput 측정, 리포트 생성.
"""

from .bench import BenchResult, run_pipeline_bench
from .config import HarnessSettings, ScenarioConfig
from .report import (
    ReportTable,
    emit_absolute_table,
    emit_goodput_table,
    emit_relative_table,
    write_reports,
)
from .results import HopResult, RoleResult, ScenarioResult, goodput
from .runner import (
    HopRun,
    measure_goodput,
    run_hop,
    run_scenario,
    run_scenario_script,
    write_results,
)
from .scenario import Scenario, ScenarioCommand, parse_scenario, parse_scenario_file

__all__ = [
    # Config
    "ScenarioConfig",
    "HarnessSettings",
    # Scenario
    "Scenario",
    "ScenarioCommand",
    "parse_scenario",
    "parse_scenario_file",
    # Runner
    "HopRun",
    "run_hop",
    "run_scenario",
    "run_scenario_script",
    "measure_goodput",
    "write_results",
    # Results
    "HopResult",
    "RoleResult",
    "ScenarioResult",
    "goodput",
    # Report
    "ReportTable",
    "emit_relative_table",
    "emit_absolute_table",
    "emit_goodput_table",
    "write_reports",
    # Bench
    "BenchResult",
    "run_pipeline_bench",
]
