"""
tunnelprof CLI 엔트리포인트

사용법:
    # hop 수별 기본 실험 (config/tunnelprof.yaml 기본값)
    tunnelprof run --hops 0,1,2,3 --out results/

    # 시나리오 파일 실행
    tunnelprof scenario scenarios/hop_sweep.scenario --out results/sweep

    # 파이프라인 모델 검증 (합성 스테이지 비용)
    tunnelprof pipeline-bench --crypto-ms 30 --send-ms 20 --other-ms 50 --packets 100

종료 코드: 0 성공, 2 설정 오류, 3 실행 실패 (에러 행 포함)
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Sequence

from dotenv import load_dotenv

from config import ConfigStore
from lib.errors import (
    EXIT_OK,
    EXIT_RUN_FAILURE,
    ErrorClassifier,
    TunnelError,
)
from lib.types import ClockKind, ExecutionMode, TransportKind

from .bench import run_pipeline_bench
from .config import HarnessSettings, ScenarioConfig
from .report import write_reports
from .results import ScenarioResult
from .runner import run_scenario, run_scenario_script, write_results
from .scenario import parse_scenario_file

logger = logging.getLogger(__name__)

PROJECT_ROOT = Path(__file__).parent.parent
LOG_FORMAT = "%(asctime)s [%(levelname)s] %(name)s: %(message)s"


def setup_logging(level: str = "INFO", fmt: str = LOG_FORMAT) -> None:
    """로깅 설정"""
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.INFO),
        format=fmt,
        datefmt="%Y-%m-%d %H:%M:%S",
    )
    logging.getLogger().setLevel(getattr(logging, level.upper(), logging.INFO))


def load_env_file(env_file: str | None = None) -> Path | None:
    """.env 파일 로드 (지정 파일 → 현재 디렉토리 → 프로젝트 루트 순)"""
    candidates = (
        [Path(env_file)] if env_file else [Path.cwd() / ".env", PROJECT_ROOT / ".env"]
    )
    for path in candidates:
        if path.exists():
            load_dotenv(path)
            return path
    return None


def _hop_list(value: str) -> list[int]:
    try:
        return [int(part) for part in value.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"hop 목록은 쉼표로 구분한 정수: {value}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tunnelprof",
        description="onion 라우팅 터널 프로파일링 하네스",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
예시:
    # 0~3 hop, 회로 4개, 회로당 5 MiB
    tunnelprof run --hops 0,1,2,3 --circuits 4 --out results/

    # 결정적 키와 시드로 재현 가능한 실행
    tunnelprof run --hops 0,3 --deterministic-keys --seed 7

    # 실제 UDP 소켓, 파이프라인 송신
    tunnelprof run --transport udp --pipelined --clock wall

    # 시나리오 파일
    tunnelprof scenario scenarios/hop_sweep.scenario --out results/sweep

    # 파이프라인 모델 검증
    tunnelprof pipeline-bench --crypto-ms 30 --send-ms 20 --other-ms 50
        """,
    )
    parser.add_argument(
        "--config", default=None, help="설정 파일 경로 (기본: TUNNELPROF_CONFIG_PATH)"
    )
    parser.add_argument("--env-file", default=None, help=".env 파일 경로")
    parser.add_argument(
        "--log-level",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        default=None,
        help="로그 레벨",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    # run
    run = sub.add_parser("run", help="hop 수별 실험 실행")
    run.add_argument("--hops", type=_hop_list, default=None, help="hop 수 목록 (예: 0,1,2,3)")
    run.add_argument("--circuits", type=int, default=None, help="hop 수마다 만들 회로 수")
    run.add_argument("--payload-bytes", type=int, default=None, help="패킷당 데이터 크기")
    run.add_argument("--total-bytes", type=int, default=None, help="회로당 전송 바이트")
    run.add_argument("--transport", choices=[k.value for k in TransportKind], default=None)
    run.add_argument("--clock", choices=[k.value for k in ClockKind], default=None)
    run.add_argument("--pipelined", action="store_true", default=None, help="파이프라인 송신")
    run.add_argument(
        "--deterministic-keys", action="store_true", default=None, help="PSK 기반 결정적 키"
    )
    run.add_argument("--seed", type=int, default=None, help="난수 시드")
    run.add_argument("--latency-ms", type=float, default=None, help="링크 지연 (inproc 전용)")
    run.add_argument(
        "--concurrent", action="store_true", default=None, help="회로를 번갈아 전송"
    )
    run.add_argument(
        "--cache-addresses", action="store_true", default=None, help="주소 변환 캐시 사용"
    )
    run.add_argument("--execution", choices=[m.value for m in ExecutionMode], default=None)
    run.add_argument("--out", default=None, help="결과 디렉토리 (기본: TUNNELPROF_OUT_DIR)")

    # scenario
    scenario = sub.add_parser("scenario", help="시나리오 파일 실행")
    scenario.add_argument("file", help="시나리오 파일")
    scenario.add_argument("--out", default=None, help="결과 디렉토리")

    # pipeline-bench
    bench = sub.add_parser("pipeline-bench", help="합성 스테이지 비용으로 파이프라인 모델 검증")
    bench.add_argument("--crypto-ms", type=float, default=30.0)
    bench.add_argument("--send-ms", type=float, default=20.0)
    bench.add_argument("--other-ms", type=float, default=50.0)
    bench.add_argument("--packets", type=int, default=100)
    bench.add_argument("--out", default=None, help="bench.json 저장 디렉토리")

    return parser


def scenario_overrides(args: argparse.Namespace) -> dict[str, Any]:
    """run 서브커맨드 인자 → ScenarioConfig 필드 (지정한 값만)"""
    overrides = {
        "hop_counts": args.hops,
        "circuits": args.circuits,
        "payload_bytes": args.payload_bytes,
        "total_bytes_per_run": args.total_bytes,
        "transport": args.transport,
        "clock": args.clock,
        "pipelined": args.pipelined,
        "deterministic_keys": args.deterministic_keys,
        "rng_seed": args.seed,
        "link_latency": None if args.latency_ms is None else args.latency_ms / 1000,
        "concurrent_circuits": args.concurrent,
        "cache_addresses": args.cache_addresses,
        "execution": args.execution,
    }
    return {key: value for key, value in overrides.items() if value is not None}


def _save(result: ScenarioResult, out_dir: str, store: ConfigStore) -> int:
    taxonomy = store.taxonomy
    write_results(result, out_dir, taxonomy)
    write_reports(
        result,
        out_dir,
        floor=store.report.relative_floor,
        top_n=store.report.top_n,
        taxonomy=taxonomy,
    )
    for hop in result.results:
        if hop.ok:
            speed = f"{hop.goodput:,.0f} B/s" if hop.goodput else "N/A"
            print(f"  {hop.hops}-hop: {hop.bytes_received:,} bytes, goodput {speed}")
        else:
            print(f"  {hop.hops}-hop: 실패 - {hop.error}")
    print(f"결과: {Path(out_dir).resolve()}")
    return EXIT_RUN_FAILURE if result.failed else EXIT_OK


def cmd_run(args: argparse.Namespace, settings: HarnessSettings, store: ConfigStore) -> int:
    config = ScenarioConfig.build(
        store.scenario_defaults, {"udp_host": settings.udp_host}, scenario_overrides(args)
    )
    result = run_scenario(config, store.taxonomy)
    return _save(result, args.out or settings.out_dir, store)


def cmd_scenario(args: argparse.Namespace, settings: HarnessSettings, store: ConfigStore) -> int:
    base = ScenarioConfig.build(store.scenario_defaults, {"udp_host": settings.udp_host})
    scenario = parse_scenario_file(args.file, base)
    result = run_scenario_script(scenario, store.taxonomy)
    return _save(result, args.out or settings.out_dir, store)


def cmd_pipeline_bench(
    args: argparse.Namespace, settings: HarnessSettings, store: ConfigStore
) -> int:
    result = run_pipeline_bench(args.crypto_ms, args.send_ms, args.other_ms, args.packets)
    print(f"순차:       {result.sequential_seconds:.3f}s")
    print(f"파이프라인: {result.pipelined_seconds:.3f}s")
    print(f"측정 속도 향상: {result.measured_speedup:.1%}")
    print(f"추정 속도 향상: {result.estimated_speedup:.1%}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "bench.json").write_text(
            json.dumps(result.model_dump(mode="json"), indent=2), encoding="utf-8"
        )
    return EXIT_OK


COMMANDS = {
    "run": cmd_run,
    "scenario": cmd_scenario,
    "pipeline-bench": cmd_pipeline_bench,
}


def main(argv: Sequence[str] | None = None) -> int:
    """CLI 메인 함수

    Returns:
        int: 종료 코드
    """
    args = build_parser().parse_args(argv)
    env_path = load_env_file(args.env_file)

    settings = HarnessSettings()
    setup_logging(args.log_level or settings.log_level or "INFO")
    if env_path is not None:
        logger.debug(f"[Config] 환경 파일 로드: {env_path}")

    try:
        store = ConfigStore()
        store.reload(args.config or settings.config_path)
        if args.log_level is None and settings.log_level is None:
            logging.getLogger().setLevel(store.logging.level)
        return COMMANDS[args.command](args, settings, store)
    except (TunnelError, ValueError, OSError) as e:
        logger.error(ErrorClassifier.format_message(e))
        return ErrorClassifier.exit_code(e)


def run() -> None:
    """tunnelprof 실행 (엔트리포인트)"""
    sys.exit(main())


if __name__ == "__main__":
    run()
