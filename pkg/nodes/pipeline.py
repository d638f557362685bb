"""
파이프라인 송신 스테이지

crypto 스테이지(호출 스레드)가 암호화된 셀을 bounded FIFO에 넣고,
별도 네트워크 스레드가 깨어날 때마다 쌓인 셀을 한꺼번에 꺼내 전송합니다.

- 큐가 가득 차면 crypto 스테이지는 더 진행하지 않음 (드롭 없음):
  네트워크 스테이지가 전송 중이면 끝날 때까지 블로킹하고, 아직 깨어나지 못했으면
  호출 스레드가 큐에 남은 셀을 순서대로 직접 전송한 뒤 추가
- 큐에서 꺼내기와 전송은 같은 송신 락 안에서 일어나므로 전체 FIFO 순서 보존
- flush/close는 큐를 완전히 비운 뒤 반환
"""

import contextlib
import logging
import threading
from collections import deque
from typing import Callable, Generic, TypeVar

from lib.errors import CircuitStateError, TunnelError
from lib.profiler import Profiler, activate

logger = logging.getLogger(__name__)

T = TypeVar("T")

DEFAULT_CAPACITY = 1024


class SendPipeline(Generic[T]):
    """다중 생산자 / 단일 네트워크 스레드 bounded 송신 큐"""

    def __init__(
        self,
        transmit: Callable[[T], None],
        capacity: int = DEFAULT_CAPACITY,
        profiler: Profiler | None = None,
        name: str = "send-pipeline",
    ):
        """
        Args:
            transmit: 항목마다 호출할 전송 함수
            capacity: 큐 용량 (1 이상)
            profiler: 전송 중 활성화할 프로파일러
            name: 스레드 이름
        """
        if capacity < 1:
            raise ValueError(f"큐 용량은 1 이상이어야 함: {capacity}")
        self.capacity = capacity
        self._transmit = transmit
        self._profiler = profiler
        self._items: deque[T] = deque()
        self._cond = threading.Condition()
        self._send_lock = threading.Lock()
        self._pending = 0  # 제출됐지만 전송이 끝나지 않은 항목 수
        self._thread = threading.Thread(target=self._run, name=name, daemon=True)
        self._closed = False
        self.transmitted = 0
        self.errors = 0
        self.inline_drains = 0

    def start(self) -> "SendPipeline[T]":
        self._thread.start()
        logger.debug(f"[Pipeline] 네트워크 스테이지 시작 (capacity={self.capacity})")
        return self

    @property
    def running(self) -> bool:
        return self._thread.is_alive()

    def submit(self, item: T) -> None:
        """항목 추가 (큐가 가득 차면 비워질 때까지 진행하지 않음)

        Raises:
            CircuitStateError: 닫힌 파이프라인
        """
        while True:
            with self._cond:
                if self._closed:
                    raise CircuitStateError("닫힌 파이프라인에 제출")
                if len(self._items) < self.capacity:
                    self._items.append(item)
                    self._pending += 1
                    self._cond.notify_all()
                    return
            self._drain(inline=True)

    def flush(self) -> None:
        """제출된 모든 항목이 전송될 때까지 대기"""
        with self._cond:
            while self._pending:
                self._cond.wait()

    def close(self) -> None:
        """남은 항목을 모두 전송한 뒤 네트워크 스레드 종료"""
        with self._cond:
            if self._closed:
                return
            self._closed = True
            self._cond.notify_all()
        if self._thread.is_alive():
            self._thread.join()
        else:
            self._drain(inline=True)
        logger.debug(
            f"[Pipeline] 종료: transmitted={self.transmitted}, errors={self.errors}, "
            f"inline_drains={self.inline_drains}"
        )

    def _drain(self, inline: bool = False) -> None:
        """큐에 쌓인 항목을 한꺼번에 꺼내 순서대로 전송"""
        with self._send_lock:
            with self._cond:
                batch = list(self._items)
                self._items.clear()
                # 공간이 생겼으므로 대기 중인 생산자를 깨움
                self._cond.notify_all()
            if not batch:
                return
            if inline:
                self.inline_drains += 1
            context = (
                activate(self._profiler) if self._profiler is not None else contextlib.nullcontext()
            )
            try:
                with context:
                    for item in batch:
                        try:
                            self._transmit(item)
                            self.transmitted += 1
                        except TunnelError as e:
                            self.errors += 1
                            logger.warning(f"[Pipeline] 전송 실패: {e}")
            finally:
                with self._cond:
                    self._pending -= len(batch)
                    self._cond.notify_all()

    def _run(self) -> None:
        while True:
            with self._cond:
                while not self._items and not self._closed:
                    self._cond.wait()
                if not self._items and self._closed:
                    return
            self._drain()

    def __enter__(self) -> "SendPipeline[T]":
        return self.start()

    def __exit__(self, exc_type, exc_val, exc_tb) -> bool:
        self.close()
        return False
