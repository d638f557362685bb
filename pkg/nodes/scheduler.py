"""
노드 스케줄러

- RoundRobinScheduler: 호출 스레드 하나에서 모든 노드를 돌아가며 step (결정적 모드)
- ThreadedScheduler: 노드마다 독립 스레드 (성능 모드)

두 스케줄러 모두 wait_for(predicate, timeout)를 제공합니다.
네트워크가 유휴 상태(처리 대기 데이터그램 0)인데 predicate가 거짓이면
더 이상 진행될 수 없으므로 즉시 False를 반환합니다.
"""

import logging
import threading
import time
from abc import ABC, abstractmethod
from typing import Callable, Sequence

from lib.transport import Network
from lib.types import ExecutionMode

from .base import Node

logger = logging.getLogger(__name__)

IDLE_SLEEP = 0.0005


class Scheduler(ABC):
    mode: ExecutionMode

    def __init__(self, network: Network, nodes: Sequence[Node] = ()):
        self.network = network
        self.nodes: list[Node] = list(nodes)

    def add(self, node: Node) -> None:
        self.nodes.append(node)

    def start(self) -> None:
        pass

    def stop(self) -> None:
        pass

    def poll(self) -> int:
        """호출 스레드에서 진행 가능한 만큼 진행 (스레드 모드는 no-op)"""
        return 0

    @abstractmethod
    def wait_for(self, predicate: Callable[[], bool], timeout: float) -> bool:
        """predicate가 참이 될 때까지 노드를 진행

        Returns:
            bool: 시간 내 참이 되면 True
        """

    def quiesce(self, timeout: float) -> bool:
        """처리 대기 중인 데이터그램이 없을 때까지 진행"""
        return self.wait_for(lambda: self.network.unfinished <= 0, timeout)

    def __enter__(self) -> "Scheduler":
        self.start()
        return self

    def __exit__(self, exc_type, exc_val, exc_tb) -> bool:
        self.stop()
        return False


class RoundRobinScheduler(Scheduler):
    """단일 컨텍스트 라운드로빈 전달"""

    mode = ExecutionMode.DETERMINISTIC

    def poll(self) -> int:
        return self.pump()

    def pump(self) -> int:
        """모든 노드를 한 번씩 step

        Returns:
            int: 처리한 데이터그램 총수
        """
        return sum(node.step() for node in self.nodes)

    def wait_for(self, predicate: Callable[[], bool], timeout: float) -> bool:
        deadline = time.monotonic() + timeout
        while True:
            if predicate():
                return True
            processed = self.pump()
            if processed:
                continue
            if predicate():
                return True
            if self.network.unfinished <= 0:
                return False

            now = time.monotonic()
            if now >= deadline:
                return False
            # 지연 중인 데이터그램 대기
            delay = IDLE_SLEEP
            next_at = self.network.next_delivery_at()
            if next_at is not None:
                delay = max(next_at - now, 0.0)
            time.sleep(min(delay, deadline - now))


class ThreadedScheduler(Scheduler):
    """노드별 독립 스레드"""

    mode = ExecutionMode.THREADED

    def __init__(self, network: Network, nodes: Sequence[Node] = (), poll_interval: float = 0.02):
        super().__init__(network, nodes)
        self.poll_interval = poll_interval
        self._stop = threading.Event()
        self._threads: list[threading.Thread] = []

    def start(self) -> None:
        if self._threads:
            return
        self._stop.clear()
        for node in self.nodes:
            thread = threading.Thread(
                target=node.serve,
                args=(self._stop, self.poll_interval),
                name=f"node-{node.name}",
                daemon=True,
            )
            thread.start()
            self._threads.append(thread)
        logger.debug(f"[Scheduler] 노드 스레드 {len(self._threads)}개 시작")

    def stop(self) -> None:
        self._stop.set()
        for thread in self._threads:
            thread.join()
        self._threads = []

    def wait_for(self, predicate: Callable[[], bool], timeout: float) -> bool:
        deadline = time.monotonic() + timeout
        while True:
            if predicate():
                return True
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                return False
            idle = self.network.wait_idle(timeout=min(self.poll_interval, remaining))
            if idle and not predicate():
                return False


def create_scheduler(
    mode: ExecutionMode, network: Network, nodes: Sequence[Node] = ()
) -> Scheduler:
    if ExecutionMode(mode) == ExecutionMode.THREADED:
        return ThreadedScheduler(network, nodes)
    return RoundRobinScheduler(network, nodes)
