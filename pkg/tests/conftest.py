"""
Pytest 설정 및 공통 Fixture
"""

import random

import pytest

from lib.address import Address
from lib.crypto import LayerKey
from lib.transport import InProcessRouter
from lib.types import ExecutionMode, NodeRole
from nodes import (
    HandshakeMode,
    RelayNode,
    SeedNode,
    SinkNode,
    create_scheduler,
)

TEST_PSK = b"\x42" * 32


@pytest.fixture
def rng() -> random.Random:
    """고정 시드 난수 생성기"""
    return random.Random(1234)


@pytest.fixture
def layer_keys(rng: random.Random) -> list[LayerKey]:
    """3-hop 회로용 레이어 키 (seed 측)"""
    return [LayerKey(rng.randbytes(32)) for _ in range(3)]


@pytest.fixture
def router():
    """지연 없는 프로세스 내 라우터"""
    network = InProcessRouter()
    yield network
    network.close()


class Tunnel:
    """seed, relay들, exit, sink를 한 라우터에 묶은 테스트 토폴로지"""

    def __init__(
        self,
        router: InProcessRouter,
        relays: int = 2,
        mode=HandshakeMode.PSK,
        execution=ExecutionMode.DETERMINISTIC,
    ):
        kwargs = {"handshake_mode": mode, "psk": TEST_PSK if mode == HandshakeMode.PSK else None}
        self.router = router
        self.seed = SeedNode(router.bind(Address("127.0.0.1", 0)), rng=random.Random(1), **kwargs)
        self.relays = [
            RelayNode(router.bind(Address("127.0.0.1", 0)), rng=random.Random(10 + i), **kwargs)
            for i in range(relays)
        ]
        self.exit = RelayNode(
            router.bind(Address("127.0.0.1", 0)),
            role=NodeRole.EXIT,
            rng=random.Random(20),
            **kwargs,
        )
        self.sink = SinkNode(router.bind(Address("127.0.0.1", 0)), **kwargs)
        self.scheduler = create_scheduler(
            execution, router, [self.seed, *self.relays, self.exit, self.sink]
        )
        self.seed.attach(self.scheduler.wait_for)
        self.scheduler.start()

    def path(self, hops: int) -> list[Address]:
        """hops개 hop 경로 (마지막은 항상 exit)"""
        if hops == 0:
            return []
        return [relay.address for relay in self.relays[: hops - 1]] + [self.exit.address]

    def build(self, hops: int):
        return self.seed.create_circuit(self.path(hops), self.sink.address if hops else None)

    def settle(self) -> bool:
        return self.scheduler.quiesce(1.0)

    @property
    def nodes(self) -> list:
        return [self.seed, *self.relays, self.exit, self.sink]

    def close(self) -> None:
        self.seed.close()
        self.scheduler.stop()


@pytest.fixture
def tunnel(router: InProcessRouter) -> Tunnel:
    """PSK 핸드셰이크를 쓰는 3-hop 가능 토폴로지"""
    tunnel = Tunnel(router)
    yield tunnel
    tunnel.close()


@pytest.fixture
def fresh_config_store():
    """ConfigStore 싱글톤 리셋"""
    from config.config_manager import ConfigStore

    ConfigStore._instance = None
    yield ConfigStore()
    ConfigStore._instance = None
