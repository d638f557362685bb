"""
터널 노드

seed / relay / exit / sink 역할의 상태 머신과 스케줄러.
"""

from .base import Node
from .handshake import ClientHandshake, HandshakeMode, server_handshake
from .pipeline import SendPipeline
from .relay import RelayNode, RelayTableEntry
from .scheduler import (
    RoundRobinScheduler,
    Scheduler,
    ThreadedScheduler,
    create_scheduler,
)
from .seed import Circuit, Hop, SeedNode
from .sink import SinkCounters, SinkNode, StreamDigest

__all__ = [
    "Node",
    # Handshake
    "ClientHandshake",
    "HandshakeMode",
    "server_handshake",
    # Roles
    "SeedNode",
    "RelayNode",
    "RelayTableEntry",
    "SinkNode",
    "SinkCounters",
    "StreamDigest",
    "Circuit",
    "Hop",
    # Scheduling
    "SendPipeline",
    "Scheduler",
    "RoundRobinScheduler",
    "ThreadedScheduler",
    "create_scheduler",
]
