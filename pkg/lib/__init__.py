"""
tunnelprof 공통 라이브러리

onion-core(주소 코덱, 레이어 암호화, 셀 형식), 데이터그램 전송,
함수별 프로파일러, 에러 처리 제공.
"""

from .address import Address, AddressCache, decode_address, encode_address
from .cell import Cell, parse_cell, serialize_cell
from .crypto import LayerKey, OnionPayload, onion_encrypt, peel_layer
from .errors import (
    ErrorCategory,
    ErrorClassifier,
    TunnelError,
)
from .profiler import (
    CategoryBreakdown,
    FunctionStats,
    Profiler,
    categorize,
    estimate_pipeline_speedup,
    profiled,
    profiler_snapshot,
    profiler_start,
    profiler_stop,
)
from .transport import Datagram, InProcessRouter, Network, UdpNetwork, create_network
from .types import CellType, CircuitState, ClockKind, NodeRole, TransportKind

__all__ = [
    # Address
    "Address",
    "AddressCache",
    "encode_address",
    "decode_address",
    # Cell
    "Cell",
    "serialize_cell",
    "parse_cell",
    # Crypto
    "LayerKey",
    "OnionPayload",
    "onion_encrypt",
    "peel_layer",
    # Errors
    "ErrorCategory",
    "ErrorClassifier",
    "TunnelError",
    # Profiler
    "Profiler",
    "FunctionStats",
    "CategoryBreakdown",
    "profiled",
    "profiler_start",
    "profiler_stop",
    "profiler_snapshot",
    "categorize",
    "estimate_pipeline_speedup",
    # Transport
    "Datagram",
    "Network",
    "InProcessRouter",
    "UdpNetwork",
    "create_network",
    # Types
    "CellType",
    "CircuitState",
    "ClockKind",
    "NodeRole",
    "TransportKind",
]
