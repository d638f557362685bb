"""
공용 타입 정의

셀 와이어 타입, 회로 상태, 노드 역할, 측정 설정 관련 Enum.
"""

from enum import Enum, IntEnum


class CellType(IntEnum):
    """셀 타입 (와이어 값 고정)"""

    DATA = 0
    CREATE = 1
    CREATED = 2
    EXTEND = 3
    EXTENDED = 4
    DESTROY = 5


class CircuitState(str, Enum):
    """회로 상태"""

    BUILDING = "building"
    ESTABLISHED = "established"
    DESTROYED = "destroyed"


class NodeRole(str, Enum):
    """노드 역할"""

    SEED = "seed"
    RELAY = "relay"
    EXIT = "exit"
    SINK = "sink"


class ClockKind(str, Enum):
    """프로파일러 시계 종류"""

    CPU = "cpu"  # 실행 컨텍스트(스레드)별 CPU 시간
    WALL = "wall"  # 단조 벽시계


class TransportKind(str, Enum):
    """데이터그램 전송 구현"""

    INPROC = "inproc"
    UDP = "udp"


class ExecutionMode(str, Enum):
    """노드 스케줄링 방식"""

    DETERMINISTIC = "deterministic"  # 단일 컨텍스트 라운드로빈
    THREADED = "threaded"  # 노드별 독립 스레드


class TableKind(str, Enum):
    """리포트 테이블 종류"""

    RELATIVE = "relative"
    ABSOLUTE = "absolute"
    GOODPUT = "goodput"
