"""Flow identifiers, packets and the seeded CRC-16 hash family.

Every sketch indexes its counter arrays with ``CRC-16/CCITT-FALSE(seed ++ flow)
mod width``, where ``flow`` is the 13-byte big-endian serialization of the
IPv4 5-tuple and ``seed`` is a per-depth byte string prepended to it.

Note that CRC is affine over GF(2): for equal-length seeds the XOR difference
between two flows' hashes does not depend on the seed. With power-of-two
widths the rows of a multi-depth sketch are therefore permutations of each
other and share the exact same collision sets.
"""

from __future__ import annotations

import binascii
import ipaddress
import struct
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple, Sequence

import numpy as np

from .errors import ConfigError

FLOW_BYTES = 13
_FLOW_STRUCT = struct.Struct(">IIBHH")

CRC_POLY = 0x1021
CRC_INIT = 0xFFFF


def crc16_ccitt(data: bytes, crc: int = CRC_INIT) -> int:
    """CRC-16/CCITT-FALSE (poly 0x1021, init 0xFFFF, no reflection, no xorout)."""
    return binascii.crc_hqx(data, crc)


def _build_table() -> np.ndarray:
    table = np.zeros(256, dtype=np.uint16)
    for byte in range(256):
        crc = byte << 8
        for _ in range(8):
            crc = ((crc << 1) ^ CRC_POLY) if crc & 0x8000 else (crc << 1)
            crc &= 0xFFFF
        table[byte] = crc
    return table


_CRC_TABLE = _build_table()


def crc16_ccitt_rows(rows: np.ndarray, prefix: bytes = b"") -> np.ndarray:
    """Vectorized CRC over each row of a ``(k, L)`` uint8 array.

    ``prefix`` is processed before every row. Returns a ``(k,)`` uint16 array
    equal to ``crc16_ccitt(prefix + row.tobytes())`` for each row.
    """
    rows = np.ascontiguousarray(rows, dtype=np.uint8)
    if rows.ndim != 2:
        raise ValueError("rows must be a 2-D uint8 array")
    start = crc16_ccitt(prefix)
    crc = np.full(rows.shape[0], start, dtype=np.uint16)
    for col in range(rows.shape[1]):
        idx = (crc >> 8) ^ rows[:, col]
        crc = (crc << 8) ^ _CRC_TABLE[idx]
    return crc


@dataclass(frozen=True, slots=True)
class FlowId:
    """IPv4 5-tuple. Addresses are held as 32-bit integers."""

    src_ip: int
    dst_ip: int
    protocol: int
    src_port: int
    dst_port: int

    def __post_init__(self) -> None:
        for name, bits in (("src_ip", 32), ("dst_ip", 32), ("protocol", 8),
                           ("src_port", 16), ("dst_port", 16)):
            value = getattr(self, name)
            if not isinstance(value, int) or not 0 <= value < (1 << bits):
                raise ValueError(f"{name}={value!r} does not fit in {bits} bits")

    @classmethod
    def of(cls, src_ip: str | int, dst_ip: str | int, protocol: int,
           src_port: int, dst_port: int) -> FlowId:
        """Build from dotted-quad strings or integers."""
        return cls(int(ipaddress.IPv4Address(src_ip)), int(ipaddress.IPv4Address(dst_ip)),
                   int(protocol), int(src_port), int(dst_port))

    def to_bytes(self) -> bytes:
        return _FLOW_STRUCT.pack(self.src_ip, self.dst_ip, self.protocol,
                                 self.src_port, self.dst_port)

    @classmethod
    def from_bytes(cls, data: bytes) -> FlowId:
        if len(data) != FLOW_BYTES:
            raise ValueError(f"expected {FLOW_BYTES} bytes, got {len(data)}")
        return cls(*_FLOW_STRUCT.unpack(data))

    def __str__(self) -> str:
        return (f"{ipaddress.IPv4Address(self.src_ip)}:{self.src_port} -> "
                f"{ipaddress.IPv4Address(self.dst_ip)}:{self.dst_port} proto {self.protocol}")


class Packet(NamedTuple):
    flow: FlowId
    seq: int


@dataclass(frozen=True)
class HashFamily:
    """One CRC-16 hash function per sketch depth, told apart by a seed prefix."""

    seeds: tuple[bytes, ...]
    algorithm: str = "crc16-ccitt-false"

    def __post_init__(self) -> None:
        if not self.seeds:
            raise ConfigError("hash family needs at least one seed", "seeds")
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigError("hash family seeds must be distinct", "seeds")

    @classmethod
    def default(cls, depth: int) -> HashFamily:
        """Seeds ``b"0"``, ``b"1"``, ... for ``depth`` rows."""
        return cls(tuple(str(i).encode() for i in range(depth)))

    def __len__(self) -> int:
        return len(self.seeds)

    def _seed(self, depth: int) -> bytes:
        if not 0 <= depth < len(self.seeds):
            raise ConfigError(
                f"depth {depth} out of range for a family of {len(self.seeds)} seeds", "depth")
        return self.seeds[depth]

    def index(self, depth: int, flow: FlowId, width: int) -> int:
        if width < 1:
            raise ConfigError(f"width must be >= 1, got {width}", "width")
        return _crc_index(self._seed(depth), flow.to_bytes(), width)

    def table(self, depth: int, flows: np.ndarray, width: int) -> np.ndarray:
        """Cell index of every row of a ``(k, 13)`` uint8 flow array, as int32."""
        if width < 1:
            raise ConfigError(f"width must be >= 1, got {width}", "width")
        crc = crc16_ccitt_rows(flows, self._seed(depth))
        return (crc.astype(np.int64) % width).astype(np.int32)

    def indexer(self, depth: int, width: int):
        """A memoized ``flow -> cell`` callable for one row."""
        seed = self._seed(depth)
        if width < 1:
            raise ConfigError(f"width must be >= 1, got {width}", "width")

        @lru_cache(maxsize=1 << 18)
        def index_of(flow: FlowId) -> int:
            return _crc_index(seed, flow.to_bytes(), width)

        return index_of


def _crc_index(seed: bytes, flow_bytes: bytes, width: int) -> int:
    return crc16_ccitt(seed + flow_bytes) % width


def hash_index(family: HashFamily, depth: int, flow: FlowId, width: int) -> int:
    return family.index(depth, flow, width)


def flows_to_array(flows: Sequence[FlowId]) -> np.ndarray:
    """Pack flows into a ``(k, 13)`` uint8 array."""
    buf = b"".join(f.to_bytes() for f in flows)
    return np.frombuffer(buf, dtype=np.uint8).reshape(len(flows), FLOW_BYTES).copy()


def array_to_flows(rows: np.ndarray) -> list[FlowId]:
    return [FlowId.from_bytes(r.tobytes()) for r in np.asarray(rows, dtype=np.uint8)]
