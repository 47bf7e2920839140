"""Pairwise-comparison PUF responses.

For voltages ``V1..VN`` the response has one bit per pair ``i < j``, emitted
with ``i`` in the outer loop and ``j`` in the inner loop: the bit is 1 when
``V_i < V_j`` and 0 otherwise (ties give 0).

Bitstrings are packed most-significant-bit first, padded with zero bits to a
whole byte. The same packing feeds SHA-256 everywhere in the package.
"""

from __future__ import annotations

import enum
import hashlib
from functools import lru_cache
from typing import Sequence, Union

import numpy as np

from .measurement import ReadingSet

COMBINED_LENGTH = 190

BitsLike = Union[str, Sequence[int], np.ndarray]


class ResponseConfig(enum.Enum):
    PU_ONLY = "PU_ONLY"
    PD_ONLY = "PD_ONLY"
    COMBINED = "COMBINED"
    COMBINED_HASHED = "COMBINED_HASHED"


def as_bits(bits: BitsLike) -> np.ndarray:
    """Coerce a '0'/'1' string or a 0/1 sequence to a uint8 array."""
    if isinstance(bits, str):
        if set(bits) - {"0", "1"}:
            raise ValueError("bitstrings may only contain '0' and '1'")
        return np.frombuffer(bits.encode("ascii"), dtype=np.uint8) - ord("0")
    arr = np.asarray(bits)
    if arr.ndim != 1:
        raise ValueError("a bitstring must be one-dimensional")
    if arr.size and not np.isin(arr, (0, 1)).all():
        raise ValueError("bits must be 0 or 1")
    return arr.astype(np.uint8)


def bits_to_str(bits: BitsLike) -> str:
    return "".join("1" if b else "0" for b in as_bits(bits))


def pack_bits(bits: BitsLike) -> bytes:
    return np.packbits(as_bits(bits)).tobytes()


def unpack_bits(data: bytes, length: int) -> np.ndarray:
    if length > 8 * len(data):
        raise ValueError(f"{len(data)} bytes cannot hold {length} bits")
    return np.unpackbits(np.frombuffer(data, dtype=np.uint8))[:length].copy()


@lru_cache(maxsize=None)
def _pair_indices(n: int) -> tuple[np.ndarray, np.ndarray]:
    # triu_indices walks rows then columns, i.e. the i-outer / j-inner order.
    return np.triu_indices(n, k=1)


def generate_response(voltages: Sequence[float]) -> np.ndarray:
    v = np.asarray(voltages, dtype=float)
    if v.ndim != 1 or v.size < 2:
        raise ValueError("need at least two voltages")
    i, j = _pair_indices(v.size)
    return (v[i] < v[j]).astype(np.uint8)


def bit_index(i: int, j: int, n: int) -> int:
    """Zero-based position of the bit comparing ``V_i`` and ``V_j`` (1-based, ``i < j``)."""
    if not 1 <= i < j <= n:
        raise ValueError(f"need 1 <= i < j <= N, got i={i}, j={j}, N={n}")
    return (i - 1) * n - i * (i - 1) // 2 + (j - i) - 1


def hash_response(bits: BitsLike, length: int = COMBINED_LENGTH) -> np.ndarray:
    """SHA-256 of the packed bits, truncated to the first ``length`` digest bits."""
    if not 0 < length <= 256:
        raise ValueError("hash output holds at most 256 bits")
    return unpack_bits(hashlib.sha256(pack_bits(bits)).digest(), length)


class PufResponse:
    """An immutable response bitstring tagged with the configuration that produced it."""

    __slots__ = ("_bits", "config")

    def __init__(self, bits: BitsLike, config: ResponseConfig = ResponseConfig.COMBINED):
        arr = as_bits(bits).copy()
        arr.flags.writeable = False
        self._bits = arr
        self.config = ResponseConfig(config)

    @property
    def bits(self) -> np.ndarray:
        return self._bits

    @property
    def length(self) -> int:
        return int(self._bits.size)

    def __len__(self) -> int:
        return self.length

    def __eq__(self, other):
        if not isinstance(other, PufResponse):
            return NotImplemented
        return self.config is other.config and np.array_equal(self._bits, other._bits)

    def __hash__(self):
        return hash((self.config, self._bits.tobytes()))

    def __str__(self) -> str:
        return bits_to_str(self._bits)

    def __repr__(self) -> str:
        return f"PufResponse({self.length} bits, {self.config.value}, hex={self.to_hex()})"

    def packed(self) -> bytes:
        return pack_bits(self._bits)

    def to_hex(self) -> str:
        return self.packed().hex()

    def to_dict(self) -> dict:
        return {"config": self.config.value, "bits": self.length, "hex": self.to_hex()}

    @classmethod
    def from_hex(cls, hex_str: str, length: int,
                 config: ResponseConfig = ResponseConfig.COMBINED) -> "PufResponse":
        data = bytes.fromhex(hex_str)
        if len(data) != (length + 7) // 8:
            raise ValueError(f"{length} bits need {(length + 7) // 8} bytes, got {len(data)}")
        return cls(unpack_bits(data, length), config)

    def flipped(self, positions: Sequence[int]) -> "PufResponse":
        """Copy with the bits at ``positions`` inverted."""
        bits = self._bits.copy()
        for p in positions:
            bits[p] ^= 1
        return PufResponse(bits, self.config)


def response_for_config(rs: ReadingSet, config: ResponseConfig) -> PufResponse:
    config = ResponseConfig(config)
    if config is ResponseConfig.PU_ONLY:
        return PufResponse(generate_response(rs.pull_up), config)
    if config is ResponseConfig.PD_ONLY:
        return PufResponse(generate_response(rs.pull_down), config)
    combined = generate_response(rs.voltages)
    if config is ResponseConfig.COMBINED:
        return PufResponse(combined, config)
    return PufResponse(hash_response(combined, COMBINED_LENGTH), config)
