"""Enrollment and regeneration of a stable PUF ID from noisy responses.

Enrollment pads the 190-bit response with 25 zero bits to a BCH message,
stores the 40 parity bits as helper data, and stores a 32-bit check value
(the first four bytes of SHA-256 over the packed ID). Regeneration appends
the stored parity to a fresh padded response, decodes, and accepts the
result only if the check value matches, so a decoder miscorrection is
reported as a failure instead of yielding a wrong ID.

The check value discloses 32 bits of a hash of the ID, not bits of the ID.
"""

from __future__ import annotations

from dataclasses import dataclass
from os import PathLike
from typing import NamedTuple

import numpy as np

from .bch import BchParams, code_for
from .crypto import sha256
from .errors import HelperFormatError, RegenerationError
from .response import COMBINED_LENGTH, PufResponse, ResponseConfig, pack_bits, unpack_bits

FORMAT_VERSION = 1


class PufId(PufResponse):
    """The response recorded at enrollment."""

    def __init__(self, bits, config: ResponseConfig = ResponseConfig.COMBINED):
        super().__init__(bits, config)
        if self.length != COMBINED_LENGTH:
            raise ValueError(f"a PUF ID has {COMBINED_LENGTH} bits, got {self.length}")

    def __repr__(self) -> str:
        return f"PufId({self.to_hex()})"


def check_value(puf_id_bits) -> int:
    return int.from_bytes(sha256(pack_bits(puf_id_bits))[:4], "big")


@dataclass(frozen=True)
class HelperBundle:
    helper_parity: bytes  # parity bits, MSB-first packed
    check_value: int
    params: BchParams = BchParams()
    config: ResponseConfig = ResponseConfig.COMBINED
    format_version: int = FORMAT_VERSION

    @property
    def parity_bits(self) -> np.ndarray:
        return unpack_bits(self.helper_parity, self.params.n - self.params.k)

    def to_text(self) -> str:
        p = self.params
        return (f"version={self.format_version}\n"
                f"bch={p.n},{p.k},{p.t}\n"
                f"prim_poly=0x{p.primitive_poly:X}\n"
                f"config={self.config.value}\n"
                f"parity={self.helper_parity.hex()}\n"
                f"check={self.check_value:08x}\n")

    @classmethod
    def from_text(cls, text: str) -> "HelperBundle":
        fields: dict[str, str] = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise HelperFormatError(f"line {lineno}: expected key=value")
            fields[key.strip()] = value.strip()
        required = ("version", "bch", "prim_poly", "config", "parity", "check")
        missing = [k for k in required if k not in fields]
        if missing:
            raise HelperFormatError(f"missing fields: {', '.join(missing)}")
        try:
            version = int(fields["version"])
            n, k, t = (int(x) for x in fields["bch"].split(","))
            poly = int(fields["prim_poly"], 16)
            params = BchParams(n=n, k=k, t=t, m=(n + 1).bit_length() - 1, primitive_poly=poly)
            config = ResponseConfig(fields["config"])
            parity = bytes.fromhex(fields["parity"])
            check = int(fields["check"], 16)
        except ValueError as exc:
            raise HelperFormatError(f"malformed helper data: {exc}") from None
        if version != FORMAT_VERSION:
            raise HelperFormatError(f"unsupported helper format version {version}")
        if len(parity) != (n - k + 7) // 8 or len(fields["check"]) != 8:
            raise HelperFormatError("parity or check field has the wrong length")
        return cls(parity, check, params, config, version)

    def save(self, path: str | PathLike) -> None:
        with open(path, "w", encoding="ascii") as fh:
            fh.write(self.to_text())

    @classmethod
    def load(cls, path: str | PathLike) -> "HelperBundle":
        with open(path, "r", encoding="ascii") as fh:
            return cls.from_text(fh.read())


class Regenerated(NamedTuple):
    puf_id: PufId
    corrected_bits: int


def _message(bits: np.ndarray, params: BchParams) -> np.ndarray:
    return np.concatenate([bits, np.zeros(params.k - bits.size, dtype=np.uint8)])


def _check_response(response: PufResponse, params: BchParams) -> None:
    if response.config is not ResponseConfig.COMBINED:
        raise ValueError(f"enrollment uses COMBINED responses, got {response.config.value}")
    if response.length != COMBINED_LENGTH:
        raise ValueError(f"response must be {COMBINED_LENGTH} bits, got {response.length}")
    if not params.satisfies_constraints(response.length):
        raise ValueError(f"BCH parameters {params} cannot carry a {response.length}-bit response")


def enroll(response: PufResponse, params: BchParams = BchParams()) -> tuple[PufId, HelperBundle]:
    _check_response(response, params)
    puf_id = PufId(response.bits)
    parity = code_for(params).encode(_message(response.bits, params))
    bundle = HelperBundle(pack_bits(parity), check_value(puf_id.bits), params, ResponseConfig.COMBINED)
    return puf_id, bundle


def regenerate(fresh: PufResponse, bundle: HelperBundle) -> Regenerated:
    """Rebuild the enrolled ID from a fresh response.

    Raises :class:`RegenerationError` when decoding fails or the corrected
    ID does not match the stored check value.
    """
    params = bundle.params
    _check_response(fresh, params)
    word = np.concatenate([_message(fresh.bits, params), bundle.parity_bits])
    result = code_for(params).decode(word)
    if result is None:
        raise RegenerationError("regeneration failed: too many bit errors for the BCH decoder")
    candidate = result.message[:COMBINED_LENGTH]
    if check_value(candidate) != bundle.check_value:
        raise RegenerationError("regeneration failed: corrected ID does not match the check value")
    # Corrections in the zero padding are tolerated; only ID bits count.
    corrected = sum(1 for p in result.error_positions if p < COMBINED_LENGTH)
    return Regenerated(PufId(candidate), corrected)
