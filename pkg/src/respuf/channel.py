"""Encrypted waveform transfer between a device and a receiver.

A frame is a 4-byte big-endian ciphertext length followed by the
ciphertext: the payload, PKCS#7-padded and encrypted block by block with
AES-128 in ECB mode. ECB leaks equal plaintext blocks as equal ciphertext
blocks; that property is kept deliberately.

Transports only need ``write(bytes)`` and ``read(n)``, where ``read`` may
return fewer bytes than asked (end of stream).
"""

from __future__ import annotations

import csv
import io
import socket
import struct
import threading
from importlib import resources
from os import PathLike
from typing import Callable, Protocol, Sequence, TextIO

import numpy as np

from .crypto import BLOCK_SIZE, SecretKey, derive_key, ecb_decrypt, ecb_encrypt, pkcs7_pad, pkcs7_unpad
from .errors import ChannelError, PaddingError
from .fuzzy_extractor import HelperBundle, regenerate
from .response import PufResponse

HEADER = struct.Struct(">I")
WAVEFORM_RESOURCE = "ecg_waveform_v1.csv"


class Transport(Protocol):
    def write(self, data: bytes) -> None: ...

    def read(self, n: int) -> bytes: ...


class LoopbackTransport:
    """In-memory ordered byte pipe; reads block until data or close."""

    def __init__(self):
        self._buf = bytearray()
        self._closed = False
        self._cond = threading.Condition()

    def write(self, data: bytes) -> None:
        with self._cond:
            if self._closed:
                raise ChannelError("write on closed loopback transport")
            self._buf += data
            self._cond.notify_all()

    def read(self, n: int) -> bytes:
        with self._cond:
            while not self._buf and not self._closed:
                self._cond.wait()
            chunk = bytes(self._buf[:n])
            del self._buf[:n]
            return chunk

    def close(self) -> None:
        with self._cond:
            self._closed = True
            self._cond.notify_all()


class SocketTransport:
    def __init__(self, sock: socket.socket):
        self.sock = sock

    @classmethod
    def connect(cls, host: str, port: int, timeout: float | None = 10.0) -> "SocketTransport":
        return cls(socket.create_connection((host, port), timeout=timeout))

    def write(self, data: bytes) -> None:
        self.sock.sendall(data)

    def read(self, n: int) -> bytes:
        return self.sock.recv(n)

    def close(self) -> None:
        self.sock.close()


def _read_exact(transport: Transport, n: int) -> bytes:
    chunks, got = [], 0
    while got < n:
        chunk = transport.read(n - got)
        if not chunk:
            raise ChannelError(f"stream ended after {got} of {n} bytes")
        chunks.append(chunk)
        got += len(chunk)
    return b"".join(chunks)


def _usable_key(key: bytes | SecretKey) -> bytes:
    if isinstance(key, SecretKey) and key.wiped:
        raise ChannelError("key material has been wiped")
    material = bytes(key)
    if len(material) != 16:
        raise ChannelError(f"channel needs a 128-bit key, got {8 * len(material)} bits")
    return material


def encode_frame(payload: bytes, key: bytes | SecretKey) -> bytes:
    body = ecb_encrypt(_usable_key(key), pkcs7_pad(payload))
    return HEADER.pack(len(body)) + body


def send_encrypted(payload: bytes, key: bytes | SecretKey, transport: Transport) -> int:
    """Write one frame; returns the number of bytes written."""
    frame = encode_frame(payload, key)
    transport.write(frame)
    return len(frame)


def receive_decrypted(transport: Transport, key: bytes | SecretKey) -> bytes:
    """Read one frame and return the plaintext.

    Any framing, length or padding problem raises :class:`ChannelError`; a
    padding failure after decryption usually means the two ends hold
    different keys.
    """
    material = _usable_key(key)
    (length,) = HEADER.unpack(_read_exact(transport, HEADER.size))
    if length == 0 or length % BLOCK_SIZE:
        raise ChannelError(f"frame length {length} is not a positive multiple of {BLOCK_SIZE}")
    body = _read_exact(transport, length)
    try:
        return pkcs7_unpad(ecb_decrypt(material, body))
    except PaddingError as exc:
        raise ChannelError(f"padding error after decryption (wrong key or corrupted data): {exc}") from exc


# -- waveform payload -------------------------------------------------------

def waveform_to_bytes(samples: Sequence[int]) -> bytes:
    arr = np.asarray(samples)
    if arr.size and (arr.min() < -32768 or arr.max() > 32767):
        raise ValueError("waveform samples must fit in int16")
    return arr.astype("<i2").tobytes()


def waveform_from_bytes(data: bytes) -> list[int]:
    if len(data) % 2:
        raise ValueError("waveform byte length must be even")
    return np.frombuffer(data, dtype="<i2").astype(int).tolist()


def read_waveform_csv(stream: TextIO) -> list[int]:
    reader = csv.reader(stream)
    header = next(reader, None)
    if header is None or [h.strip() for h in header] != ["sample"]:
        raise ValueError("waveform CSV must start with a 'sample' header")
    out = []
    for line, row in enumerate(reader, start=2):
        if not row:
            continue
        try:
            out.append(int(row[0]))
        except (ValueError, IndexError):
            raise ValueError(f"line {line}: not an integer sample: {row!r}") from None
    return out


def write_waveform_csv(samples: Sequence[int], stream: TextIO) -> None:
    stream.write("sample\n")
    for s in samples:
        stream.write(f"{int(s)}\n")


def load_waveform(path: str | PathLike | None = None) -> list[int]:
    """Samples from ``path``, or the bundled 1000-sample synthetic ECG trace."""
    if path is None:
        text = resources.files("respuf.data").joinpath(WAVEFORM_RESOURCE).read_text(encoding="ascii")
        return read_waveform_csv(io.StringIO(text))
    with open(path, "r", encoding="ascii", newline="") as fh:
        return read_waveform_csv(fh)


# -- key provisioning -------------------------------------------------------

class DeviceEndpoint:
    """A device that can measure itself and holds its public helper data."""

    def __init__(self, measure: Callable[[], PufResponse], bundle: HelperBundle):
        self.measure = measure
        self.bundle = bundle
        self.key: SecretKey | None = None

    def regenerate_key(self) -> SecretKey:
        """Fresh measurement -> PUF ID -> 128-bit key. Raises RegenerationError."""
        puf_id, _ = regenerate(self.measure(), self.bundle)
        self.key = derive_key(puf_id, 128)
        return self.key

    def forget_key(self) -> None:
        if self.key is not None:
            self.key.wipe()
            self.key = None


class ReceiverEndpoint:
    def __init__(self):
        self.key: SecretKey | None = None

    def install(self, key: bytes | SecretKey) -> None:
        self.key = SecretKey(bytes(key))


def provision_shared_key(device: DeviceEndpoint, receiver: ReceiverEndpoint) -> None:
    """Regenerate the device key and hand a copy to the receiver.

    Stands in for the out-of-band export at enrollment time. A regeneration
    failure propagates and leaves the receiver without a key.
    """
    key = device.regenerate_key()
    receiver.install(key)
