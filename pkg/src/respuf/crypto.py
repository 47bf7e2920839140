"""SHA-256 key derivation, single-block AES-128 and PKCS#7 padding.

AES comes from the ``cryptography`` package; padding is done here so the
error behaviour is exactly the one the channel relies on.
"""

from __future__ import annotations

import hashlib

from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes

from .errors import PaddingError
from .response import BitsLike, PufResponse, pack_bits

BLOCK_SIZE = 16
KEY_SIZES_BITS = (128, 192, 256)


def sha256(data: bytes) -> bytes:
    return hashlib.sha256(bytes(data)).digest()


class SecretKey:
    """Key material that can be wiped in place.

    ``bytes(key)`` copies the material out; once :meth:`wipe` has run the
    buffer is zeroed and every accessor raises.
    """

    __slots__ = ("_buf", "_wiped")

    def __init__(self, material: bytes):
        if len(material) * 8 not in KEY_SIZES_BITS:
            raise ValueError(f"key must be 16, 24 or 32 bytes, got {len(material)}")
        self._buf = bytearray(material)
        self._wiped = False

    @property
    def wiped(self) -> bool:
        return self._wiped

    @property
    def bits(self) -> int:
        return 8 * len(self._buf)

    def _check(self):
        if self._wiped:
            raise ValueError("key material has been wiped")

    def __bytes__(self) -> bytes:
        self._check()
        return bytes(self._buf)

    def __len__(self) -> int:
        return len(self._buf)

    def __eq__(self, other):
        if not isinstance(other, SecretKey):
            return NotImplemented
        return not self._wiped and not other._wiped and self._buf == other._buf

    __hash__ = None

    def __repr__(self) -> str:
        state = "wiped" if self._wiped else f"fingerprint={self.fingerprint()}"
        return f"SecretKey({self.bits} bits, {state})"

    def truncated(self, key_bits: int) -> "SecretKey":
        self._check()
        if key_bits not in KEY_SIZES_BITS or key_bits > self.bits:
            raise ValueError(f"cannot truncate a {self.bits}-bit key to {key_bits} bits")
        return SecretKey(bytes(self._buf[:key_bits // 8]))

    def fingerprint(self) -> str:
        """First 8 hex characters of SHA-256 over the key; safe to print."""
        self._check()
        return sha256(bytes(self._buf)).hex()[:8]

    def wipe(self) -> None:
        for i in range(len(self._buf)):
            self._buf[i] = 0
        self._wiped = True


def derive_key(puf_id: BitsLike | PufResponse, key_bits: int = 256) -> SecretKey:
    """SHA-256 over the MSB-first packing of the ID, truncated to ``key_bits``."""
    if key_bits not in KEY_SIZES_BITS:
        raise ValueError(f"key_bits must be one of {KEY_SIZES_BITS}, got {key_bits}")
    bits = puf_id.bits if hasattr(puf_id, "bits") else puf_id
    return SecretKey(sha256(pack_bits(bits))[:key_bits // 8])


def _key_bytes(key: bytes | SecretKey) -> bytes:
    return bytes(key)


def aes128_ecb(key: bytes | SecretKey, block: bytes, direction: str = "encrypt") -> bytes:
    key = _key_bytes(key)
    if len(key) != 16:
        raise ValueError(f"AES-128 needs a 16-byte key, got {len(key)}")
    if len(block) != BLOCK_SIZE:
        raise ValueError(f"block must be {BLOCK_SIZE} bytes, got {len(block)}")
    return _ecb(key, bytes(block), direction)


def _ecb(key: bytes, data: bytes, direction: str) -> bytes:
    cipher = Cipher(algorithms.AES(key), modes.ECB())
    if direction == "encrypt":
        ctx = cipher.encryptor()
    elif direction == "decrypt":
        ctx = cipher.decryptor()
    else:
        raise ValueError(f"direction must be 'encrypt' or 'decrypt', got {direction!r}")
    return ctx.update(data) + ctx.finalize()


def ecb_encrypt(key: bytes | SecretKey, data: bytes) -> bytes:
    """Encrypt whole 16-byte blocks independently (no padding applied)."""
    key = _key_bytes(key)
    if len(key) != 16:
        raise ValueError(f"AES-128 needs a 16-byte key, got {len(key)}")
    if len(data) % BLOCK_SIZE:
        raise ValueError("ECB input must be a multiple of 16 bytes")
    return _ecb(key, bytes(data), "encrypt")


def ecb_decrypt(key: bytes | SecretKey, data: bytes) -> bytes:
    key = _key_bytes(key)
    if len(key) != 16:
        raise ValueError(f"AES-128 needs a 16-byte key, got {len(key)}")
    if len(data) % BLOCK_SIZE:
        raise ValueError("ECB input must be a multiple of 16 bytes")
    return _ecb(key, bytes(data), "decrypt")


def pkcs7_pad(data: bytes, block_size: int = BLOCK_SIZE) -> bytes:
    if not 1 <= block_size <= 255:
        raise ValueError("block size must be 1..255")
    p = block_size - len(data) % block_size
    return bytes(data) + bytes([p]) * p


def pkcs7_unpad(padded: bytes, block_size: int = BLOCK_SIZE) -> bytes:
    if not padded or len(padded) % block_size:
        raise PaddingError(f"padded length {len(padded)} is not a positive multiple of {block_size}")
    p = padded[-1]
    if not 1 <= p <= block_size or padded[-p:] != bytes([p]) * p:
        raise PaddingError("invalid PKCS#7 padding")
    return bytes(padded[:-p])
