"""Binary narrow-sense BCH codes over GF(2^m).

Wire conventions (part of the helper-data format):

* field polynomial for the default code: x^8 + x^4 + x^3 + x^2 + 1 (0x11D);
* code roots alpha^1 .. alpha^(2t);
* a length-L bit vector maps to a polynomial with bit 0 as the coefficient of
  x^(L-1), so codeword = message bits followed by parity bits, and the
  codeword polynomial is ``m(x) * x^(n-k) + (m(x) * x^(n-k) mod g(x))``.

GF(2) polynomials are Python ints (bit i = coefficient of x^i).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import NamedTuple, Sequence

import numpy as np

from .response import BitsLike, as_bits

DEFAULT_PRIMITIVE_POLY = 0x11D


class GaloisField:
    """GF(2^m) with exp/log tables; the tables are never mutated after construction."""

    def __init__(self, m: int, primitive_poly: int):
        if not 2 <= m <= 16:
            raise ValueError("field degree must be 2..16")
        if primitive_poly.bit_length() != m + 1:
            raise ValueError(f"primitive polynomial must have degree {m}")
        self.m = m
        self.order = (1 << m) - 1
        self.primitive_poly = primitive_poly
        exp = np.zeros(2 * self.order, dtype=np.int64)
        log = np.full(1 << m, -1, dtype=np.int64)
        x = 1
        for i in range(self.order):
            if log[x] != -1:
                raise ValueError(f"{primitive_poly:#x} is not primitive over GF(2^{m})")
            exp[i] = x
            log[x] = i
            x <<= 1
            if x >> m:
                x ^= primitive_poly
        exp[self.order:] = exp[:self.order]
        exp.flags.writeable = False
        log.flags.writeable = False
        self.exp = exp
        self.log = log
        self._exp = exp.tolist()
        self._log = log.tolist()

    @staticmethod
    def add(a: int, b: int) -> int:
        return a ^ b

    def mul(self, a: int, b: int) -> int:
        if a == 0 or b == 0:
            return 0
        return self._exp[(self._log[a] + self._log[b]) % self.order]

    def inv(self, a: int) -> int:
        if a == 0:
            raise ZeroDivisionError("0 has no inverse in GF(2^m)")
        return self._exp[(-self._log[a]) % self.order]

    def pow(self, a: int, e: int) -> int:
        if a == 0:
            if e == 0:
                return 1
            if e < 0:
                raise ZeroDivisionError("0 has no inverse in GF(2^m)")
            return 0
        return self._exp[(self._log[a] * e) % self.order]

    def alpha_pow(self, e: int) -> int:
        return self._exp[e % self.order]


def gf2_mul(a: int, b: int) -> int:
    """Carry-less product of two GF(2) polynomials."""
    out = 0
    while b:
        if b & 1:
            out ^= a
        a <<= 1
        b >>= 1
    return out


def gf2_mod(a: int, g: int) -> int:
    dg = g.bit_length() - 1
    while a.bit_length() - 1 >= dg:
        a ^= g << (a.bit_length() - 1 - dg)
    return a


def cyclotomic_coset(i: int, order: int) -> list[int]:
    coset, j = [], i % order
    while j not in coset:
        coset.append(j)
        j = (2 * j) % order
    return coset


def minimal_polynomial(field: GaloisField, i: int) -> int:
    """Minimal polynomial of alpha^i over GF(2), as an int."""
    # prod over the coset of (x + alpha^j), coefficients kept in GF(2^m)
    coeffs = [1]  # lowest degree first
    for j in cyclotomic_coset(i, field.order):
        root = field.alpha_pow(j)
        shifted = [0] + coeffs
        scaled = [field.mul(root, c) for c in coeffs] + [0]
        coeffs = [a ^ b for a, b in zip(shifted, scaled)]
    if any(c not in (0, 1) for c in coeffs):
        raise ArithmeticError("minimal polynomial has coefficients outside GF(2)")
    return sum(c << k for k, c in enumerate(coeffs))


@dataclass(frozen=True)
class BchParams:
    n: int = 255
    k: int = 215
    t: int = 5
    m: int = 8
    primitive_poly: int = DEFAULT_PRIMITIVE_POLY

    def __post_init__(self):
        if self.n != (1 << self.m) - 1:
            raise ValueError("n must equal 2^m - 1")
        if not 0 < self.k < self.n or self.t < 1:
            raise ValueError("need 0 < k < n and t >= 1")

    def satisfies_constraints(self, response_length: int) -> bool:
        """Parameter-selection rules: ``n >= k + log2(n+1)*t`` and ``k >= response length``."""
        return self.n >= self.k + math.log2(self.n + 1) * self.t and self.k >= response_length


class DecodeResult(NamedTuple):
    message: np.ndarray
    error_positions: tuple[int, ...]  # codeword bit indices that were flipped


class BchCode:
    def __init__(self, params: BchParams = BchParams()):
        self.params = params
        self.field = GaloisField(params.m, params.primitive_poly)
        g = 1
        seen: set[int] = set()
        for i in range(1, 2 * params.t + 1):
            rep = min(cyclotomic_coset(i, self.field.order))
            if rep not in seen:
                seen.add(rep)
                g = gf2_mul(g, minimal_polynomial(self.field, i))
        if g.bit_length() - 1 != params.n - params.k:
            raise ValueError(f"BCH(n={params.n}, t={params.t}) has n-k={g.bit_length() - 1}, "
                             f"not {params.n - params.k}")
        self.generator = g

    @property
    def n(self) -> int:
        return self.params.n

    @property
    def k(self) -> int:
        return self.params.k

    @property
    def t(self) -> int:
        return self.params.t

    @property
    def parity_length(self) -> int:
        return self.n - self.k

    @cached_property
    def _degrees(self) -> np.ndarray:
        # polynomial degree of each codeword bit position
        return np.arange(self.n - 1, -1, -1, dtype=np.int64)

    def encode(self, message: BitsLike) -> np.ndarray:
        """Parity bits (length n-k) of a k-bit message."""
        bits = as_bits(message)
        if bits.size != self.k:
            raise ValueError(f"message must be {self.k} bits, got {bits.size}")
        m = int.from_bytes(np.packbits(bits).tobytes(), "big") >> (-self.k % 8)
        r = gf2_mod(m << self.parity_length, self.generator)
        return np.array([(r >> (self.parity_length - 1 - i)) & 1 for i in range(self.parity_length)],
                        dtype=np.uint8)

    def codeword(self, message: BitsLike) -> np.ndarray:
        return np.concatenate([as_bits(message), self.encode(message)])

    def syndromes(self, received: BitsLike) -> list[int]:
        """``S_j = r(alpha^j)`` for ``j = 1..2t``."""
        bits = as_bits(received)
        if bits.size != self.n:
            raise ValueError(f"received word must be {self.n} bits, got {bits.size}")
        degs = self._degrees[bits.astype(bool)]
        exp = self.field.exp
        out = []
        for j in range(1, 2 * self.t + 1):
            if j % 2 == 0:
                out.append(self.field.mul(out[j // 2 - 1], out[j // 2 - 1]))
            else:
                out.append(int(np.bitwise_xor.reduce(exp[(j * degs) % self.field.order])) if degs.size else 0)
        return out

    def _berlekamp_massey(self, s: Sequence[int]) -> list[int]:
        f = self.field
        locator = [1]
        prev = [1]
        length, shift, prev_disc = 0, 1, 1
        for r in range(len(s)):
            disc = s[r]
            for i in range(1, length + 1):
                if i < len(locator):
                    disc ^= f.mul(locator[i], s[r - i])
            if disc == 0:
                shift += 1
                continue
            coef = f.mul(disc, f.inv(prev_disc))
            update = [0] * shift + [f.mul(coef, c) for c in prev]
            new = [a ^ b for a, b in zip(locator + [0] * (len(update) - len(locator)),
                                         update + [0] * (len(locator) - len(update)))]
            if 2 * length <= r:
                prev, prev_disc = locator, disc
                length, shift = r + 1 - length, 1
            else:
                shift += 1
            locator = new
        while len(locator) > 1 and locator[-1] == 0:
            locator.pop()
        return locator

    def _chien(self, locator: Sequence[int]) -> np.ndarray:
        """Degrees e (0..n-1) with locator(alpha^-e) == 0."""
        f = self.field
        e = np.arange(self.n, dtype=np.int64)
        acc = np.zeros(self.n, dtype=np.int64)
        for power, c in enumerate(locator):
            if c:
                acc ^= f.exp[(f.log[c] - power * e) % f.order]
        return e[acc == 0]

    def decode(self, received: BitsLike) -> DecodeResult | None:
        """Correct up to t bit errors; ``None`` when the word is not decodable."""
        bits = as_bits(received).copy()
        s = self.syndromes(bits)
        if not any(s):
            return DecodeResult(bits[:self.k], ())
        locator = self._berlekamp_massey(s)
        degree = len(locator) - 1
        if degree > self.t:
            return None
        roots = self._chien(locator)
        if roots.size != degree:
            return None
        positions = sorted(int(self.n - 1 - e) for e in roots)
        bits[positions] ^= 1
        if any(self.syndromes(bits)):
            return None
        return DecodeResult(bits[:self.k], tuple(positions))


@lru_cache(maxsize=8)
def code_for(params: BchParams = BchParams()) -> BchCode:
    """Shared, immutable code instance per parameter set."""
    return BchCode(params)


def bch_encode(message: BitsLike, params: BchParams = BchParams()) -> np.ndarray:
    return code_for(params).encode(message)


def bch_decode(received: BitsLike, params: BchParams = BchParams()) -> DecodeResult | None:
    return code_for(params).decode(received)
