"""Binary narrow-sense BCH codes of length 255 over GF(2^8).

Field: GF(2^8) generated by the primitive polynomial x^8 + x^4 + x^3 + x^2 + 1
(0x11D), with alpha = x.  Binary polynomials are held as Python ints with bit
``i`` the coefficient of ``x**i``.

A block is a bit vector ``b[0..n-1]`` read MSB first: ``b[i]`` is the
coefficient of ``x**(n-1-i)``.  Codewords are systematic, message bits first.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple, Sequence

import numpy as np

PRIMITIVE_POLY = 0x11D
FIELD_SIZE = 256
N = 255
MAX_T = 42

TABLE1_T = (11, 13, 18, 25, 42)


class UnsupportedT(ValueError):
    pass


class LengthMismatch(ValueError):
    pass


class DecodeFailure(Exception):
    """The received word is not within the correction radius of any codeword."""


def _build_tables() -> tuple[np.ndarray, np.ndarray]:
    exp = np.zeros(2 * N, dtype=np.int64)
    log = np.zeros(FIELD_SIZE, dtype=np.int64)
    x = 1
    for i in range(N):
        exp[i] = x
        log[x] = i
        x <<= 1
        if x & 0x100:
            x ^= PRIMITIVE_POLY
    exp[N:] = exp[:N]
    return exp, log


EXP, LOG = _build_tables()
_EXP = EXP.tolist()
_LOG = LOG.tolist()


def gf_mul(a: int, b: int) -> int:
    if a == 0 or b == 0:
        return 0
    return _EXP[_LOG[a] + _LOG[b]]


def gf_inv(a: int) -> int:
    if a == 0:
        raise ZeroDivisionError("zero has no inverse in GF(256)")
    return _EXP[(N - _LOG[a]) % N]


def gf_pow(a: int, k: int) -> int:
    if a == 0:
        return 0 if k else 1
    return _EXP[(_LOG[a] * k) % N]


@dataclass(frozen=True)
class GfElement:
    """Element of GF(2^8); a thin operator wrapper over the table arithmetic."""

    value: int

    def __post_init__(self) -> None:
        if not 0 <= self.value < FIELD_SIZE:
            raise ValueError("GF(256) elements are integers in [0, 255]")

    def __add__(self, other: "GfElement") -> "GfElement":
        return GfElement(self.value ^ other.value)

    __sub__ = __add__

    def __mul__(self, other: "GfElement") -> "GfElement":
        return GfElement(gf_mul(self.value, other.value))

    def inverse(self) -> "GfElement":
        return GfElement(gf_inv(self.value))

    def __truediv__(self, other: "GfElement") -> "GfElement":
        return self * other.inverse()

    def __pow__(self, k: int) -> "GfElement":
        return GfElement(gf_pow(self.value, k))


# --- binary polynomials as ints -------------------------------------------


def poly_deg(p: int) -> int:
    return p.bit_length() - 1


def poly_mod(a: int, b: int) -> int:
    db = poly_deg(b)
    while a and poly_deg(a) >= db:
        a ^= b << (poly_deg(a) - db)
    return a


def poly_mul(a: int, b: int) -> int:
    out = 0
    while b:
        if b & 1:
            out ^= a
        a <<= 1
        b >>= 1
    return out


def cyclotomic_coset(i: int) -> tuple[int, ...]:
    coset = []
    j = i % N
    while j not in coset:
        coset.append(j)
        j = (2 * j) % N
    return tuple(sorted(coset))


@lru_cache(maxsize=None)
def minimal_polynomial(i: int) -> int:
    """Minimal polynomial over GF(2) of alpha**i, as a bitmask."""
    coeffs = [1]  # GF(256) coefficients, lowest degree first
    for j in cyclotomic_coset(i):
        root = _EXP[j]
        nxt = [0] * (len(coeffs) + 1)
        for k, c in enumerate(coeffs):
            nxt[k + 1] ^= c
            nxt[k] ^= gf_mul(c, root)
        coeffs = nxt
    if any(c not in (0, 1) for c in coeffs):
        raise AssertionError("minimal polynomial has non-binary coefficients")
    return sum(c << k for k, c in enumerate(coeffs))


@dataclass(frozen=True)
class BchCodeSpec:
    n: int
    m: int
    t: int
    generator: int = field(repr=False)

    @property
    def parity_bits(self) -> int:
        return self.n - self.m

    def blocks_for(self, key_bits: int) -> int:
        return -(-key_bits // self.m)

    def label(self) -> str:
        return f"({self.n},{self.m},{self.t})"


@dataclass(frozen=True, eq=False)
class Block:
    bits: np.ndarray

    def __post_init__(self) -> None:
        bits = np.asarray(self.bits, dtype=np.uint8)
        if bits.shape != (N,):
            raise LengthMismatch(f"block must hold exactly {N} bits")
        object.__setattr__(self, "bits", bits)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Block):
            return NotImplemented
        return np.array_equal(self.bits, other.bits)

    def to_hex(self) -> str:
        """Hex string, MSB first; the final nibble is padded with a zero bit."""
        padded = np.concatenate([self.bits, np.zeros(-len(self.bits) % 8, np.uint8)])
        return np.packbits(padded).tobytes().hex()

    def as_int(self) -> int:
        return bits_to_int(self.bits)


def bits_to_int(bits) -> int:
    out = 0
    for b in np.asarray(bits, dtype=np.uint8).tolist():
        out = (out << 1) | b
    return out


def int_to_bits(value: int, length: int) -> np.ndarray:
    return np.array([(value >> (length - 1 - i)) & 1 for i in range(length)], dtype=np.uint8)


@lru_cache(maxsize=None)
def build_code(t: int) -> BchCodeSpec:
    """Narrow-sense binary BCH code of length 255 with designed distance ``2t + 1``."""
    if not 1 <= t <= MAX_T:
        raise UnsupportedT(f"t={t} outside supported range 1..{MAX_T}")
    g = 1
    seen: set[tuple[int, ...]] = set()
    for i in range(1, 2 * t + 1):
        coset = cyclotomic_coset(i)
        if coset in seen:
            continue
        seen.add(coset)
        g = poly_mul(g, minimal_polynomial(i))
    m = N - poly_deg(g)
    if m < 1:
        raise UnsupportedT(f"no BCH code of length {N} corrects {t} errors")
    return BchCodeSpec(N, m, t, g)


def codes_for(t_values: Sequence[int]) -> list[BchCodeSpec]:
    return sorted((build_code(t) for t in t_values), key=lambda c: c.t)


def encode(spec: BchCodeSpec, message) -> Block:
    msg = np.asarray(message, dtype=np.uint8)
    if msg.shape != (spec.m,):
        raise LengthMismatch(f"message must hold {spec.m} bits, got {msg.size}")
    shifted = bits_to_int(msg) << spec.parity_bits
    parity = poly_mod(shifted, spec.generator)
    return Block(np.concatenate([msg, int_to_bits(parity, spec.parity_bits)]))


def is_codeword(spec: BchCodeSpec, block: Block) -> bool:
    return poly_mod(block.as_int(), spec.generator) == 0


class DecodeResult(NamedTuple):
    message: np.ndarray
    corrected: int


def syndromes(spec: BchCodeSpec, bits: np.ndarray) -> list[int]:
    """``S_j = r(alpha**j)`` for ``j = 1..2t``."""
    degrees = (spec.n - 1) - np.flatnonzero(bits)
    if degrees.size == 0:
        return [0] * (2 * spec.t)
    j = np.arange(1, 2 * spec.t + 1)
    powers = EXP[np.outer(j, degrees) % N]
    return np.bitwise_xor.reduce(powers, axis=1).tolist()


def berlekamp_massey(synd: Sequence[int]) -> list[int]:
    """Error-locator polynomial (lowest degree first) for a syndrome sequence."""
    c = [1]
    b = [1]
    length = 0
    shift = 1
    last = 1
    for k, s in enumerate(synd):
        d = s
        for i in range(1, length + 1):
            if i < len(c) and c[i] and synd[k - i]:
                d ^= _EXP[_LOG[c[i]] + _LOG[synd[k - i]]]
        if d == 0:
            shift += 1
            continue
        coef = gf_mul(d, gf_inv(last))
        update = [0] * shift + [gf_mul(coef, x) for x in b]
        new_c = c + [0] * max(0, len(update) - len(c))
        for i, u in enumerate(update):
            new_c[i] ^= u
        if 2 * length <= k:
            b = c
            length = k + 1 - length
            last = d
            shift = 1
        else:
            shift += 1
        c = new_c
    while len(c) > 1 and c[-1] == 0:
        c.pop()
    return c


def chien_search(locator: Sequence[int], n: int = N) -> np.ndarray:
    """Degrees ``d`` in ``[0, n)`` with ``locator(alpha**-d) == 0``."""
    coeffs = np.asarray(locator, dtype=np.int64)
    k = np.flatnonzero(coeffs)
    d = np.arange(n)
    exps = (LOG[coeffs[k]][None, :] - np.outer(d, k)) % N
    values = np.bitwise_xor.reduce(EXP[exps], axis=1)
    return np.flatnonzero(values == 0)


def decode(spec: BchCodeSpec, received: Block | np.ndarray) -> DecodeResult:
    """Bounded-distance decoding.

    Raises :class:`DecodeFailure` when the error pattern is detected as
    uncorrectable.  Patterns heavier than ``t`` may also be miscorrected to a
    different codeword.
    """
    bits = received.bits if isinstance(received, Block) else np.asarray(received, dtype=np.uint8)
    if bits.shape != (spec.n,):
        raise LengthMismatch(f"received word must hold {spec.n} bits")
    synd = syndromes(spec, bits)
    if not any(synd):
        return DecodeResult(bits[: spec.m].copy(), 0)
    locator = berlekamp_massey(synd)
    n_err = len(locator) - 1
    if n_err > spec.t:
        raise DecodeFailure(f"locator degree {n_err} exceeds t={spec.t}")
    degrees = chien_search(locator, spec.n)
    if len(degrees) != n_err:
        raise DecodeFailure("error locator does not split over the code positions")
    fixed = bits.copy()
    fixed[(spec.n - 1) - degrees] ^= 1
    if any(syndromes(spec, fixed)):
        raise DecodeFailure("correction did not produce a codeword")
    return DecodeResult(fixed[: spec.m], n_err)


def split_key(key_bits, spec: BchCodeSpec) -> list[np.ndarray]:
    """Split a key into ``ceil(k/m)`` messages, zero-padding the last one at the tail."""
    key = np.asarray(key_bits, dtype=np.uint8)
    blocks = spec.blocks_for(len(key))
    padded = np.zeros(blocks * spec.m, dtype=np.uint8)
    padded[: len(key)] = key
    return [padded[i * spec.m : (i + 1) * spec.m] for i in range(blocks)]


def join_key(messages: Sequence[np.ndarray], key_bits: int) -> np.ndarray:
    return np.concatenate(list(messages))[:key_bits]
