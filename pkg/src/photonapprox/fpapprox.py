"""Bit-exact IEEE-754 double precision helpers.

A payload word is the raw 64-bit pattern of a double. Approximation only ever
touches the low mantissa bits; sign and exponent are never altered.
"""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass

import numpy as np

SIGN_BITS = 1
EXPONENT_BITS = 11
MANTISSA_BITS = 52
WORD_BITS = 64
BIAS = 1023
MAX_APPROX_BITS = 32

_WORD_MASK = (1 << WORD_BITS) - 1
_MANTISSA_MASK = (1 << MANTISSA_BITS) - 1
_EXPONENT_MASK = (1 << EXPONENT_BITS) - 1


class ApproxMode(enum.Enum):
    EXACT = "exact"
    TRUNCATE = "truncate"
    REDUCED_POWER = "reduced_power"


@dataclass(frozen=True)
class FloatWord:
    """A 64-bit payload word holding a double's bit pattern."""

    raw: int

    def __post_init__(self):
        if not 0 <= self.raw <= _WORD_MASK:
            raise ValueError(f"raw word out of 64-bit range: {self.raw!r}")

    @classmethod
    def from_float(cls, x: float) -> "FloatWord":
        return cls(struct.unpack("<Q", struct.pack("<d", x))[0])

    @property
    def value(self) -> float:
        return struct.unpack("<d", struct.pack("<Q", self.raw))[0]

    @property
    def sign(self) -> int:
        return self.raw >> (WORD_BITS - 1)

    @property
    def exponent(self) -> int:
        return (self.raw >> MANTISSA_BITS) & _EXPONENT_MASK

    @property
    def mantissa(self) -> int:
        return self.raw & _MANTISSA_MASK

    def hex(self) -> str:
        return f"{self.raw:016x}"

    @classmethod
    def from_hex(cls, text: str) -> "FloatWord":
        return cls(int(text, 16))


@dataclass(frozen=True)
class ApproxSpec:
    num_lsbs: int = 0
    mode: ApproxMode = ApproxMode.EXACT

    def __post_init__(self):
        _check_k(self.num_lsbs)


def _check_k(k: int) -> None:
    if not 0 <= k <= MAX_APPROX_BITS:
        raise ValueError(f"number of approximated bits must be in [0, {MAX_APPROX_BITS}], got {k}")


def decompose(word: FloatWord) -> tuple[int, int, int]:
    """Split a word into (sign, biased exponent, mantissa fraction bits)."""
    return word.sign, word.exponent, word.mantissa


def compose(sign: int, exponent: int, mantissa: int) -> FloatWord:
    if sign not in (0, 1):
        raise ValueError("sign must be 0 or 1")
    if not 0 <= exponent <= _EXPONENT_MASK:
        raise ValueError("exponent out of 11-bit range")
    if not 0 <= mantissa <= _MANTISSA_MASK:
        raise ValueError("mantissa out of 52-bit range")
    return FloatWord((sign << (WORD_BITS - 1)) | (exponent << MANTISSA_BITS) | mantissa)


def normal_value(sign: int, exponent: int, mantissa: int) -> float:
    """Value of a normal double from its fields, (-1)^S * 2^(E-bias) * (1 + M/2^52)."""
    return (-1.0) ** sign * 2.0 ** (exponent - BIAS) * (1.0 + mantissa / 2.0**MANTISSA_BITS)


def lsb_mask(k: int) -> int:
    """Mask that keeps everything except the k lowest bits."""
    _check_k(k)
    return _WORD_MASK ^ ((1 << k) - 1)


def truncate_lsbs(word: FloatWord, k: int) -> FloatWord:
    return FloatWord(word.raw & lsb_mask(k))


def relative_truncation_bound(k: int) -> float:
    """Worst-case relative error of zeroing k mantissa LSBs of a normal double."""
    _check_k(k)
    if k == 0:
        return 0.0
    return 2.0 ** (k - MANTISSA_BITS)


def as_words(values) -> np.ndarray:
    """View float64 data as its uint64 bit patterns (copying)."""
    return np.ascontiguousarray(values, dtype=np.float64).view(np.uint64).copy()


def from_words(words) -> np.ndarray:
    return np.ascontiguousarray(words, dtype=np.uint64).view(np.float64).copy()


def truncate_array(values, k: int) -> np.ndarray:
    """Vectorised ``truncate_lsbs`` over float64 data."""
    words = as_words(values)
    words &= np.uint64(lsb_mask(k))
    return words.view(np.float64)
