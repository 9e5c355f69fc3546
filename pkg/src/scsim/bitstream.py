"""Thermometer-coded bitstreams: the value carrier of the whole datapath.

A length-L stream with k ones represents the quantized level q = k - L/2,
scaled by a positive factor alpha, so the real value is alpha * q.  In
canonical (thermometer) form all ones precede all zeros; most operations
only rely on popcount semantics and accept any bit order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, RangeError


def _as_bits(bits) -> np.ndarray:
    arr = np.asarray(bits, dtype=np.uint8)
    if arr.ndim != 1:
        raise ConfigError(f"bit vector must be one-dimensional, got shape {arr.shape}")
    if arr.size == 0:
        raise ConfigError("bit vector must be non-empty")
    if not np.all((arr == 0) | (arr == 1)):
        raise ConfigError("bit vector entries must be 0 or 1")
    return arr


class Bitstream:
    """Immutable bit sequence with a scale factor.

    `bits` is a read-only uint8 array of 0/1; index 0 is the first bit
    (the end where the ones of a canonical stream sit).
    """

    __slots__ = ("bits", "alpha")

    def __init__(self, bits, alpha: float = 1.0):
        arr = _as_bits(bits).copy()
        arr.flags.writeable = False
        if not alpha > 0:
            raise ConfigError(f"alpha must be positive, got {alpha}")
        object.__setattr__(self, "bits", arr)
        object.__setattr__(self, "alpha", float(alpha))

    def __setattr__(self, name, value):
        raise AttributeError("Bitstream is immutable")

    @property
    def bsl(self) -> int:
        return self.bits.size

    @property
    def popcount(self) -> int:
        return int(self.bits.sum())

    @property
    def canonical(self) -> bool:
        """True iff no 0 appears before a 1 (thermometer form)."""
        return bool(np.all(np.diff(self.bits.astype(np.int8)) <= 0))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Bitstream):
            return NotImplemented
        return self.alpha == other.alpha and np.array_equal(self.bits, other.bits)

    def __hash__(self):
        return hash((self.bits.tobytes(), self.alpha))

    def __repr__(self) -> str:
        return f"Bitstream({self.to_literal()!r})"

    def to_string(self) -> str:
        return "".join("1" if b else "0" for b in self.bits)

    def to_literal(self) -> str:
        """Scriptable text form: bit characters plus '@alpha'."""
        return f"{self.to_string()}@{self.alpha!r}"

    @classmethod
    def from_string(cls, s: str, alpha: float = 1.0) -> "Bitstream":
        if not s or set(s) - {"0", "1"}:
            raise ConfigError(f"bit string must be non-empty 0/1 characters, got {s!r}")
        return cls(np.frombuffer(s.encode(), dtype=np.uint8) - ord("0"), alpha)

    @classmethod
    def from_literal(cls, lit: str) -> "Bitstream":
        """Parse the 'bits@alpha' form; a bare bit string implies alpha = 1."""
        if "@" in lit:
            body, _, alpha_s = lit.partition("@")
            try:
                alpha = float(alpha_s)
            except ValueError as exc:
                raise ConfigError(f"bad alpha in literal {lit!r}") from exc
            return cls.from_string(body, alpha)
        return cls.from_string(lit)


@dataclass(frozen=True)
class QuantizedValue:
    """Signed quantized level plus its scale; real value = alpha * q."""

    q: int | float
    alpha: float

    @property
    def value(self) -> float:
        return self.alpha * self.q


def encode(q: int, bsl: int, alpha: float = 1.0) -> Bitstream:
    """Encode level q as the canonical stream with q + bsl/2 leading ones."""
    if bsl < 2 or bsl % 2 != 0:
        raise ConfigError(f"bsl must be an even integer >= 2, got {bsl}")
    q = int(q)
    half = bsl // 2
    if not -half <= q <= half:
        raise RangeError(f"q={q} outside [-{half}, {half}] for bsl={bsl}")
    bits = (np.arange(bsl) < q + half).astype(np.uint8)
    return Bitstream(bits, alpha)


def decode(b: Bitstream) -> QuantizedValue:
    """Decode by popcount: q = popcount - bsl/2.  Works on any bit order."""
    twice = 2 * b.popcount - b.bsl
    q = twice // 2 if twice % 2 == 0 else twice / 2
    return QuantizedValue(q, b.alpha)


def canonicalize(b: Bitstream) -> Bitstream:
    """Re-establish thermometer form; popcount, value and alpha unchanged."""
    return Bitstream(np.sort(b.bits)[::-1], b.alpha)


def bsl_to_binary_precision(bsl: int) -> int | None:
    """Equivalent binary bit width for a given stream length.

    Streams of length 4, 8, 16, ... correspond to log2(bsl)-bit binary
    words; length 2 (the ternary code) has no binary equivalent and maps
    to None.
    """
    if bsl < 2 or bsl & (bsl - 1) != 0:
        raise ConfigError(f"bsl must be a power of two >= 2, got {bsl}")
    if bsl == 2:
        return None
    return bsl.bit_length() - 1
