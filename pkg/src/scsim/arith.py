"""Gate-level arithmetic primitives and bit-error injection.

The 2-bit ternary code {00, 10, 11} carries {-1, 0, +1}; multiplication
is closed over it.  For longer activation streams the multiplier
generalizes to sign gating: pass, zero, or complement the stream.
A small two's-complement codec lives here as the radix-binary reference
for fault-tolerance comparisons.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bitstream import Bitstream, encode
from .errors import ConfigError, EncodingError

_TERNARY_BY_VALUE = {-1: "00", 0: "10", 1: "11"}
_VALUE_BY_TERNARY = {"00": -1, "10": 0, "11": 1}


def comparator(a: int, b: int) -> tuple[int, int]:
    """Two-input bit sorter: hi = a OR b, lo = a AND b."""
    return a | b, a & b


@dataclass(frozen=True)
class TernaryCode:
    """A 2-bit thermometer pair; value = popcount - 1."""

    bits: str
    alpha: float = 1.0

    def __post_init__(self):
        if self.bits not in _VALUE_BY_TERNARY:
            raise EncodingError(f"{self.bits!r} is not a ternary code word (00/10/11)")
        if not self.alpha > 0:
            raise ConfigError(f"alpha must be positive, got {self.alpha}")

    @property
    def value(self) -> int:
        return _VALUE_BY_TERNARY[self.bits]

    @classmethod
    def from_value(cls, v: int, alpha: float = 1.0) -> "TernaryCode":
        if v not in _TERNARY_BY_VALUE:
            raise EncodingError(f"ternary value must be -1, 0 or +1, got {v}")
        return cls(_TERNARY_BY_VALUE[v], alpha)

    def to_bitstream(self) -> Bitstream:
        return Bitstream.from_string(self.bits, self.alpha)


def ternary_multiply(w: TernaryCode, x: TernaryCode) -> TernaryCode:
    """Multiply two ternary codes; output is the canonical code of the product."""
    return TernaryCode.from_value(w.value * x.value, w.alpha * x.alpha)


def sign_gated_multiply(w: TernaryCode, x: Bitstream) -> Bitstream:
    """Multiply a ternary weight into an arbitrary-length stream.

    w = +1 passes the stream through, w = -1 complements every bit
    (exact negation under popcount semantics), and w = 0 emits the fixed
    zero pattern of L/2 ones followed by L/2 zeros.
    """
    alpha = w.alpha * x.alpha
    if w.value == 1:
        return Bitstream(x.bits, alpha)
    if w.value == -1:
        return Bitstream(1 - x.bits, alpha)
    if x.bsl % 2 != 0:
        raise ConfigError(f"zero product needs an even stream length, got {x.bsl}")
    return encode(0, x.bsl, alpha)


@dataclass(frozen=True)
class FaultConfig:
    """Independent per-bit flip probability plus a reproducibility seed."""

    ber: float
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.ber <= 1.0:
            raise ConfigError(f"ber must lie in [0, 1], got {self.ber}")


def inject_faults(b: Bitstream, f: FaultConfig, rng: np.random.Generator) -> Bitstream:
    """Flip each bit independently with probability f.ber.

    Flip sites are decided by thresholding rng uniforms against ber, so
    runs that share a generator state produce nested fault sets as ber
    grows (useful for paired sweeps).
    """
    flips = rng.random(b.bsl) < f.ber
    return Bitstream(b.bits ^ flips.astype(np.uint8), b.alpha)


def flip_bits(bits: np.ndarray, ber: float, rng: np.random.Generator) -> np.ndarray:
    """Array form of inject_faults for stream tensors of shape (..., L)."""
    flips = rng.random(bits.shape) < ber
    return bits ^ flips.astype(np.uint8)


def binary_encode(v: int, width: int) -> np.ndarray:
    """Two's-complement bits of v, LSB first (bit i weighs 2^i, sign bit -2^(width-1))."""
    if width < 1:
        raise ConfigError(f"width must be >= 1, got {width}")
    lo, hi = -(1 << (width - 1)), (1 << (width - 1)) - 1
    if not lo <= v <= hi:
        raise ConfigError(f"value {v} outside [{lo}, {hi}] for width {width}")
    u = v & ((1 << width) - 1)
    return np.array([(u >> i) & 1 for i in range(width)], dtype=np.uint8)


def binary_decode(bits: np.ndarray) -> int:
    width = len(bits)
    u = int(sum(int(b) << i for i, b in enumerate(bits)))
    if bits[width - 1]:
        u -= 1 << width
    return u


def binary_encode_array(values: np.ndarray, width: int) -> np.ndarray:
    """Vectorized two's-complement encode: (...,) ints -> (..., width) bits."""
    lo, hi = -(1 << (width - 1)), (1 << (width - 1)) - 1
    clipped = np.clip(values, lo, hi).astype(np.int64)
    u = clipped & ((1 << width) - 1)
    shifts = np.arange(width, dtype=np.int64)
    return ((u[..., None] >> shifts) & 1).astype(np.uint8)


def binary_decode_array(bits: np.ndarray) -> np.ndarray:
    width = bits.shape[-1]
    weights = 1 << np.arange(width, dtype=np.int64)
    u = (bits.astype(np.int64) * weights).sum(axis=-1)
    return np.where(bits[..., -1] == 1, u - (1 << width), u)
