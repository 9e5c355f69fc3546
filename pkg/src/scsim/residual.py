"""High-precision residual path: power-of-two re-scaling and fused accumulation.

Multiplying by 2^N replicates the stream 2^N times in the buffer.
Dividing by 2^N keeps 1 of every 2 bits per cycle and appends a
constant zero-valued pad of L/4 ones followed by L/4 zeros so the
stream length never changes (for L = 16 the pad is literally
"11110000").  Selection acts on the sorted view of the stream each
cycle, which makes every cycle an exact ceil-halving of the level:
after N cycles the result is ceil(q / 2^N).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .bitstream import Bitstream
from .errors import CanonicalError, ConfigError, ScaleError
from .sortnet import accumulate


class RescaleDirection(Enum):
    MULTIPLY = "multiply"
    DIVIDE = "divide"


@dataclass(frozen=True)
class RescaleOp:
    """Direction plus exponent of a 2^N re-scaling step."""

    direction: RescaleDirection
    n_steps: int

    def __post_init__(self):
        if self.n_steps < 0:
            raise ConfigError(f"n_steps must be >= 0, got {self.n_steps}")

    @classmethod
    def from_log2(cls, ratio_log2: int) -> "RescaleOp":
        if ratio_log2 >= 0:
            return cls(RescaleDirection.MULTIPLY, ratio_log2)
        return cls(RescaleDirection.DIVIDE, -ratio_log2)


def rescale_mul(b: Bitstream, n: int) -> Bitstream:
    """Replicate the stream 2^N times; the level scales by exactly 2^N."""
    if n < 0:
        raise ConfigError(f"N must be >= 0, got {n}")
    if n == 0:
        return b
    return Bitstream(np.tile(b.bits, 1 << n), b.alpha)


def _pad_block(bsl: int) -> np.ndarray:
    """Zero-valued pad: L/4 ones then L/4 zeros (L/2 bits total)."""
    quarter = bsl // 4
    return np.concatenate([np.ones(quarter, np.uint8), np.zeros(quarter, np.uint8)])


def div_bits_once(bits: np.ndarray) -> np.ndarray:
    """One division cycle on (..., L) sorted bit arrays: keep even
    positions of the sorted view, append the pad; length is preserved."""
    bsl = bits.shape[-1]
    if bsl % 4 != 0:
        raise ConfigError(f"division needs a length divisible by 4, got {bsl}")
    srt = np.sort(bits, axis=-1)[..., ::-1]
    kept = srt[..., 0::2]
    pad = np.broadcast_to(_pad_block(bsl), bits.shape[:-1] + (bsl // 2,))
    return np.concatenate([kept, pad], axis=-1)


def rescale_div(b: Bitstream, n: int) -> Bitstream:
    """Divide by 2^N over N selection cycles; level becomes ceil(q / 2^N).

    The input must be in thermometer form.  Intermediate cycles select
    from the sorted view of the padded stream, which keeps the per-cycle
    contract q' = ceil(q / 2) exact for any cycle count.
    """
    if n < 0:
        raise ConfigError(f"N must be >= 0, got {n}")
    if not b.canonical:
        raise CanonicalError("rescale_div needs a thermometer-form input")
    if n == 0:
        return b
    bits = b.bits
    for _ in range(n):
        bits = div_bits_once(bits)
    return Bitstream(bits, b.alpha)


def align_and_accumulate(
    residual: Bitstream, conv_sum: Bitstream, ratio_log2: int
) -> Bitstream:
    """Re-scale the residual onto the convolution's alpha, then accumulate.

    Requires residual.alpha / conv_sum.alpha == 2^ratio_log2; the
    hardware block only supports power-of-two ratios.
    """
    expected = conv_sum.alpha * 2.0**ratio_log2
    if not np.isclose(residual.alpha, expected, rtol=1e-12, atol=0.0):
        raise ScaleError(
            f"alpha ratio {residual.alpha / conv_sum.alpha} is not 2^{ratio_log2}"
        )
    if ratio_log2 >= 0:
        aligned = rescale_mul(residual, ratio_log2)
    else:
        aligned = rescale_div(residual, -ratio_log2)
    return accumulate([conv_sum, Bitstream(aligned.bits, conv_sum.alpha)])


def ceil_div_pow2(q, n: int):
    """Integer reference for the divider: ceil(q / 2^N), elementwise."""
    arr = np.asarray(q)
    return -((-arr) >> n) if arr.dtype.kind in "iu" else np.ceil(arr / (1 << n))
