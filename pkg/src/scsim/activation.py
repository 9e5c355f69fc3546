"""Selective interconnect: monotone step activations as fixed taps.

Because the accumulator output is sorted, bit p (1-indexed) of the
stream is 1 exactly when the popcount is >= p.  Routing output bit j to
a fixed position therefore realizes a step function of the accumulated
value; computing the positions from any monotone f gives the quantized
activation with zero error at level granularity.  Tap position 0 is the
constant 1, position M+1 the constant 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .bitstream import Bitstream
from .errors import CanonicalError, ConfigError, MonotonicityError, SizeError


@dataclass(frozen=True)
class BNParams:
    """Batch-norm scale/shift pair; gamma must be positive (fold negative
    gammas into the weight signs upstream instead)."""

    gamma: float
    beta: float

    def __post_init__(self):
        if not self.gamma > 0:
            raise ConfigError(f"gamma must be positive, got {self.gamma}")


def fused_bn_relu(gamma: float, beta: float, x: float) -> float:
    """BN folded into ReLU: gamma*(x - beta) for x >= beta, else 0."""
    if not gamma > 0:
        raise ConfigError(f"gamma must be positive, got {gamma}")
    return gamma * (x - beta) if x >= beta else 0.0


@dataclass(frozen=True)
class TapVector:
    """Non-decreasing tap positions; applying them to a sorted in_width
    stream yields a sorted out_bsl stream at scale alpha_out."""

    taps: tuple[int, ...]
    in_width: int
    out_bsl: int
    alpha_out: float

    def __post_init__(self):
        if len(self.taps) != self.out_bsl:
            raise ConfigError(f"need {self.out_bsl} taps, got {len(self.taps)}")
        if any(t < 0 or t > self.in_width + 1 for t in self.taps):
            raise ConfigError("tap positions must lie in [0, in_width + 1]")
        if any(a > b for a, b in zip(self.taps, self.taps[1:])):
            raise ConfigError("tap positions must be non-decreasing")


def level_targets(l_out: int, alpha_out: float) -> np.ndarray:
    """Output thresholds alpha_out * (j - L/2) for j = 1..L.

    This array is the shared decision constant between the tap computation
    and any independent reference quantizer: output bit j is on exactly
    when the activation value reaches targets[j-1].
    """
    return alpha_out * (np.arange(1, l_out + 1) - l_out / 2)


def sample_positions(m: int, alpha_in: float) -> np.ndarray:
    """Input values alpha_in * (p - M/2) at every popcount p in [0, M]."""
    return alpha_in * (np.arange(m + 1) - m / 2)


def taps_from_samples(samples: np.ndarray, l_out: int, alpha_out: float) -> np.ndarray:
    """Tap positions from the activation sampled at every popcount.

    Tap j is the smallest popcount whose sample reaches the j-th output
    level, or M+1 (the constant-0 sentinel) when none does.
    """
    if l_out < 2 or l_out % 2 != 0:
        raise ConfigError(f"out_bsl must be an even integer >= 2, got {l_out}")
    drops = np.nonzero(np.diff(samples) < 0)[0]
    if drops.size:
        p = int(drops[0])
        raise MonotonicityError(
            f"activation decreases between popcounts {p} and {p + 1} "
            f"({samples[p]} -> {samples[p + 1]})"
        )
    return np.searchsorted(samples, level_targets(l_out, alpha_out), side="left")


def quantize_to_levels(f_values: np.ndarray, l_out: int, alpha_out: float) -> np.ndarray:
    """Count-of-levels quantizer: q = #{j : f >= target_j} - L/2.

    This is the reference form of the quantization the taps realize; the
    two share only the level thresholds, not the stream machinery.
    """
    targets = level_targets(l_out, alpha_out)
    return (np.asarray(f_values)[..., None] >= targets).sum(axis=-1) - l_out // 2


def compute_taps(
    f: Callable[[float], float],
    m: int,
    l_out: int,
    alpha_in: float,
    alpha_out: float,
) -> TapVector:
    """Derive the tap position of every output bit from a monotone f."""
    if m < 1:
        raise ConfigError(f"in_width must be >= 1, got {m}")
    samples = np.array([float(f(x)) for x in sample_positions(m, alpha_in)])
    taps = taps_from_samples(samples, l_out, alpha_out)
    return TapVector(tuple(int(t) for t in taps), m, l_out, alpha_out)


def apply_taps(t: TapVector, sorted_stream: Bitstream) -> Bitstream:
    """Select the tapped bits of a sorted stream; output is sorted too."""
    if sorted_stream.bsl != t.in_width:
        raise SizeError(f"stream length {sorted_stream.bsl} != tap in_width {t.in_width}")
    if not sorted_stream.canonical:
        raise CanonicalError("selective interconnect needs a sorted input stream")
    aug = np.concatenate(([1], sorted_stream.bits, [0])).astype(np.uint8)
    return Bitstream(aug[np.asarray(t.taps)], t.alpha_out)


def apply_taps_batch(taps: np.ndarray, sorted_bits: np.ndarray) -> np.ndarray:
    """Vectorized tap selection: (rows, L_out) taps on (rows, M) sorted bits."""
    rows = sorted_bits.shape[0]
    aug = np.concatenate(
        [np.ones((rows, 1), np.uint8), sorted_bits, np.zeros((rows, 1), np.uint8)],
        axis=1,
    )
    return np.take_along_axis(aug, taps.astype(np.int64), axis=1)
