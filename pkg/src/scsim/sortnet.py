"""Bitonic sorting networks used as popcount-preserving accumulators.

Construction follows Batcher's recursion, arranged so every comparator
points the same way (max to the lower wire index): each merge phase
starts with a flip stage that compares wire i against the mirrored wire
of its block, followed by half-cleaner stages of shrinking stride.
Arbitrary widths are built by generating the next power-of-two network
and dropping comparators that touch virtual wires; for a descending
sorter the virtual wires hold zeros past the end and never exchange, so
the pruned network still sorts (checked exhaustively in the tests).

For a power-of-two width n = 2^k the construction has exactly
n*k*(k+1)/4 comparators in k*(k+1)/2 stages.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

from .bitstream import Bitstream
from .errors import ConfigError, ScaleError, SizeError


@dataclass(frozen=True)
class SortNetwork:
    """Staged comparator list; each stage is an (m, 2) array of disjoint (i, j), i < j."""

    width: int
    stages: tuple[np.ndarray, ...]

    @property
    def comparator_count(self) -> int:
        return sum(s.shape[0] for s in self.stages)

    @property
    def depth(self) -> int:
        return len(self.stages)


def _padded_stages(n_pad: int):
    """All stages of the power-of-two network, as (i, j) index arrays."""
    k = n_pad.bit_length() - 1
    for p in range(1, k + 1):
        m = 1 << p
        # flip stage: mirror within each block of size m
        base = np.arange(0, n_pad, m).repeat(m // 2)
        off = np.tile(np.arange(m // 2), n_pad // m)
        yield base + off, base + m - 1 - off
        # half-cleaner stages with strides m/4 ... 1
        j = m // 4
        while j >= 1:
            idx = np.arange(n_pad)
            lo = idx[(idx & j) == 0]
            yield lo, lo + j
            j //= 2


@functools.lru_cache(maxsize=None)
def build_bitonic(n: int) -> SortNetwork:
    """Build (and cache) the descending bitonic sorter for n wires."""
    if n < 1:
        raise ConfigError(f"width must be >= 1, got {n}")
    if n == 1:
        return SortNetwork(1, ())
    n_pad = 1 << (n - 1).bit_length()
    stages = []
    for i_arr, j_arr in _padded_stages(n_pad):
        keep = j_arr < n
        if keep.any():
            pairs = np.stack([i_arr[keep], j_arr[keep]], axis=1).astype(np.int32)
            pairs.flags.writeable = False
            stages.append(pairs)
    return SortNetwork(n, tuple(stages))


def evaluate_batch(net: SortNetwork, inputs: np.ndarray) -> np.ndarray:
    """Run a (batch, width) 0/1 array through the network."""
    arr = np.asarray(inputs, dtype=np.uint8)
    if arr.shape[-1] != net.width:
        raise SizeError(f"input width {arr.shape[-1]} != network width {net.width}")
    arr = arr.copy()
    for pairs in net.stages:
        i, j = pairs[:, 0], pairs[:, 1]
        hi = arr[..., i] | arr[..., j]
        lo = arr[..., i] & arr[..., j]
        arr[..., i] = hi
        arr[..., j] = lo
    return arr


def evaluate(net: SortNetwork, input_bits) -> np.ndarray:
    """Sort a single 0/1 vector; returns the descending-sorted bits."""
    arr = np.asarray(input_bits, dtype=np.uint8)
    if arr.ndim != 1:
        raise SizeError(f"expected a 1-d bit vector, got shape {arr.shape}")
    return evaluate_batch(net, arr[None, :])[0]


def accumulate(products: list[Bitstream]) -> Bitstream:
    """Sum streams by sorting all their bits into one canonical stream.

    The ones of all inputs end up as the prefix of the output, so the
    output level is sum(k_i) - M/2 = sum(q_i) for M = sum(L_i).
    """
    if not products:
        raise ConfigError("accumulate needs at least one stream")
    alpha = products[0].alpha
    for p in products[1:]:
        if p.alpha != alpha:
            raise ScaleError(f"mixed alphas in accumulation: {alpha} vs {p.alpha}")
    flat = np.concatenate([p.bits for p in products])
    net = build_bitonic(flat.size)
    return Bitstream(evaluate(net, flat), alpha)


def netlist_dump(net: SortNetwork) -> str:
    """Human-readable stage listing for inspection and cost cross-checks."""
    lines = []
    for s, pairs in enumerate(net.stages):
        body = " ".join(f"({i},{j})" for i, j in pairs)
        lines.append(f"stage {s}: {body}")
    return "\n".join(lines)
