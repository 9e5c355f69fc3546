"""Approximate accumulation: staged sub-sorters with clip/stride
sub-sampling, and temporal folding of a small sorter over many cycles.

A sub-sampling block on a sorted length-l stream clips c bits from each
end and keeps one bit every s positions of the remainder, which is a
truncated quantization: the output popcount obeys

    k' = ceil(clamp(k - c, 0, l - 2c) / s)

exactly.  Stride s scales the represented value, so the output alpha
grows by s.  Temporal folding feeds a compressed partial sum back into
the sorter together with fresh product bits each cycle; the feedback
path must be clip-only (stride 1), otherwise the partial would carry a
different scale than the incoming bits.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bitstream import Bitstream, encode
from .errors import CanonicalError, ConfigError
from .sortnet import build_bitonic, evaluate_batch

ZERO_PROBABILITY_DEFAULT = 0.25


@dataclass(frozen=True)
class StageConfig:
    """One stage: m sub-sorters of width l, each clipped by c and strided by s."""

    m: int
    l: int
    c: int
    s: int

    def __post_init__(self):
        if self.m < 1:
            raise ConfigError(f"sub-BSN count must be >= 1, got {self.m}")
        if self.l - 2 * self.c <= 0:
            raise ConfigError(f"clip window empty: l={self.l}, c={self.c}")
        if self.s < 1:
            raise ConfigError(f"stride must be >= 1, got {self.s}")
        if (self.l - 2 * self.c) % self.s != 0:
            raise ConfigError(
                f"stride {self.s} must divide the kept width {self.l - 2 * self.c}"
            )

    @property
    def sub_out_width(self) -> int:
        return (self.l - 2 * self.c) // self.s

    @property
    def in_width(self) -> int:
        return self.m * self.l

    @property
    def out_width(self) -> int:
        return self.m * self.sub_out_width


@dataclass(frozen=True)
class ApproxConfig:
    """Ordered stages; each stage's output width must feed the next exactly."""

    stages: tuple[StageConfig, ...]

    def __post_init__(self):
        if not self.stages:
            raise ConfigError("approximate config needs at least one stage")
        stages = tuple(
            s if isinstance(s, StageConfig) else StageConfig(*s) for s in self.stages
        )
        object.__setattr__(self, "stages", stages)
        for a, b in zip(stages, stages[1:]):
            if a.out_width != b.in_width:
                raise ConfigError(
                    f"stage width mismatch: {a.out_width} produced, {b.in_width} consumed"
                )

    @property
    def in_width(self) -> int:
        return self.stages[0].in_width

    @property
    def out_width(self) -> int:
        return self.stages[-1].out_width

    @property
    def stride_product(self) -> int:
        p = 1
        for st in self.stages:
            p *= st.s
        return p

    @classmethod
    def exact(cls, width: int) -> "ApproxConfig":
        """The identity configuration: one full-width sorter, no truncation."""
        return cls((StageConfig(1, width, 0, 1),))


@dataclass
class EvalStats:
    """Optional collector for clipping events during approximate evaluation."""

    clip_events: int = 0
    per_stage_clips: list[int] = field(default_factory=list)


def subsample(sorted_stream: Bitstream, c: int, s: int) -> Bitstream:
    """Clip c bits per end of a sorted stream and keep every s-th bit."""
    if not sorted_stream.canonical:
        raise CanonicalError("subsample needs a sorted input stream")
    st = StageConfig(1, sorted_stream.bsl, c, s)  # reuse the validation
    out = sorted_stream.bits[c : sorted_stream.bsl - c : s]
    assert out.size == st.sub_out_width
    return Bitstream(out, sorted_stream.alpha * s)


def subsample_popcount(k, l: int, c: int, s: int):
    """Closed-form popcount after sub-sampling: ceil(clamp(k-c, 0, l-2c)/s)."""
    clamped = np.clip(np.asarray(k) - c, 0, l - 2 * c)
    return -(-clamped // s)


def eval_approx_batch(
    cfg: ApproxConfig, inputs: np.ndarray, stats: EvalStats | None = None
) -> np.ndarray:
    """Run (batch, M) product-bit rows through the staged sorter pipeline."""
    arr = np.asarray(inputs, dtype=np.uint8)
    if arr.ndim != 2 or arr.shape[1] != cfg.in_width:
        raise ConfigError(
            f"input width {arr.shape[-1]} != config input width {cfg.in_width}"
        )
    batch = arr.shape[0]
    for st in cfg.stages:
        blocks = arr.reshape(batch * st.m, st.l)
        if stats is not None:
            k = blocks.sum(axis=1)
            clips = int(np.count_nonzero((k < st.c) | (k > st.l - st.c)))
            stats.clip_events += clips
            stats.per_stage_clips.append(clips)
        srt = evaluate_batch(build_bitonic(st.l), blocks)
        kept = srt[:, st.c : st.l - st.c : st.s]
        arr = kept.reshape(batch, st.out_width)
    return arr


def eval_approx_bsn(
    cfg: ApproxConfig,
    product_bits,
    alpha: float = 1.0,
    stats: EvalStats | None = None,
) -> Bitstream:
    """Evaluate one product-bit vector; output alpha scales by the stride product."""
    arr = np.asarray(product_bits, dtype=np.uint8)
    out = eval_approx_batch(cfg, arr[None, :], stats)[0]
    return Bitstream(out, alpha * cfg.stride_product)


@dataclass(frozen=True)
class TemporalSchedule:
    """Reuse of one bsn_width sorter over `cycles` cycles, carrying a
    partial_bsl compressed partial sum between cycles."""

    bsn_width: int
    partial_bsl: int
    cycles: int
    inner: ApproxConfig | None = None

    def __post_init__(self):
        if self.cycles < 1:
            raise ConfigError(f"cycles must be >= 1, got {self.cycles}")
        if not 0 < self.partial_bsl < self.bsn_width:
            raise ConfigError(
                f"partial width {self.partial_bsl} must lie in (0, {self.bsn_width})"
            )
        if self.partial_bsl % 2 != 0:
            raise ConfigError("partial width must be even to carry a zero level")

    @property
    def new_bits_per_cycle(self) -> int:
        return self.bsn_width - self.partial_bsl

    @property
    def total_width(self) -> int:
        return self.cycles * self.new_bits_per_cycle


def _check_inner(sched: TemporalSchedule, inner: ApproxConfig | None) -> ApproxConfig:
    cfg = inner if inner is not None else sched.inner
    if cfg is None:
        raise ConfigError("temporal evaluation needs an inner approximate config")
    if cfg.in_width != sched.bsn_width:
        raise ConfigError(
            f"inner config width {cfg.in_width} != sorter width {sched.bsn_width}"
        )
    if cfg.out_width != sched.partial_bsl:
        raise ConfigError(
            f"inner config output {cfg.out_width} != partial width {sched.partial_bsl}"
        )
    if cfg.stride_product != 1:
        raise ConfigError("feedback path must be clip-only: strides would rescale the partial")
    return cfg


def eval_temporal_batch(
    sched: TemporalSchedule,
    inner: ApproxConfig | None,
    inputs: np.ndarray,
    stats: EvalStats | None = None,
) -> np.ndarray:
    """Fold (batch, W) product rows through the reused sorter; returns (batch, B)."""
    cfg = _check_inner(sched, inner)
    arr = np.asarray(inputs, dtype=np.uint8)
    if arr.ndim != 2 or arr.shape[1] != sched.total_width:
        raise ConfigError(
            f"input width {arr.shape[-1]} != schedule total width {sched.total_width}"
        )
    batch = arr.shape[0]
    b = sched.partial_bsl
    step = sched.new_bits_per_cycle
    partial = np.broadcast_to(encode(0, b).bits, (batch, b)).copy()
    for t in range(sched.cycles):
        fresh = arr[:, t * step : (t + 1) * step]
        partial = eval_approx_batch(cfg, np.concatenate([partial, fresh], axis=1), stats)
    return partial


def eval_temporal(
    sched: TemporalSchedule,
    inner: ApproxConfig | None,
    product_bits,
    alpha: float = 1.0,
    stats: EvalStats | None = None,
) -> Bitstream:
    """Accumulate one W-bit product vector through the folded sorter."""
    arr = np.asarray(product_bits, dtype=np.uint8)
    out = eval_temporal_batch(sched, inner, arr[None, :], stats)[0]
    return Bitstream(out, alpha)


@dataclass(frozen=True)
class TernaryDist:
    """I.i.d. ternary products: P(+1) = P(-1) = p, P(0) = 1 - 2p."""

    p: float = ZERO_PROBABILITY_DEFAULT

    def __post_init__(self):
        if not 0 <= 2 * self.p <= 1:
            raise ConfigError(f"need 0 <= 2p <= 1, got p={self.p}")

    def sample_values(self, rng: np.random.Generator, shape) -> np.ndarray:
        u = rng.random(shape)
        return np.where(u < self.p, 1, np.where(u < 2 * self.p, -1, 0)).astype(np.int64)


def values_to_product_bits(values: np.ndarray) -> np.ndarray:
    """Ternary values (..., F) -> thermometer pairs (..., 2F)."""
    bit0 = (values >= 0).astype(np.uint8)
    bit1 = (values > 0).astype(np.uint8)
    return np.stack([bit0, bit1], axis=-1).reshape(values.shape[:-1] + (-1,))


@dataclass(frozen=True)
class MseReport:
    trials: int
    in_width: int
    mse: float
    mse_normalized: float
    mean_error: float
    max_abs_error: float


def measure_mse(
    cfg: ApproxConfig | TemporalSchedule,
    dist: TernaryDist,
    trials: int,
    rng: np.random.Generator,
    inner: ApproxConfig | None = None,
) -> MseReport:
    """Monte Carlo error of the approximate accumulator against the exact sum.

    Draws i.i.d. ternary products, accumulates their bits through the
    configured datapath, rescales the decoded output back to sum units
    by the stride product, and compares with the integer sum.
    """
    if trials < 1:
        raise ConfigError(f"trials must be >= 1, got {trials}")
    if isinstance(cfg, TemporalSchedule):
        width = cfg.total_width
        stride_product = 1
    else:
        width = cfg.in_width
        stride_product = cfg.stride_product
    if width % 2 != 0:
        raise ConfigError(f"input width must be even (ternary pairs), got {width}")
    values = dist.sample_values(rng, (trials, width // 2))
    bits = values_to_product_bits(values)
    exact = values.sum(axis=1)
    if isinstance(cfg, TemporalSchedule):
        out = eval_temporal_batch(cfg, inner, bits)
    else:
        out = eval_approx_batch(cfg, bits)
    approx = (out.sum(axis=1, dtype=np.int64) - out.shape[1] / 2) * stride_product
    err = approx - exact
    return MseReport(
        trials=trials,
        in_width=width,
        mse=float(np.mean(err.astype(np.float64) ** 2)),
        mse_normalized=float(np.mean(err.astype(np.float64) ** 2) / (width / 2) ** 2),
        mean_error=float(err.mean()),
        max_abs_error=float(np.abs(err).max()),
    )
