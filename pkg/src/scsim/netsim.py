"""Model format, SC datapath execution, integer oracle, fault harness.

A model is an ordered chain of layers over [H, W, C] tensors.  Every
tensor is quantized: integer levels q in [-L/2, L/2] at a per-tensor
scale alpha and stream length L.  The SC path (`run_sc`) executes real
bitstreams through sign-gated multipliers, sorting-network accumulators,
the residual re-scaling block and selective-interconnect activations.
The oracle (`run_oracle`) is a plain integer implementation that shares
only the decision rules (level thresholds, ceil rounding) with the SC
path; in exact mode the two agree bit for bit.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .activation import apply_taps_batch, quantize_to_levels, sample_positions, taps_from_samples
from .approx import ApproxConfig, EvalStats, TemporalSchedule, eval_approx_batch, eval_temporal_batch
from .arith import FaultConfig, binary_decode_array, binary_encode_array, flip_bits
from .bitstream import bsl_to_binary_precision
from .errors import ConfigError, ParseError, ScaleError, ValidationError
from .residual import ceil_div_pow2, div_bits_once
from .sortnet import build_bitonic, evaluate_batch

FORMAT_VERSION = 1
COMPUTE_KINDS = ("conv2d", "dense", "avgpool")
LAYER_KINDS = COMPUTE_KINDS + ("flatten",)
ACT_KINDS = ("bn_relu", "clip", "identity")


@dataclass(frozen=True, eq=False)
class LayerSpec:
    id: str
    kind: str
    in_shape: tuple[int, int, int]
    out_shape: tuple[int, int, int]
    kernel: tuple[int, int] | None = None
    stride: tuple[int, int] | None = None
    pad: tuple[int, int] | None = None
    weights: np.ndarray | None = None  # (O, F) ternary, F in [kh][kw][in_ch] order
    alpha_w: float = 1.0
    act_kind: str = "identity"
    gamma: np.ndarray | None = None  # per output channel
    beta: np.ndarray | None = None
    act_bsl: int = 2
    alpha_act: float = 1.0
    residual_from: str | None = None
    residual_bsl: int | None = None
    rescale_log2: int = 0


@dataclass(frozen=True, eq=False)
class ModelGraph:
    name: str
    input_shape: tuple[int, int, int]
    input_bsl: int
    input_alpha: float
    layers: tuple[LayerSpec, ...]

    def layer_index(self, layer_id: str) -> int:
        for i, layer in enumerate(self.layers):
            if layer.id == layer_id:
                return i
        raise ValidationError(f"no layer named {layer_id!r}")


@dataclass
class RunConfig:
    """Datapath selection: exact sorters or per-width approximate ones."""

    mode: str = "exact"
    approx_configs: dict[int, ApproxConfig] = field(default_factory=dict)
    temporal_schedules: dict[int, TemporalSchedule] = field(default_factory=dict)
    fault: FaultConfig | None = None
    act_bsl_overrides: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if self.mode not in ("exact", "approx"):
            raise ConfigError(f"mode must be 'exact' or 'approx', got {self.mode!r}")


@dataclass(frozen=True, eq=False)
class QTensor:
    """Quantized tensor: integer levels at a scale, carried on bsl-bit streams."""

    q: np.ndarray
    alpha: float
    bsl: int

    @property
    def shape(self):
        return self.q.shape


@dataclass
class LayerTrace:
    layer_id: str
    accum_width: int
    pre_si_popcounts: np.ndarray
    clip_events: int = 0


@dataclass
class RunResult:
    output: QTensor
    trace: list[LayerTrace]


# ---------------------------------------------------------------------------
# model loading


def _field(obj: dict, key: str, ctx: str):
    if key not in obj:
        raise ValidationError(f"{ctx}: missing field {key!r}")
    return obj[key]


def _shape3(v, ctx: str) -> tuple[int, int, int]:
    if not (isinstance(v, list) and len(v) == 3 and all(isinstance(d, int) and d > 0 for d in v)):
        raise ValidationError(f"{ctx}: expected a [H, W, C] list of positive ints, got {v!r}")
    return tuple(v)


def _pair(v, ctx: str) -> tuple[int, int]:
    if not (isinstance(v, list) and len(v) == 2 and all(isinstance(d, int) and d >= 0 for d in v)):
        raise ValidationError(f"{ctx}: expected a 2-int list, got {v!r}")
    return tuple(v)


def _even_bsl(v, ctx: str) -> int:
    if not (isinstance(v, int) and v >= 2 and v % 2 == 0):
        raise ValidationError(f"{ctx}: bsl must be an even integer >= 2, got {v!r}")
    return v


def _conv_out_shape(layer: LayerSpec) -> tuple[int, int, int]:
    h, w, _ = layer.in_shape
    kh, kw = layer.kernel
    sh, sw = layer.stride
    ph, pw = layer.pad
    ho = (h + 2 * ph - kh) // sh + 1
    wo = (w + 2 * pw - kw) // sw + 1
    return ho, wo, layer.out_shape[2]


def _parse_layer(obj: dict, prev_shape, prev_alpha, prev_bsl) -> LayerSpec:
    ctx = f"layer {obj.get('id', '?')!r}"
    lid = str(_field(obj, "id", ctx))
    kind = _field(obj, "kind", ctx)
    if kind not in LAYER_KINDS:
        raise ValidationError(f"{ctx}: unknown kind {kind!r}")
    in_shape = _shape3(_field(obj, "in_shape", ctx), ctx)
    out_shape = _shape3(_field(obj, "out_shape", ctx), ctx)
    if in_shape != prev_shape:
        raise ValidationError(
            f"{ctx}: in_shape {list(in_shape)} does not match upstream shape {list(prev_shape)}"
        )

    kernel = stride = pad = None
    weights = None
    alpha_w = 1.0
    if kind in ("conv2d", "avgpool"):
        kernel = _pair(_field(obj, "kernel", ctx), f"{ctx}.kernel")
        # pooling windows default to non-overlapping, convolutions to unit stride
        default_stride = list(kernel) if kind == "avgpool" else [1, 1]
        stride = _pair(obj.get("stride", default_stride), f"{ctx}.stride")
        pad = _pair(obj.get("pad", [0, 0]), f"{ctx}.pad")
    if kind in ("conv2d", "dense"):
        alpha_w = float(_field(obj, "alpha_w", ctx))
        if not alpha_w > 0:
            raise ValidationError(f"{ctx}: alpha_w must be positive, got {alpha_w}")
        raw = np.asarray(_field(obj, "weights", ctx), dtype=np.int64)
        bad = np.setdiff1d(np.unique(raw), [-1, 0, 1])
        if bad.size:
            raise ValidationError(f"{ctx}: non-ternary weight value {bad[0]}")
        out_ch = out_shape[2]
        if kind == "dense":
            fan_in = math.prod(in_shape)
            if out_shape[:2] != (1, 1):
                raise ValidationError(f"{ctx}: dense out_shape must be [1, 1, O]")
        else:
            fan_in = kernel[0] * kernel[1] * in_shape[2]
        if raw.size != out_ch * fan_in:
            raise ValidationError(
                f"{ctx}: expected {out_ch * fan_in} weights ({out_ch} x {fan_in}), got {raw.size}"
            )
        weights = raw.reshape(out_ch, fan_in)
        weights.flags.writeable = False

    act_kind = "identity"
    gamma = beta = None
    act_bsl = prev_bsl
    alpha_act = prev_alpha
    if kind != "flatten":
        act = _field(obj, "act", ctx)
        act_kind = _field(act, "kind", f"{ctx}.act")
        if act_kind not in ACT_KINDS:
            raise ValidationError(f"{ctx}: unknown activation kind {act_kind!r}")
        if act_kind == "bn_relu":
            gamma = np.asarray(_field(act, "gamma", f"{ctx}.act"), dtype=np.float64)
            beta = np.asarray(_field(act, "beta", f"{ctx}.act"), dtype=np.float64)
            if gamma.shape != (out_shape[2],) or beta.shape != (out_shape[2],):
                raise ValidationError(
                    f"{ctx}: gamma/beta must have one entry per output channel"
                )
            if not np.all(gamma > 0):
                raise ValidationError(f"{ctx}: gamma entries must be positive")
            gamma.flags.writeable = False
            beta.flags.writeable = False
        act_bsl = _even_bsl(_field(obj, "act_bsl", ctx), ctx)
        alpha_act = float(_field(obj, "alpha_act", ctx))
        if not alpha_act > 0:
            raise ValidationError(f"{ctx}: alpha_act must be positive, got {alpha_act}")

    layer = LayerSpec(
        id=lid,
        kind=kind,
        in_shape=in_shape,
        out_shape=out_shape,
        kernel=kernel,
        stride=stride,
        pad=pad,
        weights=weights,
        alpha_w=alpha_w,
        act_kind=act_kind,
        gamma=gamma,
        beta=beta,
        act_bsl=act_bsl,
        alpha_act=alpha_act,
        residual_from=obj.get("residual_from"),
        residual_bsl=obj.get("residual_bsl"),
        rescale_log2=int(obj.get("rescale_log2", 0)),
    )

    if kind in ("conv2d", "avgpool"):
        expect = _conv_out_shape(layer)
        if expect != out_shape:
            raise ValidationError(
                f"{ctx}: out_shape {list(out_shape)} inconsistent with geometry, expected {list(expect)}"
            )
        if kind == "avgpool":
            win = kernel[0] * kernel[1]
            if win & (win - 1) != 0:
                raise ValidationError(f"{ctx}: pooling window {win} must be a power of two")
            if out_shape[2] != in_shape[2]:
                raise ValidationError(f"{ctx}: avgpool cannot change the channel count")
    if kind == "flatten":
        if out_shape != (1, 1, math.prod(in_shape)):
            raise ValidationError(f"{ctx}: flatten out_shape must be [1, 1, {math.prod(in_shape)}]")
    return layer


def load_model(path) -> ModelGraph:
    """Parse and validate a model file; every invariant is checked eagerly."""
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise ParseError(f"cannot read model file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"model file {path} is not valid JSON: {exc}") from exc
    return model_from_dict(obj)


def model_from_dict(obj: dict) -> ModelGraph:
    if obj.get("format_version") != FORMAT_VERSION:
        raise ValidationError(
            f"unsupported format_version {obj.get('format_version')!r}, expected {FORMAT_VERSION}"
        )
    name = str(_field(obj, "name", "model"))
    inp = _field(obj, "input", "model")
    in_shape = _shape3(_field(inp, "shape", "model.input"), "model.input")
    in_bsl = _even_bsl(_field(inp, "bsl", "model.input"), "model.input")
    in_alpha = float(_field(inp, "alpha", "model.input"))
    if not in_alpha > 0:
        raise ValidationError(f"model.input: alpha must be positive, got {in_alpha}")

    layers: list[LayerSpec] = []
    shape, alpha, bsl = in_shape, in_alpha, in_bsl
    alphas: dict[str, float] = {}
    bsls: dict[str, int] = {}
    shapes: dict[str, tuple[int, int, int]] = {}
    for lobj in _field(obj, "layers", "model"):
        layer = _parse_layer(lobj, shape, alpha, bsl)
        if any(l.id == layer.id for l in layers):
            raise ValidationError(f"duplicate layer id {layer.id!r}")
        if layer.residual_from is not None:
            ctx = f"layer {layer.id!r}"
            if layer.kind not in ("conv2d", "dense"):
                raise ValidationError(f"{ctx}: residual input requires a conv2d/dense layer")
            if layer.residual_from not in alphas:
                raise ValidationError(
                    f"{ctx}: residual_from {layer.residual_from!r} is not an earlier layer"
                )
            if shapes[layer.residual_from] != layer.out_shape:
                raise ValidationError(
                    f"{ctx}: residual source shape {list(shapes[layer.residual_from])} "
                    f"!= out_shape {list(layer.out_shape)}"
                )
            if layer.residual_bsl != bsls[layer.residual_from]:
                raise ValidationError(
                    f"{ctx}: residual_bsl {layer.residual_bsl} != source bsl "
                    f"{bsls[layer.residual_from]}"
                )
            prod_alpha = layer.alpha_w * alpha
            ratio = alphas[layer.residual_from] / prod_alpha
            if not np.isclose(ratio, 2.0 ** layer.rescale_log2, rtol=1e-12, atol=0.0):
                raise ScaleError(
                    f"{ctx}: residual alpha ratio {ratio} is not 2^rescale_log2 "
                    f"(rescale_log2={layer.rescale_log2})"
                )
        layers.append(layer)
        shape = layer.out_shape
        if layer.kind != "flatten":
            alpha, bsl = layer.alpha_act, layer.act_bsl
        alphas[layer.id] = alpha
        bsls[layer.id] = bsl
        shapes[layer.id] = shape
    if not layers:
        raise ValidationError("model has no layers")
    return ModelGraph(name, in_shape, in_bsl, in_alpha, tuple(layers))


def load_tensor(path) -> QTensor:
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise ParseError(f"cannot read tensor file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"tensor file {path} is not valid JSON: {exc}") from exc
    if obj.get("format_version") != FORMAT_VERSION:
        raise ValidationError(f"unsupported tensor format_version {obj.get('format_version')!r}")
    shape = tuple(_field(obj, "shape", "tensor"))
    alpha = float(_field(obj, "alpha", "tensor"))
    data = np.asarray(_field(obj, "data", "tensor"), dtype=np.int64)
    if data.size != math.prod(shape):
        raise ValidationError(f"tensor: {math.prod(shape)} values expected, got {data.size}")
    bsl = int(obj.get("bsl", 0))
    return QTensor(data.reshape(shape), alpha, bsl)


def tensor_to_json(t: QTensor) -> str:
    obj = {
        "format_version": FORMAT_VERSION,
        "shape": list(t.shape),
        "bsl": t.bsl,
        "alpha": t.alpha,
        "data": [int(v) for v in t.q.reshape(-1)],
    }
    return json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n"


def save_tensor(path, t: QTensor) -> None:
    with open(path, "w") as fh:
        fh.write(tensor_to_json(t))


# ---------------------------------------------------------------------------
# shared geometry helpers


def _patch_index(layer: LayerSpec):
    """Flat gather indices into the padded input plane for every output
    position, shaped (Ho*Wo, kh*kw); also returns the padded plane size."""
    h, w, _ = layer.in_shape
    kh, kw = layer.kernel
    sh, sw = layer.stride
    ph, pw = layer.pad
    hp, wp = h + 2 * ph, w + 2 * pw
    ho, wo = layer.out_shape[0], layer.out_shape[1]
    oy = (np.arange(ho) * sh)[:, None, None, None]
    ox = (np.arange(wo) * sw)[None, :, None, None]
    ky = np.arange(kh)[None, None, :, None]
    kx = np.arange(kw)[None, None, None, :]
    flat = (oy + ky) * wp + (ox + kx)
    return flat.reshape(ho * wo, kh * kw), (hp, wp)


def _gather_patches(layer: LayerSpec, plane: np.ndarray, fill) -> np.ndarray:
    """Gather conv/pool windows: plane is (H, W, C, ...) and the result is
    (P, kh*kw, C, ...) with zero-value padding supplied by `fill`."""
    ph, pw = layer.pad
    idx, (hp, wp) = _patch_index(layer)
    padded = np.broadcast_to(fill, (hp, wp) + plane.shape[2:]).copy()
    padded[ph : ph + plane.shape[0], pw : pw + plane.shape[1]] = plane
    flat = padded.reshape((hp * wp,) + plane.shape[2:])
    return flat[idx]


def layer_si_alpha_in(layer: LayerSpec, in_alpha: float) -> float:
    if layer.kind in ("conv2d", "dense"):
        return layer.alpha_w * in_alpha
    return in_alpha


def _act_samples(layer: LayerSpec, ch: int, xs: np.ndarray) -> np.ndarray:
    if layer.act_kind == "bn_relu":
        g, b = layer.gamma[ch], layer.beta[ch]
        return np.where(xs >= b, g * (xs - b), 0.0)
    return xs  # identity and clip: the level quantizer does the clamping


def _layer_taps(layer: LayerSpec, in_width: int, alpha_in: float, l_out: int) -> np.ndarray:
    """Per-channel tap matrix (out_ch, l_out) for the selective interconnect."""
    xs = sample_positions(in_width, alpha_in)
    out_ch = layer.out_shape[2]
    taps = np.empty((out_ch, l_out), dtype=np.int64)
    for ch in range(out_ch):
        taps[ch] = taps_from_samples(_act_samples(layer, ch, xs), l_out, layer.alpha_act)
    return taps


def _align_residual_bits(bits: np.ndarray, rescale_log2: int) -> np.ndarray:
    """Re-scale residual stream rows (N, Lr) onto the product scale."""
    if rescale_log2 > 0:
        return np.tile(bits, (1,) * (bits.ndim - 1) + (1 << rescale_log2,))
    for _ in range(-rescale_log2):
        bits = div_bits_once(bits)
    return bits


def _align_residual_q(q: np.ndarray, rescale_log2: int) -> np.ndarray:
    if rescale_log2 >= 0:
        return q * (1 << rescale_log2)
    return ceil_div_pow2(q, -rescale_log2)


def layer_accum_width(layer: LayerSpec, in_bsl: int) -> int:
    """Sorter input width per output element (residual included)."""
    if layer.kind == "dense":
        fan = math.prod(layer.in_shape)
    elif layer.kind == "conv2d":
        fan = layer.kernel[0] * layer.kernel[1] * layer.in_shape[2]
    elif layer.kind == "avgpool":
        fan = layer.kernel[0] * layer.kernel[1]
    else:
        return 0
    width = fan * in_bsl
    if layer.residual_from is not None:
        width += layer.residual_bsl * (1 << max(layer.rescale_log2, 0))
    return width


def model_accum_widths(model: ModelGraph, cfg: RunConfig | None = None) -> dict[str, int]:
    """Accumulation width of every conv/dense layer (approx-config keys)."""
    widths = {}
    bsl = model.input_bsl
    for layer in model.layers:
        if layer.kind in ("conv2d", "dense"):
            widths[layer.id] = layer_accum_width(layer, bsl)
        if layer.kind != "flatten":
            bsl = layer.act_bsl
            if cfg is not None and layer.id in cfg.act_bsl_overrides:
                bsl = cfg.act_bsl_overrides[layer.id]
    return widths


# ---------------------------------------------------------------------------
# SC execution


def _encode_tensor(q: np.ndarray, bsl: int) -> np.ndarray:
    return (np.arange(bsl) < (q + bsl // 2)[..., None]).astype(np.uint8)


def _zero_pattern(bsl: int) -> np.ndarray:
    return (np.arange(bsl) < bsl // 2).astype(np.uint8)


def _accumulate_rows(rows: np.ndarray, cfg: RunConfig, stats: EvalStats):
    """Sort product rows through the configured datapath.

    Returns (sorted_rows, stride_product).  In approx mode a temporal
    schedule takes precedence over a spatial config of the same width.
    """
    width = rows.shape[1]
    if cfg.mode == "exact":
        return evaluate_batch(build_bitonic(width), rows), 1
    sched = cfg.temporal_schedules.get(width)
    if sched is not None:
        inner = sched.inner
        if inner is None or inner.stages[-1].m != 1:
            raise ConfigError(
                f"temporal schedule for width {width} needs an inner config ending in one sub-BSN"
            )
        return eval_temporal_batch(sched, inner, rows, stats), 1
    acfg = cfg.approx_configs.get(width)
    if acfg is None:
        raise ConfigError(f"no approximate config for accumulation width {width}")
    if acfg.stages[-1].m != 1:
        raise ConfigError(
            f"approximate config for width {width} must end in one sub-BSN "
            "so the activation taps see a sorted stream"
        )
    return eval_approx_batch(acfg, rows, stats), acfg.stride_product


def _si_rows(
    layer: LayerSpec, sorted_rows: np.ndarray, alpha_in: float, l_out: int, positions: int
) -> np.ndarray:
    taps = _layer_taps(layer, sorted_rows.shape[1], alpha_in, l_out)
    return apply_taps_batch(np.tile(taps, (positions, 1)), sorted_rows)


def _exec_layer_sc(
    layer: LayerSpec,
    bits: np.ndarray,
    alpha: float,
    produced: dict[str, tuple[np.ndarray, float]],
    cfg: RunConfig,
) -> tuple[np.ndarray, float, LayerTrace]:
    l_in = bits.shape[-1]
    l_out = cfg.act_bsl_overrides.get(layer.id, layer.act_bsl)
    out_ch = layer.out_shape[2]
    if layer.kind == "flatten":
        out = bits.reshape(layer.out_shape + (l_in,))
        return out, alpha, LayerTrace(layer.id, 0, np.zeros(0, dtype=np.int64))

    if layer.kind == "avgpool":
        patches = _gather_patches(layer, bits, _zero_pattern(l_in))  # (P, win, C, L)
        p, win = patches.shape[0], patches.shape[1]
        rows = patches.transpose(0, 2, 1, 3).reshape(p * out_ch, win * l_in)
        srt = evaluate_batch(build_bitonic(rows.shape[1]), rows)
        n = int(math.log2(win))
        for _ in range(n):
            srt = div_bits_once(srt)
        srt = evaluate_batch(build_bitonic(srt.shape[1]), srt)  # re-sort after padding
        popcounts = srt.sum(axis=1, dtype=np.int64)
        out_rows = _si_rows(layer, srt, alpha, l_out, p)
        out = out_rows.reshape(layer.out_shape[:2] + (out_ch, l_out))
        return out, layer.alpha_act, LayerTrace(layer.id, rows.shape[1], popcounts)

    # conv2d / dense
    if layer.kind == "dense":
        patches = bits.reshape(1, math.prod(layer.in_shape), l_in)
    else:
        g = _gather_patches(layer, bits, _zero_pattern(l_in))  # (P, khkw, C, L)
        patches = g.reshape(g.shape[0], -1, l_in)
    p, fan = patches.shape[0], patches.shape[1]
    w = layer.weights[None, :, :, None]  # (1, O, F, 1)
    x = patches[:, None, :, :]  # (P, 1, F, L)
    prod = np.where(w == 1, x, np.where(w == -1, 1 - x, _zero_pattern(l_in))).astype(np.uint8)
    rows = prod.reshape(p * out_ch, fan * l_in)

    alpha_in = layer.alpha_w * alpha
    if layer.residual_from is not None:
        res_bits, res_alpha = produced[layer.residual_from]
        expected = alpha_in * 2.0 ** layer.rescale_log2
        if not np.isclose(res_alpha, expected, rtol=1e-12, atol=0.0):
            raise ScaleError(
                f"layer {layer.id!r}: residual alpha {res_alpha} is not "
                f"2^{layer.rescale_log2} x {alpha_in}"
            )
        res_rows = res_bits.reshape(p * out_ch, -1)
        rows = np.concatenate([rows, _align_residual_bits(res_rows, layer.rescale_log2)], axis=1)

    stats = EvalStats()
    srt, stride_product = _accumulate_rows(rows, cfg, stats)
    popcounts = srt.sum(axis=1, dtype=np.int64)
    out_rows = _si_rows(layer, srt, alpha_in * stride_product, l_out, p)
    out = out_rows.reshape(layer.out_shape[:2] + (out_ch, l_out))
    trace = LayerTrace(layer.id, rows.shape[1], popcounts, stats.clip_events)
    return out, layer.alpha_act, trace


def run_sc(
    model: ModelGraph,
    input_tensor: QTensor,
    cfg: RunConfig | None = None,
    rng: np.random.Generator | None = None,
) -> RunResult:
    """Execute the model on the SC datapath; returns the decoded output
    tensor and a per-layer trace of pre-activation popcounts."""
    cfg = cfg or RunConfig()
    _check_input(model, input_tensor)
    if cfg.fault is not None and rng is None:
        rng = np.random.default_rng(cfg.fault.seed)

    bits = _encode_tensor(input_tensor.q, model.input_bsl)
    alpha = model.input_alpha
    produced: dict[str, tuple[np.ndarray, float]] = {}
    trace: list[LayerTrace] = []
    last = len(model.layers) - 1
    for i, layer in enumerate(model.layers):
        bits, alpha, lt = _exec_layer_sc(layer, bits, alpha, produced, cfg)
        if (
            cfg.fault is not None
            and cfg.fault.ber > 0
            and i < last
            and layer.kind in COMPUTE_KINDS
        ):
            bits = flip_bits(bits, cfg.fault.ber, rng)
        produced[layer.id] = (bits, alpha)
        trace.append(lt)
    l_out = bits.shape[-1]
    q = bits.sum(axis=-1, dtype=np.int64) - l_out // 2
    return RunResult(QTensor(q, alpha, l_out), trace)


# ---------------------------------------------------------------------------
# integer oracle


def _exec_layer_oracle(
    layer: LayerSpec,
    q: np.ndarray,
    alpha: float,
    bsl: int,
    produced: dict[str, tuple[np.ndarray, float]],
    act_bsl_overrides: dict[str, int],
) -> tuple[np.ndarray, float, int]:
    l_out = act_bsl_overrides.get(layer.id, layer.act_bsl)
    out_ch = layer.out_shape[2]
    if layer.kind == "flatten":
        return q.reshape(layer.out_shape), alpha, bsl

    if layer.kind == "avgpool":
        patches = _gather_patches(layer, q, np.int64(0))  # (P, win, C)
        pooled = ceil_div_pow2(
            patches.sum(axis=1), int(math.log2(layer.kernel[0] * layer.kernel[1]))
        )
        x = alpha * pooled.astype(np.float64)
    else:
        if layer.kind == "dense":
            patches = q.reshape(1, -1)
        else:
            g = _gather_patches(layer, q, np.int64(0))
            patches = g.reshape(g.shape[0], -1)
        total = patches @ layer.weights.T  # (P, O)
        if layer.residual_from is not None:
            res_q, _ = produced[layer.residual_from]
            total = total + _align_residual_q(res_q.reshape(total.shape), layer.rescale_log2)
        x = (layer.alpha_w * alpha) * total.astype(np.float64)

    out = np.empty(x.shape, dtype=np.int64)
    for ch in range(out_ch):
        fx = _act_samples(layer, ch, x[..., ch])
        out[..., ch] = quantize_to_levels(fx, l_out, layer.alpha_act)
    return out.reshape(layer.out_shape), layer.alpha_act, l_out


def run_oracle(
    model: ModelGraph,
    input_tensor: QTensor,
    act_bsl_overrides: dict[str, int] | None = None,
    fault_hook: Callable[[int, LayerSpec, np.ndarray], np.ndarray] | None = None,
) -> QTensor:
    """Fixed-point reference: integer convolutions, ceil-rounded residual
    re-scaling and level-counting activation quantization; no bitstreams."""
    _check_input(model, input_tensor)
    overrides = act_bsl_overrides or {}
    q, alpha, bsl = input_tensor.q.astype(np.int64), model.input_alpha, model.input_bsl
    produced: dict[str, tuple[np.ndarray, float]] = {}
    last = len(model.layers) - 1
    for i, layer in enumerate(model.layers):
        q, alpha, bsl = _exec_layer_oracle(layer, q, alpha, bsl, produced, overrides)
        if fault_hook is not None and i < last and layer.kind in COMPUTE_KINDS:
            q = fault_hook(bsl, layer, q)
        produced[layer.id] = (q, alpha)
    return QTensor(q, alpha, bsl)


def _check_input(model: ModelGraph, t: QTensor) -> None:
    if tuple(t.shape) != model.input_shape:
        raise ValidationError(
            f"input shape {list(t.shape)} does not match model input {list(model.input_shape)}"
        )
    half = model.input_bsl // 2
    if np.any(np.abs(t.q) > half):
        raise ValidationError(f"input levels exceed [-{half}, {half}] for bsl {model.input_bsl}")
    if t.bsl and t.bsl != model.input_bsl:
        raise ValidationError(f"input bsl {t.bsl} does not match model input bsl {model.input_bsl}")
    if not np.isclose(t.alpha, model.input_alpha, rtol=1e-12, atol=0.0):
        raise ValidationError(
            f"input alpha {t.alpha} does not match model input alpha {model.input_alpha}"
        )


# ---------------------------------------------------------------------------
# fault-tolerance harness


@dataclass(frozen=True, eq=False)
class Dataset:
    """Desk-scale labeled inputs for accuracy-under-faults experiments."""

    inputs: np.ndarray  # (N, H, W, C) integer levels
    labels: np.ndarray  # (N,)

    def __len__(self):
        return self.inputs.shape[0]


def load_dataset(path) -> Dataset:
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise ParseError(f"cannot read dataset file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"dataset file {path} is not valid JSON: {exc}") from exc
    if obj.get("format_version") != FORMAT_VERSION:
        raise ValidationError(f"unsupported dataset format_version {obj.get('format_version')!r}")
    shape = tuple(_field(obj, "input_shape", "dataset"))
    inputs = np.asarray(_field(obj, "inputs", "dataset"), dtype=np.int64)
    labels = np.asarray(_field(obj, "labels", "dataset"), dtype=np.int64)
    if inputs.shape[0] != labels.shape[0]:
        raise ValidationError("dataset: inputs and labels disagree in length")
    return Dataset(inputs.reshape((-1,) + shape), labels)


def binary_width_for_bsl(bsl: int) -> int:
    """Radix-binary word width matched to a stream length (2 bits for the
    ternary code, which has no table entry)."""
    return bsl_to_binary_precision(bsl) or 2


def binary_fault_hook(ber: float, rng: np.random.Generator):
    """Flip bits of a two's-complement encoding of each inter-layer tensor."""

    def hook(bsl: int, layer: LayerSpec, q: np.ndarray) -> np.ndarray:
        width = binary_width_for_bsl(bsl)
        bits = flip_bits(binary_encode_array(q, width), ber, rng)
        half = bsl // 2
        return np.clip(binary_decode_array(bits), -half, half)

    return hook


@dataclass(frozen=True)
class FaultPoint:
    ber: float
    sc_accuracy: float
    binary_accuracy: float
    sc_accuracy_loss: float
    binary_accuracy_loss: float


def _predict(out: QTensor) -> int:
    return int(np.argmax(out.q.reshape(-1)))


def evaluate_fault_tolerance(
    model: ModelGraph,
    dataset: Dataset,
    bers: list[float],
    seed: int = 0,
    reps: int = 1,
) -> list[FaultPoint]:
    """Accuracy loss of the SC datapath vs a radix-binary datapath under
    matched bit-error rates on all inter-layer tensors.

    Each path's loss is measured against its own fault-free accuracy
    (the binary path quantizes to the two's-complement range even with
    no flips).  Each rep reuses the same derived generator seeds for
    every BER, so the flip sites are threshold-coupled across the sweep.
    """
    rng0 = np.random.default_rng(0)
    clean_sc = 0
    clean_bin = 0
    for i in range(len(dataset)):
        t = QTensor(dataset.inputs[i], model.input_alpha, model.input_bsl)
        clean_sc += _predict(run_oracle(model, t)) == dataset.labels[i]
        clean_bin += (
            _predict(run_oracle(model, t, fault_hook=binary_fault_hook(0.0, rng0)))
            == dataset.labels[i]
        )
    clean_sc_acc = clean_sc / len(dataset)
    clean_bin_acc = clean_bin / len(dataset)

    points = []
    for ber in bers:
        sc_hits = 0
        bin_hits = 0
        for rep in range(reps):
            rng_sc = np.random.default_rng(np.random.SeedSequence([seed, rep, 0]))
            rng_bin = np.random.default_rng(np.random.SeedSequence([seed, rep, 1]))
            cfg = RunConfig(fault=FaultConfig(ber=ber, seed=seed))
            hook = binary_fault_hook(ber, rng_bin)
            for i in range(len(dataset)):
                t = QTensor(dataset.inputs[i], model.input_alpha, model.input_bsl)
                sc_hits += _predict(run_sc(model, t, cfg, rng=rng_sc).output) == dataset.labels[i]
                bin_hits += (
                    _predict(run_oracle(model, t, fault_hook=hook)) == dataset.labels[i]
                )
        n = reps * len(dataset)
        sc_acc, bin_acc = sc_hits / n, bin_hits / n
        points.append(
            FaultPoint(ber, sc_acc, bin_acc, clean_sc_acc - sc_acc, clean_bin_acc - bin_acc)
        )
    return points
