"""Analytic unit-gate area/delay model of the datapath.

All numbers are abstract gate-units and comparator-stage delays, never
technology areas: the model is meant for ratios and trends across
configurations, not absolute silicon figures.  A comparator costs one
AND plus one OR (2 gate-units); a ternary multiplier costs 5 gates;
sub-sampling and wiring are free.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

from .approx import ApproxConfig, TemporalSchedule
from .errors import ConfigError
from .sortnet import build_bitonic

if TYPE_CHECKING:
    from .netsim import LayerSpec

GATES_PER_COMPARATOR = 2


@dataclass(frozen=True)
class GateCosts:
    area_per_gate: float = 1.0
    delay_per_comparator_stage: float = 1.0
    multiplier_gates: int = 5
    si_selector_gates_per_tap: float = 1.0

    def __post_init__(self):
        for name in (
            "area_per_gate",
            "delay_per_comparator_stage",
            "multiplier_gates",
            "si_selector_gates_per_tap",
        ):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")


@dataclass(frozen=True)
class CostReport:
    """Area in gate-units, delay in stage-units; adp is their product.

    For temporal designs `delay` is the total latency of one
    accumulation (delay_per_cycle * cycles); adp_iso_throughput scales
    the single-sorter area by the cycle count so that multi-cycle
    designs can be compared with single-cycle ones at equal throughput.
    """

    area: float
    delay_per_cycle: float
    cycles: int = 1

    @property
    def delay(self) -> float:
        return self.delay_per_cycle * self.cycles

    @property
    def adp(self) -> float:
        return self.area * self.delay

    @property
    def adp_iso_throughput(self) -> float:
        return self.area * self.cycles * self.delay


def cost_bsn(n: int, costs: GateCosts = GateCosts()) -> CostReport:
    """Cost of the full-width exact sorter (counts from the built network)."""
    if n < 2:
        raise ConfigError(f"sorter width must be >= 2, got {n}")
    net = build_bitonic(n)
    return CostReport(
        area=net.comparator_count * GATES_PER_COMPARATOR * costs.area_per_gate,
        delay_per_cycle=net.depth * costs.delay_per_comparator_stage,
    )


def cost_approx(cfg: ApproxConfig, costs: GateCosts = GateCosts()) -> CostReport:
    """Staged design: areas of all sub-sorters, stage depths along the
    critical path; the sub-sampling taps are pure selection and free."""
    area = 0.0
    delay = 0.0
    for st in cfg.stages:
        sub = cost_bsn(st.l, costs)
        area += st.m * sub.area
        delay += sub.delay_per_cycle
    return CostReport(area=area, delay_per_cycle=delay)


def cost_temporal(
    sched: TemporalSchedule,
    inner: ApproxConfig | None = None,
    costs: GateCosts = GateCosts(),
) -> CostReport:
    """Folded design: one inner sorter's area, its delay repeated per cycle."""
    cfg = inner if inner is not None else sched.inner
    if cfg is None:
        raise ConfigError("temporal cost needs the inner approximate config")
    if cfg.in_width != sched.bsn_width:
        raise ConfigError(
            f"inner config width {cfg.in_width} != sorter width {sched.bsn_width}"
        )
    spatial = cost_approx(cfg, costs)
    return CostReport(
        area=spatial.area,
        delay_per_cycle=spatial.delay_per_cycle,
        cycles=sched.cycles,
    )


def layer_fan_in(layer: "LayerSpec") -> int:
    """Number of products feeding one output element."""
    if layer.kind == "dense":
        return math.prod(layer.in_shape)
    if layer.kind in ("conv2d", "avgpool"):
        kh, kw = layer.kernel
        in_ch = layer.in_shape[2]
        return kh * kw * (in_ch if layer.kind == "conv2d" else 1)
    raise ConfigError(f"layer kind {layer.kind!r} has no datapath cost")


def layer_accum_width(layer: "LayerSpec", in_bsl: int) -> int:
    """Sorter input width for one output element, residual included."""
    width = layer_fan_in(layer) * in_bsl
    if layer.residual_from is not None:
        width += layer.residual_bsl * (1 << max(layer.rescale_log2, 0))
    return width


def cost_layer(
    layer: "LayerSpec",
    in_bsl: int,
    mode: str = "exact",
    approx_cfg: ApproxConfig | None = None,
    temporal: TemporalSchedule | None = None,
    costs: GateCosts = GateCosts(),
) -> CostReport:
    """Datapath cost for one output element of a layer.

    Multipliers are charged per fan-in product; the accumulator follows
    the selected mode; the selective interconnect is charged as out_bsl
    selection trees of (M - 1) gates each.  The residual path adds its
    aligned width to the sorter and is otherwise wiring (free).
    """
    fan_in = layer_fan_in(layer)
    if fan_in < 1:
        raise ConfigError(f"layer {layer.id!r} has zero fan-in")
    width = layer_accum_width(layer, in_bsl)

    if mode == "exact":
        acc = cost_bsn(width, costs)
        si_in = width
    elif mode == "approx":
        if approx_cfg is None:
            raise ConfigError(f"no approximate config for width {width}")
        if approx_cfg.in_width != width:
            raise ConfigError(
                f"approximate config width {approx_cfg.in_width} != layer width {width}"
            )
        acc = cost_approx(approx_cfg, costs)
        si_in = approx_cfg.out_width
    elif mode == "temporal":
        if temporal is None:
            raise ConfigError(f"no temporal schedule for width {width}")
        if temporal.total_width != width:
            raise ConfigError(
                f"temporal schedule width {temporal.total_width} != layer width {width}"
            )
        acc = cost_temporal(temporal, costs=costs)
        si_in = temporal.partial_bsl
    else:
        raise ConfigError(f"unknown cost mode {mode!r}")

    mult_gates = 0 if layer.kind == "avgpool" else fan_in * costs.multiplier_gates
    si_gates = layer.act_bsl * (si_in - 1) * costs.si_selector_gates_per_tap
    area = acc.area + (mult_gates + si_gates) * costs.area_per_gate
    # one multiplier level plus the selection tree on top of the sorter depth
    si_depth = math.ceil(math.log2(si_in + 2))
    extra = (0 if layer.kind == "avgpool" else 1) + si_depth
    delay_per_cycle = acc.delay_per_cycle + extra * costs.delay_per_comparator_stage
    return CostReport(area=area, delay_per_cycle=delay_per_cycle, cycles=acc.cycles)
