"""Command-line driver: codec utilities, simulation, sweeps, cost and
MSE reports.  Every command is deterministic given --seed and emits
plot-ready CSV with a stable column order.

Exit codes: 0 success, 1 usage, 2 input validation, 3 configuration
mismatch.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

import numpy as np

from .approx import ApproxConfig, TemporalSchedule, TernaryDist, measure_mse
from .arith import FaultConfig
from .bitstream import Bitstream, decode, encode
from .cost import CostReport, GateCosts, cost_approx, cost_bsn, cost_layer, cost_temporal
from .errors import (
    CanonicalError,
    ConfigError,
    EncodingError,
    MonotonicityError,
    ParseError,
    RangeError,
    ScaleError,
    SizeError,
    ValidationError,
)
from .netsim import (
    QTensor,
    RunConfig,
    evaluate_fault_tolerance,
    load_dataset,
    load_model,
    load_tensor,
    run_sc,
    save_tensor,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_CONFIG = 3

_VALIDATION_ERRORS = (
    ParseError,
    ValidationError,
    ScaleError,
    RangeError,
    EncodingError,
    MonotonicityError,
    OSError,
)
_CONFIG_ERRORS = (ConfigError, SizeError, CanonicalError)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip() != ""]
    except ValueError as exc:
        raise UsageError(f"bad value list {text!r}") from exc


def _int_list(text: str) -> list[int]:
    return [int(v) for v in _float_list(text)]


def _load_config_file(path) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise ParseError(f"cannot read config file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"config file {path} is not valid JSON: {exc}") from exc


def _gate_costs(cfg: dict) -> GateCosts:
    return GateCosts(**cfg.get("gate_costs", {}))


def _approx_config(stages) -> ApproxConfig:
    return ApproxConfig(tuple(tuple(int(v) for v in st) for st in stages))


def _temporal_schedule(obj: dict) -> TemporalSchedule:
    inner = _approx_config(obj["inner"]) if "inner" in obj else None
    return TemporalSchedule(
        bsn_width=int(obj["bsn_width"]),
        partial_bsl=int(obj["partial_bsl"]),
        cycles=int(obj["cycles"]),
        inner=inner,
    )


def _run_config(cfg: dict, args) -> RunConfig:
    mode = getattr(args, "mode", None) or cfg.get("mode", "exact")
    approx = {int(w): _approx_config(st) for w, st in cfg.get("approx_configs", {}).items()}
    temporal = {
        int(w): _temporal_schedule(o) for w, o in cfg.get("temporal_schedules", {}).items()
    }
    fault = None
    ber = getattr(args, "ber", None)
    seed = getattr(args, "seed", None)
    if ber is not None:
        fault = FaultConfig(ber=ber, seed=seed or 0)
    elif "fault" in cfg:
        file_seed = int(cfg["fault"].get("seed", 0))
        fault = FaultConfig(
            ber=float(cfg["fault"]["ber"]), seed=file_seed if seed is None else seed
        )
    overrides = {str(k): int(v) for k, v in cfg.get("act_bsl_overrides", {}).items()}
    return RunConfig(
        mode=mode,
        approx_configs=approx,
        temporal_schedules=temporal,
        fault=fault,
        act_bsl_overrides=overrides,
    )


def _csv_cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return int(v)
    return v


def _write_rows(out_path, header: list[str], rows: list[list]) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_csv_cell(v) for v in row])
    text = buf.getvalue()
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# commands


def _cmd_encode(args) -> int:
    print(encode(args.q, args.bsl, args.alpha).to_literal())
    return EXIT_OK


def _cmd_decode(args) -> int:
    v = decode(Bitstream.from_literal(args.literal))
    print(f"q={v.q} alpha={v.alpha!r} value={v.value!r}")
    return EXIT_OK


def _cmd_simulate(args) -> int:
    model = load_model(args.model)
    tensor = load_tensor(args.input)
    cfg = _run_config(_load_config_file(args.config), args)
    rng = np.random.default_rng(cfg.fault.seed) if cfg.fault is not None else None
    result = run_sc(model, QTensor(tensor.q, tensor.alpha, tensor.bsl), cfg, rng=rng)
    if args.out:
        save_tensor(args.out, result.output)
    else:
        sys.stdout.write(
            json.dumps([int(v) for v in result.output.q.reshape(-1)]) + "\n"
        )
    if args.trace:
        trace = [
            {
                "layer": t.layer_id,
                "accum_width": t.accum_width,
                "clip_events": t.clip_events,
                "popcounts": [int(k) for k in t.pre_si_popcounts],
            }
            for t in result.trace
        ]
        with open(args.trace, "w") as fh:
            fh.write(json.dumps(trace, sort_keys=True, separators=(",", ":")) + "\n")
    return EXIT_OK


def _model_adp(model, act_bsl: int, costs: GateCosts) -> float:
    """Whole-model ADP with every activation stream length forced to act_bsl."""
    total = 0.0
    in_bsl = act_bsl
    for layer in model.layers:
        if layer.kind == "flatten":
            continue
        forced = LayerOverride(layer, act_bsl)
        total += cost_layer(forced, in_bsl, costs=costs).adp
        in_bsl = act_bsl
    return total


class LayerOverride:
    """Read-only proxy forcing act_bsl for the precision/cost sweep."""

    def __init__(self, layer, act_bsl: int):
        self._layer = layer
        self._act_bsl = act_bsl

    def __getattr__(self, name):
        if name == "act_bsl":
            return self._act_bsl
        return getattr(self._layer, name)


def _cmd_sweep(args) -> int:
    if not args.values.strip():
        raise UsageError("empty --values list")
    if args.reps < 1:
        raise UsageError(f"--reps must be >= 1, got {args.reps}")
    cfg_file = _load_config_file(args.config)
    costs = _gate_costs(cfg_file)
    rows = []
    if args.kind == "ber":
        values = _float_list(args.values)
        if not values:
            raise UsageError("empty --values list")
        model = load_model(args.model)
        dataset = load_dataset(args.dataset)
        header = ["parameter", "value", "rep", "seed", "accuracy_loss_sc", "accuracy_loss_binary"]
        for value in values:
            for rep in range(args.reps):
                seed = args.seed + rep
                pt = evaluate_fault_tolerance(model, dataset, [value], seed=seed, reps=1)[0]
                rows.append(["ber", value, rep, seed, pt.sc_accuracy_loss, pt.binary_accuracy_loss])
    elif args.kind == "act_bsl":
        values = _int_list(args.values)
        if not values:
            raise UsageError("empty --values list")
        model = load_model(args.model)
        header = ["parameter", "value", "rep", "seed", "adp"]
        for value in values:
            for rep in range(args.reps):
                rows.append(["act_bsl", value, rep, args.seed + rep, _model_adp(model, value, costs)])
    elif args.kind in ("clip_c", "stride_s"):
        values = _int_list(args.values)
        if not values:
            raise UsageError("empty --values list")
        header = ["parameter", "value", "rep", "seed", "mse", "mse_normalized", "adp"]
        dist = TernaryDist(args.p)
        for value in values:
            c, s = (value, args.stride) if args.kind == "clip_c" else (args.clip, value)
            acfg = ApproxConfig(((1, args.width, c, s),))
            adp = cost_approx(acfg, costs).adp
            for rep in range(args.reps):
                seed = args.seed + rep
                rep_rng = np.random.default_rng(seed)
                report = measure_mse(acfg, dist, args.trials, rep_rng)
                rows.append([args.kind, value, rep, seed, report.mse, report.mse_normalized, adp])
    elif args.kind == "layer_width":
        values = _int_list(args.values)
        if not values:
            raise UsageError("empty --values list")
        header = ["parameter", "value", "rep", "seed", "area", "delay", "adp"]
        p_width, b_width = args.bsn_width, args.partial_bsl
        inner = ApproxConfig(((1, p_width, (p_width - b_width) // 2, 1),))
        for value in values:
            if value % (p_width - b_width) != 0:
                raise ConfigError(
                    f"layer width {value} is not a multiple of the per-cycle intake "
                    f"{p_width - b_width}"
                )
            sched = TemporalSchedule(p_width, b_width, value // (p_width - b_width), inner)
            rpt = cost_temporal(sched, costs=costs)
            for rep in range(args.reps):
                rows.append(["layer_width", value, rep, args.seed + rep, rpt.area, rpt.delay, rpt.adp])
    else:  # pragma: no cover - argparse restricts choices
        raise UsageError(f"unknown sweep kind {args.kind!r}")
    _write_rows(args.out, header, rows)
    return EXIT_OK


def _cost_row(design: str, width: int, rpt: CostReport, mse) -> list:
    return [
        design,
        width,
        rpt.area,
        rpt.delay_per_cycle,
        rpt.delay,
        rpt.cycles,
        rpt.adp,
        rpt.adp_iso_throughput,
        "" if mse is None else mse,
    ]


def _cmd_cost(args) -> int:
    cfg_file = _load_config_file(args.config)
    costs = _gate_costs(cfg_file)
    trials = args.mse_trials
    dist = TernaryDist(args.p)
    rows = []
    for width in _int_list(args.widths) if args.widths else []:
        mse = 0.0 if trials else None  # the exact sorter never truncates
        rows.append(_cost_row("baseline", width, cost_bsn(width, costs), mse))
    for w_str, stages in cfg_file.get("approx_configs", {}).items():
        acfg = _approx_config(stages)
        mse = None
        if trials:
            rng = np.random.default_rng(args.seed)
            mse = measure_mse(acfg, dist, trials, rng).mse_normalized
        rows.append(_cost_row("spatial", int(w_str), cost_approx(acfg, costs), mse))
    for w_str, obj in cfg_file.get("temporal_schedules", {}).items():
        sched = _temporal_schedule(obj)
        mse = None
        if trials:
            rng = np.random.default_rng(args.seed)
            mse = measure_mse(sched, dist, trials, rng).mse_normalized
        rows.append(_cost_row("temporal", int(w_str), cost_temporal(sched, costs=costs), mse))
    header = [
        "design",
        "width",
        "area",
        "delay_per_cycle",
        "delay",
        "cycles",
        "adp",
        "adp_iso_throughput",
        "mse_normalized",
    ]
    _write_rows(args.out, header, rows)
    return EXIT_OK


def _cmd_mse(args) -> int:
    cfg_file = _load_config_file(args.config)
    dist = TernaryDist(args.p)
    rows = []
    header = ["design", "width", "trials", "p", "mse", "mse_normalized", "max_abs_error"]
    for w_str, stages in cfg_file.get("approx_configs", {}).items():
        rng = np.random.default_rng(args.seed)
        r = measure_mse(_approx_config(stages), dist, args.trials, rng)
        rows.append(["spatial", int(w_str), r.trials, args.p, r.mse, r.mse_normalized, r.max_abs_error])
    for w_str, obj in cfg_file.get("temporal_schedules", {}).items():
        rng = np.random.default_rng(args.seed)
        r = measure_mse(_temporal_schedule(obj), dist, args.trials, rng)
        rows.append(["temporal", int(w_str), r.trials, args.p, r.mse, r.mse_normalized, r.max_abs_error])
    if not rows:
        raise ConfigError("config file defines no approx_configs or temporal_schedules")
    _write_rows(args.out, header, rows)
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(prog="scsim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("encode", help="encode a level as a thermometer literal")
    p.add_argument("q", type=int)
    p.add_argument("bsl", type=int)
    p.add_argument("--alpha", type=float, default=1.0)
    p.set_defaults(func=_cmd_encode)

    p = sub.add_parser("decode", help="decode a bits@alpha literal")
    p.add_argument("literal")
    p.set_defaults(func=_cmd_decode)

    p = sub.add_parser("simulate", help="run a model on the SC datapath")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--config")
    p.add_argument("--mode", choices=["exact", "approx"])
    p.add_argument("--ber", type=float)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out")
    p.add_argument("--trace")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("sweep", help="parameter sweeps emitting CSV")
    p.add_argument("kind", choices=["ber", "act_bsl", "clip_c", "stride_s", "layer_width"])
    p.add_argument("--values", required=True, help="comma-separated list")
    p.add_argument("--reps", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--model")
    p.add_argument("--dataset")
    p.add_argument("--config")
    p.add_argument("--width", type=int, default=576)
    p.add_argument("--clip", type=int, default=0)
    p.add_argument("--stride", type=int, default=1)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--p", type=float, default=0.25)
    p.add_argument("--bsn-width", dest="bsn_width", type=int, default=576)
    p.add_argument("--partial-bsl", dest="partial_bsl", type=int, default=64)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("cost", help="unit-gate cost reports")
    p.add_argument("--widths", help="comma-separated baseline sorter widths")
    p.add_argument("--config")
    p.add_argument("--mse-trials", dest="mse_trials", type=int, default=0)
    p.add_argument("--p", type=float, default=0.25)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_cost)

    p = sub.add_parser("mse", help="Monte Carlo accumulator error report")
    p.add_argument("--config", required=True)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--p", type=float, default=0.25)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_mse)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except _CONFIG_ERRORS as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _VALIDATION_ERRORS as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
