"""scsim: bit-exact simulation and cost modeling of thermometer-coded
stochastic-computing neural accelerators built on sorting networks."""

from .activation import (
    BNParams,
    TapVector,
    apply_taps,
    compute_taps,
    fused_bn_relu,
    quantize_to_levels,
)
from .approx import (
    ApproxConfig,
    MseReport,
    StageConfig,
    TemporalSchedule,
    TernaryDist,
    eval_approx_bsn,
    eval_temporal,
    measure_mse,
    subsample,
)
from .arith import (
    FaultConfig,
    TernaryCode,
    comparator,
    inject_faults,
    sign_gated_multiply,
    ternary_multiply,
)
from .bitstream import (
    Bitstream,
    QuantizedValue,
    bsl_to_binary_precision,
    canonicalize,
    decode,
    encode,
)
from .cost import CostReport, GateCosts, cost_approx, cost_bsn, cost_layer, cost_temporal
from .errors import (
    CanonicalError,
    ConfigError,
    EncodingError,
    MonotonicityError,
    ParseError,
    RangeError,
    ScaleError,
    ScsimError,
    SizeError,
    ValidationError,
)
from .netsim import (
    Dataset,
    LayerSpec,
    ModelGraph,
    QTensor,
    RunConfig,
    RunResult,
    evaluate_fault_tolerance,
    load_dataset,
    load_model,
    load_tensor,
    run_oracle,
    run_sc,
    save_tensor,
)
from .residual import align_and_accumulate, rescale_div, rescale_mul
from .sortnet import SortNetwork, accumulate, build_bitonic, evaluate, netlist_dump

__version__ = "0.1.0"

__all__ = [
    "ApproxConfig",
    "BNParams",
    "Bitstream",
    "CanonicalError",
    "ConfigError",
    "CostReport",
    "Dataset",
    "EncodingError",
    "FaultConfig",
    "GateCosts",
    "LayerSpec",
    "ModelGraph",
    "MonotonicityError",
    "MseReport",
    "ParseError",
    "QTensor",
    "QuantizedValue",
    "RangeError",
    "RunConfig",
    "RunResult",
    "ScaleError",
    "ScsimError",
    "SizeError",
    "SortNetwork",
    "StageConfig",
    "TapVector",
    "TemporalSchedule",
    "TernaryCode",
    "TernaryDist",
    "ValidationError",
    "accumulate",
    "align_and_accumulate",
    "apply_taps",
    "bsl_to_binary_precision",
    "build_bitonic",
    "canonicalize",
    "comparator",
    "compute_taps",
    "cost_approx",
    "cost_bsn",
    "cost_layer",
    "cost_temporal",
    "decode",
    "encode",
    "eval_approx_bsn",
    "eval_temporal",
    "evaluate",
    "evaluate_fault_tolerance",
    "fused_bn_relu",
    "inject_faults",
    "load_dataset",
    "load_model",
    "load_tensor",
    "measure_mse",
    "netlist_dump",
    "quantize_to_levels",
    "rescale_div",
    "rescale_mul",
    "run_oracle",
    "run_sc",
    "save_tensor",
    "sign_gated_multiply",
    "subsample",
    "ternary_multiply",
]
