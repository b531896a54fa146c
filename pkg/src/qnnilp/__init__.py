"""Exact ILP-based robustness verification for quantized ReLU networks."""

from .quant import (
    QuantConfig,
    QuantizedNetwork,
    RealNetwork,
    classify,
    load_qnn,
    qnn_forward,
    quantize_network,
    quantize_value,
)
from .region import InputRegionSpec, Norm, PropertyKind, PropertySpec
from .verify import (
    MrrResult,
    Verdict,
    VerdictStatus,
    brute_force_verify,
    compute_mrr,
    validate_counterexample,
    verify_robustness,
)

__version__ = "0.1.0"

__all__ = [
    "InputRegionSpec",
    "MrrResult",
    "Norm",
    "PropertyKind",
    "PropertySpec",
    "QuantConfig",
    "QuantizedNetwork",
    "RealNetwork",
    "Verdict",
    "VerdictStatus",
    "brute_force_verify",
    "classify",
    "compute_mrr",
    "load_qnn",
    "qnn_forward",
    "quantize_network",
    "quantize_value",
    "validate_counterexample",
    "verify_robustness",
]
