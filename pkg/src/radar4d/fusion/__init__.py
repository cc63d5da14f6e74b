"""Inference-only forward passes for teacher aggregation and student densification."""

from .blocks import (
    DensifyConfig,
    aggregate,
    alignment_block_forward,
    cbam_forward,
    cbam_gates,
    densify_forward,
    init_aggregation_params,
    init_alignment_params,
    init_cbam_params,
    init_densify_params,
)
from .params import Params, read_params, write_params, zero_all, zero_biases

__all__ = [
    "DensifyConfig", "Params", "aggregate", "alignment_block_forward", "cbam_forward",
    "cbam_gates", "densify_forward", "init_aggregation_params", "init_alignment_params",
    "init_cbam_params", "init_densify_params", "read_params", "write_params",
    "zero_all", "zero_biases",
]
