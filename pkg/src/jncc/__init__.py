"""Joint non-binary network-channel coding for the two-user time-division
decode-and-forward multiple access relay channel."""

from .gf import FieldContext, make_field
from .convcode import CC2, CC6, ConvCodeSpec, Trellis, bcjr, encode
from .interleave import SpreadInterleaver, generate
from .channel import LinkRealization, SCENARIOS, draw_fading, transmit, bit_llr
from .relay import NcCoefficients, RelayMode, relay_process
from .decoder import DecoderConfig, joint_decode, nc_node_update, symbol_likelihood
from .exit_chart import (TransferCurve, endpoint_cdf, j_function, j_inverse, measure_cc_transfer,
                         measure_nc_transfer, select_coefficients)
from .harness import SimConfig, SimResult, run_coefficient_scan, run_frame, run_per_sweep

__all__ = [
    "FieldContext", "make_field",
    "CC2", "CC6", "ConvCodeSpec", "Trellis", "bcjr", "encode",
    "SpreadInterleaver", "generate",
    "LinkRealization", "SCENARIOS", "draw_fading", "transmit", "bit_llr",
    "NcCoefficients", "RelayMode", "relay_process",
    "DecoderConfig", "joint_decode", "nc_node_update", "symbol_likelihood",
    "TransferCurve", "endpoint_cdf", "j_function", "j_inverse", "measure_cc_transfer",
    "measure_nc_transfer", "select_coefficients",
    "SimConfig", "SimResult", "run_coefficient_scan", "run_frame", "run_per_sweep",
]
