"""Chaos-map true random number generator model."""

from ._core import (
    CircuitConfig,
    NonIdealities,
    VirtualDevice,
    crc16_ccitt_false,
    decode_frame,
    encode_frame,
    format_settings,
    generate_bytes,
    illustrative_config,
    iterate_map,
    map_params,
    marginal_entropy_profile,
    markov_bounds,
    nist_subset,
    parse_settings,
    prototype_config,
    run_trajectory,
    state_from_code,
    tamper_check,
    validate_config,
)

__all__ = [
    "CircuitConfig",
    "NonIdealities",
    "VirtualDevice",
    "crc16_ccitt_false",
    "decode_frame",
    "encode_frame",
    "format_settings",
    "generate_bytes",
    "illustrative_config",
    "iterate_map",
    "map_params",
    "marginal_entropy_profile",
    "markov_bounds",
    "nist_subset",
    "parse_settings",
    "prototype_config",
    "run_trajectory",
    "state_from_code",
    "tamper_check",
    "validate_config",
]
