"""Spatiotemporal denoisers behind one streaming interface."""
from __future__ import annotations

from ..events import SensorGeometry
from .base import Decision, Decisions, Denoiser, EventOutOfRange
from .baseline import BafFilter, SsmFilter, StcfFilter
from .clf import ClfFilter, RcfFilter
from .config import (
    ClfConfig,
    ConfigError,
    ConfigUnsupported,
    FilterParams,
    default_quant_unit,
    required_banks,
)
from .memory import (
    LineMemory,
    MemoryBank,
    MemoryBlock,
    StoredEvent,
    bank_index,
    block_index,
    edu_count,
    memory_footprint_bits,
    quantize_ts,
    wrapped_diff,
)
from .oracle import OracleFilter

FILTERS = ("clf", "baf", "stcf", "rcf", "ssm", "oracle")


def make_filter(name: str, config: dict | ClfConfig, geometry: SensorGeometry) -> Denoiser:
    """Instantiate a filter by name from a JSON-style config.

    Baselines read only ``D_th``/``T_th``/``N_CR`` (plus ``r`` for SSM and
    ``BW_T``/``quant_unit`` for RCF); remaining CLF keys are ignored for them.
    """
    if isinstance(config, ClfConfig):
        cfg = config
        extra = {}
    else:
        extra = {k: config[k] for k in ("r", "geometry") if k in config}
        cfg = ClfConfig.from_dict({k: v for k, v in config.items() if k not in extra})
    if name == "clf":
        return ClfFilter(cfg, geometry)
    if name == "rcf":
        return RcfFilter(cfg.params, geometry, cfg.BW_T, cfg.quant_unit)
    if name == "baf":
        return BafFilter(cfg.params, geometry)
    if name == "ssm":
        return SsmFilter(cfg.params, geometry, int(extra.get("r", 2)))
    if name == "stcf":
        return StcfFilter(cfg.params, geometry)
    if name == "oracle":
        return OracleFilter(cfg.params, geometry, cfg.same_polarity_only)
    raise ValueError(f"unknown filter {name!r}; expected one of {FILTERS}")


__all__ = [
    "FILTERS", "BafFilter", "ClfConfig", "ClfFilter", "ConfigError", "ConfigUnsupported",
    "Decision", "Decisions", "Denoiser", "EventOutOfRange", "FilterParams", "LineMemory",
    "MemoryBank", "MemoryBlock", "OracleFilter", "RcfFilter", "SsmFilter", "StcfFilter",
    "StoredEvent", "bank_index", "block_index", "default_quant_unit", "edu_count",
    "make_filter", "memory_footprint_bits", "quantize_ts", "required_banks", "wrapped_diff",
]
