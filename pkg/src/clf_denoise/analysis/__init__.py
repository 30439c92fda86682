"""Metrics, the timestamp-bitwidth study, gap statistics and sweeps."""
from .bitwidth import (
    InvalidParams,
    binomial_stderr,
    bitwidth_table,
    fp_rate_analytic,
    fp_rate_closed_form,
    fp_rate_montecarlo,
    timestamp_span,
)
from .gaps import GapHistogram, time_gap_stats
from .metrics import LengthMismatch, MetricsReport, UnlabeledEvent, compute_metrics
from .sweep import SWEEP_COLUMNS, SweepError, SweepRow, SweepSpec, format_sweep_csv, load_dataset, run_sweep

__all__ = [
    "GapHistogram", "InvalidParams", "LengthMismatch", "MetricsReport", "SWEEP_COLUMNS",
    "SweepError", "SweepRow", "SweepSpec", "UnlabeledEvent", "binomial_stderr", "bitwidth_table",
    "compute_metrics", "format_sweep_csv", "fp_rate_analytic", "fp_rate_closed_form",
    "fp_rate_montecarlo", "load_dataset", "run_sweep", "time_gap_stats", "timestamp_span",
]
