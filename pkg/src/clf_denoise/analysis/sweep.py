"""Parameter sweeps: every axis combination evaluated on every dataset."""
from __future__ import annotations

import csv
import io
import itertools
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

from ..events import EventStream, SensorGeometry, read_csv
from ..filters import FILTERS, ClfConfig, ConfigError, make_filter
from ..pipeline import PipelineStats, run_pipelined, run_unpipelined
from .metrics import MetricsReport, compute_metrics

SWEEP_COLUMNS = ["dataset", "N_RM", "N_CM", "s_RM", "s_CM", "D_th", "T_th_us", "N_CR", "BW_T",
                 "precision", "recall", "accuracy", "reads", "cancelled", "writes", "cycles"]


class SweepError(RuntimeError):
    """A sweep row failed; the message names the dataset and configuration."""


def _expand_axis(name: str, values) -> list[dict]:
    out = []
    for v in values:
        if name == "s":
            s_rm, s_cm = (v, v) if isinstance(v, int) else v
            out.append({"s_RM": int(s_rm), "s_CM": int(s_cm)})
        elif name == "N":
            out.append({"N_RM": int(v), "N_CM": int(v)})
        else:
            out.append({name: v})
    return out


@dataclass
class SweepSpec:
    """``axes`` maps a config key to its values; ``s`` and ``N`` set both modules.

    Datasets are ``{"name", "path"}`` (CSV file), ``{"name", "standard": {...}}``
    (keyword arguments of :func:`synth.standard_mix`), or ``(name, EventStream)``.
    """

    base: dict = field(default_factory=dict)
    axes: dict = field(default_factory=dict)
    datasets: list = field(default_factory=list)
    filter: str = "clf"
    pipelined: bool = False

    def __post_init__(self):
        if self.filter not in FILTERS:
            raise ConfigError(f"unknown filter {self.filter!r}")
        if not self.datasets:
            raise ConfigError("sweep needs at least one dataset")
        self.datasets = [_normalize_dataset(d) for d in self.datasets]
        for cfg in self.configs():
            pass  # construction validates every combination

    @classmethod
    def from_dict(cls, d: dict, base_dir: str | Path | None = None) -> "SweepSpec":
        d = dict(d)
        unknown = set(d) - {"base", "axes", "datasets", "filter", "pipelined"}
        if unknown:
            raise ConfigError(f"unknown sweep keys: {sorted(unknown)}")
        if base_dir is not None:
            d["datasets"] = [({**ds, "path": str(Path(base_dir, ds["path"]))}
                              if isinstance(ds, dict) and "path" in ds else ds)
                             for ds in d.get("datasets", [])]
        return cls(**d)

    def configs(self) -> list[ClfConfig]:
        names = list(self.axes)
        combos = itertools.product(*(_expand_axis(n, self.axes[n]) for n in names))
        out = []
        for combo in combos:
            merged = dict(self.base)
            for part in combo:
                merged.update(part)
            try:
                out.append(ClfConfig.from_dict(merged))
            except (ConfigError, TypeError, ValueError) as e:
                raise ConfigError(f"sweep point {merged}: {e}") from None
        return out


def _normalize_dataset(d):
    if isinstance(d, tuple):
        name, stream = d
        if not isinstance(stream, EventStream):
            raise ConfigError(f"dataset {name!r} is not an EventStream")
        return (str(name), stream)
    if not isinstance(d, dict) or "name" not in d or not ({"path", "standard"} & set(d)):
        raise ConfigError(f"dataset entry needs 'name' and one of 'path'/'standard': {d!r}")
    return dict(d)


@lru_cache(maxsize=8)
def _load(ref_json: str) -> EventStream:
    ref = json.loads(ref_json)
    if "path" in ref:
        geo = SensorGeometry.parse(ref["geometry"]) if "geometry" in ref else None
        return read_csv(ref["path"], geo)
    from ..synth import standard_mix
    return standard_mix(**ref["standard"])


def load_dataset(ref) -> tuple[str, EventStream]:
    if isinstance(ref, tuple):
        return ref
    return ref["name"], _load(json.dumps(ref, sort_keys=True))


@dataclass(frozen=True)
class SweepRow:
    dataset: str
    config: ClfConfig
    metrics: MetricsReport
    stats: PipelineStats | None

    def to_csv_row(self) -> list:
        c, m, s = self.config, self.metrics, self.stats
        pipe = ([s.reads_issued, s.reads_cancelled, s.writes, s.total_cycles] if s is not None
                else ["", "", "", ""])
        return [self.dataset, c.N_RM, c.N_CM, c.s_RM, c.s_CM, c.D_th, c.params.T_th, c.N_CR, c.BW_T,
                f"{m.precision:.6f}", f"{m.recall:.6f}", f"{m.accuracy:.6f}", *pipe]

    def to_dict(self) -> dict:
        return {"dataset": self.dataset, "config": self.config.to_dict(),
                "metrics": self.metrics.to_dict(),
                "stats": self.stats.to_dict() if self.stats is not None else None}


def _run_row(job) -> SweepRow:
    ref, cfg, filt, pipelined = job
    name, stream = load_dataset(ref)
    try:
        stats = None
        if filt in ("clf", "rcf"):
            if filt == "rcf":
                cfg = ClfConfig.rcf(cfg.params, cfg.BW_T, cfg.quant_unit)
            if pipelined and cfg.N_CR == 1 and cfg.D_th == 1:
                dec, stats, _ = run_pipelined(cfg, stream, trace=False)
            else:
                dec, stats = run_unpipelined(cfg, stream)
        else:
            dec = make_filter(filt, cfg, stream.geometry).run(stream)
        return SweepRow(name, cfg, compute_metrics(dec, stream.label), stats)
    except Exception as e:  # noqa: BLE001 - re-raised with the row identity
        raise SweepError(f"dataset={name} filter={filt} config={cfg.label()}: "
                         f"{type(e).__name__}: {e}") from e


def run_sweep(spec: SweepSpec, jobs: int = 1) -> list[SweepRow]:
    """Rows ordered dataset-major, then axis combinations in declaration order.

    Non-pipelinable points of a pipelined sweep (N_CR > 1 or D_th > 1) use
    the unpipelined schedule.
    """
    work = [(ref, cfg, spec.filter, spec.pipelined) for ref in spec.datasets for cfg in spec.configs()]
    if jobs <= 1 or len(work) <= 1:
        return [_run_row(w) for w in work]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_row, work))


def format_sweep_csv(rows: list[SweepRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    for r in rows:
        w.writerow(r.to_csv_row())
    return buf.getvalue()
