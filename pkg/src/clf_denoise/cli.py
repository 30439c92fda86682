"""Command-line driver: denoise, synth, sweep, bitwidth.

Exit codes: 0 success, 1 usage, 2 I/O, 3 invalid configuration. Every
successful run writes ``<output>.manifest.json`` next to its main output.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    InvalidParams,
    SweepError,
    SweepSpec,
    bitwidth_table,
    compute_metrics,
    format_sweep_csv,
    run_sweep,
)
from .events import EventError, EventStream, SensorGeometry, format_csv, parse_csv, sniff_geometry
from .filters import FILTERS, ClfConfig, ConfigError, default_quant_unit, make_filter
from .pipeline import activity_report, run_pipelined, write_trace_csv
from .synth import (
    EmptySignal,
    MotionScene,
    NoiseModel,
    SceneOutOfBounds,
    gen_noise,
    gen_signal,
    merge_streams,
    mix_to_ratio,
    standard_scenes,
)

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_CONFIG = 0, 1, 2, 3
MANIFEST_SCHEMA = 1


class UsageError(Exception):
    pass


class InputError(Exception):
    pass


class ConfigInvalid(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


@dataclass
class RunManifest:
    command: str
    argv: list
    config: dict = field(default_factory=dict)
    inputs: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)
    seeds: dict = field(default_factory=dict)
    results: dict = field(default_factory=dict)
    tool_version: str = __version__
    schema_version: int = MANIFEST_SCHEMA
    wall_clock_s: float = 0.0

    def write(self, main_output: str | Path, started: float) -> Path:
        """Write ``<main_output>.manifest.json``; ``started`` is a perf_counter stamp."""
        self.wall_clock_s = round(time.perf_counter() - started, 6)
        path = Path(f"{main_output}.manifest.json")
        self.outputs["manifest"] = str(path)
        _write_text(path, json.dumps(asdict(self), indent=2, sort_keys=True) + "\n")
        return path


def _geometry(text: str) -> SensorGeometry:
    try:
        return SensorGeometry.parse(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def _read_text(path: str | Path) -> str:
    try:
        return Path(path).read_text()
    except OSError as e:
        raise InputError(f"cannot read {path}: {e.strerror or e}") from None


def _write_text(path: str | Path, text: str) -> None:
    try:
        Path(path).write_text(text)
    except OSError as e:
        raise InputError(f"cannot write {path}: {e.strerror or e}") from None


def _load_json(arg: str, what: str):
    """JSON from a file path, or inline when ``arg`` starts with ``{`` or ``[``."""
    text = arg if arg.lstrip()[:1] in ("{", "[") else _read_text(arg)
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigInvalid(f"{what} is not valid JSON: {e}") from None


def _read_stream(path: str, geometry: SensorGeometry | None) -> EventStream:
    text = _read_text(path)
    try:
        geometry = geometry or sniff_geometry(text)
        if geometry is not None:
            return parse_csv(text, geometry)
        # no geometry anywhere: size the sensor to the data
        s = parse_csv(text, SensorGeometry(2048, 2048))
        geo = SensorGeometry(int(s.x.max(initial=0)) + 1, int(s.y.max(initial=0)) + 1)
        return EventStream(geo, s.t, s.x, s.y, s.p, s.label, s.meta)
    except EventError as e:
        raise InputError(f"{path}: {e}") from None


# ---------------------------------------------------------------------------
# commands

def cmd_denoise(args) -> int:
    stream = _read_stream(args.input, args.geometry)
    raw = _load_json(args.config, "--config") if args.config else {}
    if not isinstance(raw, dict):
        raise ConfigInvalid("--config must be a JSON object")
    raw = dict(raw)
    raw.pop("geometry", None)
    if args.pipelined:
        raw["pipelined"] = True
    if args.metrics and not stream.is_labeled:
        raise ConfigInvalid("labels required: --metrics needs every input event labeled Signal/Noise")
    cfg_keys = {k: v for k, v in raw.items() if k != "r"}
    cfg = ClfConfig.from_dict(cfg_keys)
    manifest = RunManifest("denoise", sys.argv[1:], config={"filter": args.filter, **cfg.to_dict(),
                                                            **({"r": raw["r"]} if "r" in raw else {})},
                           inputs={"input": args.input, "geometry": str(stream.geometry)})
    pipe = None
    if args.pipelined:
        if args.filter not in ("clf", "rcf"):
            raise ConfigInvalid(f"--pipelined models the CLF memory pipeline; filter {args.filter!r} has none")
        if args.filter == "rcf":
            cfg = ClfConfig.rcf(cfg.params, cfg.BW_T, cfg.quant_unit)
        dec, stats, log = run_pipelined(cfg, stream, trace=bool(args.trace))
        pipe = {**stats.to_dict(), "activity": activity_report(stats).to_dict()}
        if args.trace:
            try:
                write_trace_csv(log, args.trace)
            except OSError as e:
                raise InputError(f"cannot write {args.trace}: {e.strerror or e}") from None
            manifest.outputs["trace"] = args.trace
    else:
        dec = make_filter(args.filter, raw, stream.geometry).run(stream)

    _write_text(args.output, format_csv(stream, {"decision": dec.is_signal.astype(np.int64)}))
    manifest.outputs["output"] = args.output
    manifest.results["events"] = len(stream)
    manifest.results["passed"] = int(np.count_nonzero(dec.is_signal))
    report = None
    if stream.is_labeled:
        report = compute_metrics(dec, stream.label).to_dict()
        manifest.results["metrics"] = report
    if pipe is not None:
        manifest.results["pipeline"] = pipe
    if args.metrics:
        doc = dict(report)
        if pipe is not None:
            doc["pipeline"] = pipe
        _write_text(args.metrics, json.dumps(doc, indent=2, sort_keys=True) + "\n")
        manifest.outputs["metrics"] = args.metrics
    manifest.write(args.output, args.t0)
    return EXIT_OK


def _parse_scenes(doc) -> list[MotionScene]:
    if isinstance(doc, dict) and "standard" in doc:
        opts = doc["standard"] if isinstance(doc["standard"], dict) else {}
        return standard_scenes(**opts)
    if isinstance(doc, dict) and "scenes" in doc:
        doc = doc["scenes"]
    items = doc if isinstance(doc, list) else [doc]
    try:
        return [MotionScene.from_dict(d) for d in items]
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigInvalid(f"bad scene description: {e}") from None


def cmd_synth(args) -> int:
    scenes = _parse_scenes(_load_json(args.scene, "--scene"))
    signal = gen_signal(args.geometry, scenes, args.seed)
    if args.noise_rate is not None:
        span = int(signal.t[-1]) + 1 if len(signal) else max((s.start + s.duration for s in scenes), default=0)
        noise = gen_noise(args.geometry, NoiseModel(args.noise_rate, args.seed), span)
        stream = merge_streams(signal, noise)
    elif args.noise_ratio > 0:
        stream = mix_to_ratio(signal, NoiseModel(0.0, args.seed), args.noise_ratio)
    else:
        stream = signal
    _write_text(args.output, format_csv(stream))
    n_sig = stream.count(1)
    n_noise = len(stream) - n_sig
    RunManifest(
        "synth", sys.argv[1:],
        config={"geometry": str(args.geometry), "scenes": [s.to_dict() for s in scenes],
                "noise_ratio": args.noise_ratio, "noise_rate_hz": args.noise_rate},
        outputs={"output": args.output}, seeds={"seed": args.seed, "rng": "PCG64"},
        results={"signal_events": n_sig, "noise_events": n_noise,
                 "achieved_ratio": n_noise / n_sig if n_sig else None,
                 "noise_rate_hz": stream.meta.get("noise_rate_hz", args.noise_rate or 0.0)},
    ).write(args.output, args.t0)
    return EXIT_OK


def cmd_sweep(args) -> int:
    doc = _load_json(args.spec, "--spec")
    if not isinstance(doc, dict):
        raise ConfigInvalid("--spec must be a JSON object")
    base_dir = Path(args.spec).parent if not args.spec.lstrip().startswith("{") else None
    try:
        spec = SweepSpec.from_dict(doc, base_dir)
    except TypeError as e:
        raise ConfigInvalid(f"bad sweep spec: {e}") from None
    rows = run_sweep(spec, jobs=args.jobs)
    _write_text(args.output, format_sweep_csv(rows))
    manifest = RunManifest("sweep", sys.argv[1:], config=doc, outputs={"output": args.output},
                           results={"rows": len(rows)})
    if args.json:
        _write_text(args.json, json.dumps([r.to_dict() for r in rows], indent=2, sort_keys=True) + "\n")
        manifest.outputs["json"] = args.json
    manifest.write(args.output, args.t0)
    return EXIT_OK


def cmd_bitwidth(args) -> int:
    try:
        bws = [int(v) for v in args.bwt_list.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"--bwt-list must be comma-separated integers (got {args.bwt_list!r})") from None
    if not bws or any(not 1 <= b <= 62 for b in bws):
        raise ConfigInvalid(f"every BW_T must be in [1, 62] (got {bws})")
    # default tick: the quantization unit the filter itself would pick for
    # the narrowest stamp, so every listed width can represent T_th
    tick = args.tick_us if args.tick_us is not None else default_quant_unit(math.ceil(args.tth), min(bws))
    rows = bitwidth_table(args.lam, args.tth, bws, args.trials, args.seed, tick, args.horizon)
    lines = ["BW_T,T_s_us,fp_analytic,fp_montecarlo,stderr"]
    lines += [f"{r['BW_T']},{r['T_s_us']:g},{r['fp_analytic']:.9g},{r['fp_montecarlo']:.9g},{r['stderr']:.9g}"
              for r in rows]
    _write_text(args.output, "\n".join(lines) + "\n")
    RunManifest("bitwidth", sys.argv[1:],
                config={"lambda_hz": args.lam, "T_th_us": args.tth, "bwt_list": bws, "trials": args.trials,
                        "tick_us": tick, "horizon_us": args.horizon},
                outputs={"output": args.output}, seeds={"seed": args.seed, "rng": "PCG64"},
                results={"rows": len(rows)}).write(args.output, args.t0)
    return EXIT_OK


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="clf-denoise", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    d = sub.add_parser("denoise", help="classify every event of a CSV stream")
    d.add_argument("--input", required=True)
    d.add_argument("--config", help="JSON file (or inline JSON object) with filter parameters")
    d.add_argument("--filter", choices=FILTERS, default="clf")
    d.add_argument("--pipelined", action="store_true", help="run the cycle-level pipeline model")
    d.add_argument("--trace", help="write the pipeline access trace CSV here (with --pipelined)")
    d.add_argument("--geometry", type=_geometry, help="WxH; defaults to the CSV header, then the data extent")
    d.add_argument("--output", required=True)
    d.add_argument("--metrics")
    d.set_defaults(func=cmd_denoise)

    s = sub.add_parser("synth", help="generate a labeled synthetic stream")
    s.add_argument("--geometry", type=_geometry, required=True)
    s.add_argument("--scene", required=True, help="JSON scene, list of scenes, or {\"standard\": {}}")
    noise = s.add_mutually_exclusive_group()
    noise.add_argument("--noise-ratio", type=float, default=0.0, help="#noise / #signal")
    noise.add_argument("--noise-rate", type=float, help="per-pixel Poisson rate in Hz instead of a ratio")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--output", required=True)
    s.set_defaults(func=cmd_synth)

    w = sub.add_parser("sweep", help="evaluate a parameter grid")
    w.add_argument("--spec", required=True)
    w.add_argument("--output", required=True)
    w.add_argument("--json", help="also write rows with full metrics/stats as JSON")
    w.add_argument("--jobs", type=int, default=1)
    w.set_defaults(func=cmd_sweep)

    b = sub.add_parser("bitwidth", help="timestamp-wraparound false-positive study")
    b.add_argument("--lambda", dest="lam", type=float, required=True, help="window event rate, Hz")
    b.add_argument("--tth", type=float, required=True, help="T_th in microseconds")
    b.add_argument("--bwt-list", default="4,6,8,10,12")
    b.add_argument("--trials", type=int, default=100_000)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--tick-us", type=float, help="timestamp tick in microseconds "
                   "(default: smallest power of two that fits T_th at the narrowest BW_T)")
    b.add_argument("--horizon", type=float, default=1e6, help="truncation horizon in microseconds")
    b.add_argument("--output", required=True)
    b.set_defaults(func=cmd_bitwidth)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    t0 = time.perf_counter()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "jobs", 1) < 1:
            raise UsageError("--jobs must be >= 1")
        if getattr(args, "trials", 1) < 1:
            raise UsageError("--trials must be >= 1")
        args.t0 = t0
        return args.func(args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (InputError, FileNotFoundError, EventError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    except (ConfigInvalid, ConfigError, InvalidParams, SceneOutOfBounds, EmptySignal) as e:
        print(f"error: invalid configuration: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except SweepError as e:
        cause = e.__cause__
        code = EXIT_CONFIG if isinstance(cause, (ConfigError, ValueError)) else EXIT_IO
        print(f"error: {e}", file=sys.stderr)
        return code

