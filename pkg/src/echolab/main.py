"""Command-line entry point: netlist runs, single measurements and load sweeps."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import structlog

from .circuit.circuit import Circuit
from .circuit.elements import GROUND, SineBurst
from .circuit.mna import solve_ac
from .config import settings
from .dsp.measure import bode_resonance, chirp_measure, ringdown_capture
from .dsp.pll import PllState, calibrate_gains, measure_phase, pll_track
from .dsp.spectrum import estimate_peak
from .errors import ComputationError, InvalidParams
from .experiments.channel import ChannelBench, run_backscatter, sensor_port_resonance, sensor_port_response
from .experiments.sweep import sweep_load
from .models import SWEEP_METHODS, ChannelConfig, Method, RunManifest
from .netlist import elaborate, parse, parse_value
from .output import (
    SHIFT_SIGN_NOTE,
    ArtifactWriter,
    input_digest,
    pll_figure,
    pll_log_csv,
    response_csv,
    response_figure,
    shift_figure,
    shift_table_csv,
    svg_document,
    traces_csv,
    traces_figure,
)
from .piezo_model import PresetRegistry, consistency_report
from .signals import FrequencyResponse
from .transient import TransientConfig, run_transient

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_COMPUTATION = 3

DEFAULT_LOADS = "0,250p,500p,1n,2n,2.5n,5n,10n"
MEASURE_METHODS = ("ac", "ringdown", "chirp", "bode", "pll")

# absolute bands of the 40 kHz airborne bench transducer
BAND_PROFILES: dict[str, tuple[float, float]] = {"airborne40k": (35e3, 45e3)}


def configure_logging() -> None:
    log_level = getattr(logging, settings.log_level.upper(), logging.INFO)
    logging.basicConfig(level=log_level, stream=sys.stderr)
    renderer = structlog.processors.JSONRenderer() if settings.log_json else structlog.dev.ConsoleRenderer()
    structlog.configure(
        processors=[
            structlog.processors.TimeStamper(fmt="iso"),
            structlog.stdlib.add_log_level,
            structlog.stdlib.PositionalArgumentsFormatter(),
            structlog.processors.StackInfoRenderer(),
            structlog.processors.format_exc_info,
            renderer,
        ],
        wrapper_class=structlog.make_filtering_bound_logger(log_level),
        logger_factory=structlog.stdlib.LoggerFactory(),
        cache_logger_on_first_use=True,
    )


logger = structlog.get_logger(__name__)


def _values(text: str) -> list[float]:
    return [parse_value(item.strip()) for item in text.split(",") if item.strip()]


def _band(args: argparse.Namespace, f_p: float) -> tuple[float, float]:
    if args.profile:
        return BAND_PROFILES[args.profile]
    text = args.span
    if text is None:
        return (f_p * (1.0 - settings.band_fraction), f_p * (1.0 + settings.band_fraction))
    values = _values(text)
    if len(values) != 2 or not 0 < values[0] < values[1]:
        raise InvalidParams(f"--span needs two increasing factors of f_p, got {text!r}")
    return (values[0] * f_p, values[1] * f_p)


def _manifest(args: argparse.Namespace, presets: Sequence[str], *inputs: str) -> RunManifest:
    overrides = {
        key: str(getattr(args, key))
        for key in ("cl", "span", "profile", "dt", "segments", "points", "seed", "loads", "methods")
        if getattr(args, key, None) is not None
    }
    return RunManifest(
        command=" ".join(["echolab", args.command, *getattr(args, "positional", [])]),
        presets=list(presets),
        overrides=overrides,
        input_hash=input_digest(*inputs),
    )


def _writer(args: argparse.Namespace, manifest: RunManifest) -> ArtifactWriter:
    return ArtifactWriter(args.out_dir or settings.out_dir, manifest, args.format)


def _add_response(writer: ArtifactWriter, stem: str, resp: FrequencyResponse) -> None:
    writer.add(f"{stem}.csv", lambda header: response_csv(resp, header))
    writer.add(f"{stem}.svg", lambda header: svg_document(response_figure(resp), header))


def _channel(args: argparse.Namespace) -> tuple[ChannelConfig, str]:
    preset = PresetRegistry().get(args.preset or settings.default_preset)
    cfg = ChannelConfig.from_preset(preset, c_load=parse_value(args.cl), segments=args.segments)
    return cfg, preset.name


def _probes(circuit: Circuit, requested: Optional[list[str]]) -> tuple[str, ...]:
    if requested:
        return tuple(requested)
    return tuple(node for node in circuit.nodes if node != GROUND and "." not in node)


def cmd_tran(args: argparse.Namespace) -> int:
    path = Path(args.netlist)
    text = path.read_text(encoding="utf-8")
    doc = parse(text)
    circuit = elaborate(doc, PresetRegistry().transducers())
    writer = _writer(args, _manifest(args, sorted({str(d.param("preset")) for d in doc.macros}), text))

    tran = doc.directive("TRAN")
    if tran is not None:
        step, stop = float(tran.args[0]), float(tran.args[1])
        dt = parse_value(args.dt) if args.dt else step
        traces = run_transient(circuit, TransientConfig(dt=dt, duration=stop, probes=_probes(circuit, args.probe)))
        writer.add(f"{path.stem}.tran.csv", lambda header: traces_csv(traces, header))
        writer.add(f"{path.stem}.tran.svg", lambda header: svg_document(traces_figure(traces), header))

    ac = doc.directive("AC")
    if ac is not None:
        start, stop, points, scale = ac.args
        grid = (np.geomspace if scale == "log" else np.linspace)(float(start), float(stop), int(points))
        solutions = [solve_ac(circuit, 2.0 * np.pi * f) for f in grid]
        for probe in _probes(circuit, args.probe):
            resp = FrequencyResponse(grid, [s.voltage(probe) for s in solutions], f"V({probe})")
            _add_response(writer, f"{path.stem}.ac.{probe}", resp)

    if tran is None and ac is None:
        raise InvalidParams(f"{path}: netlist has neither .TRAN nor .AC")
    writer.flush()
    return EXIT_OK


def _measure_pll(bench: ChannelBench, band: tuple[float, float]) -> PllState:
    """Calibrate on the unloaded channel at the nominal f_p, then lock on the loaded one."""

    reference = bench.nominal_frequency
    unloaded = bench.with_load(0.0)
    setpoint = measure_phase(unloaded, reference)
    gains = calibrate_gains(unloaded, reference)
    return pll_track(bench, setpoint, gains, start=reference, band=band)


def cmd_measure(args: argparse.Namespace) -> int:
    cfg, preset = _channel(args)
    bench = ChannelBench(cfg)
    band = _band(args, bench.nominal_frequency)
    dt = parse_value(args.dt) if args.dt else None
    writer = _writer(args, _manifest(args, [preset], cfg.model_dump_json(), args.method))
    method = Method(args.method)

    if method is Method.RINGDOWN:
        capture = ringdown_capture(bench, bench.nominal_frequency, dt=dt)
        f_p = estimate_peak(capture.spectrum, band).f_peak
        writer.add("ringdown.echo.csv", lambda header: traces_csv({"echo": capture.echo}, header))
        writer.add("ringdown.echo.svg", lambda header: svg_document(traces_figure({"echo": capture.echo}), header))
        _add_response(writer, "ringdown.spectrum", capture.spectrum.as_response("ringdown spectrum"))
    elif method is Method.CHIRP:
        result = chirp_measure(bench, band[0], band[1], dt=dt)
        f_p = result.estimate.f_p
        _add_response(writer, "chirp.spectrum", result.spectrum.as_response("chirp spectrum"))
    elif method is Method.BODE:
        resp, estimate = bode_resonance(bench, band, args.points or 41, dt=dt)
        f_p = estimate.f_p
        _add_response(writer, "bode", resp)
    elif method is Method.PLL:
        state = _measure_pll(bench, band)
        f_p = state.frequency
        writer.add("pll.csv", lambda header: pll_log_csv(state, header))
        writer.add("pll.svg", lambda header: svg_document(pll_figure(state), header))
    else:
        points = args.points or 201
        f_p = sensor_port_resonance(cfg, band, points).f_p
        resp = sensor_port_response(cfg, np.linspace(band[0], band[1], points))
        _add_response(writer, "ac.impedance", resp)

    writer.flush()
    print(f"{method.value} f_p = {f_p:.6f} Hz (C_L = {cfg.load.c_load:.6g} F)")
    return EXIT_OK


def cmd_echo(args: argparse.Namespace) -> int:
    cfg, preset = _channel(args)
    f = cfg.interrogator.parallel_resonance
    dt = parse_value(args.dt) if args.dt else None
    result = run_backscatter(cfg, SineBurst(1.0, f, settings.burst_cycles), dt=dt)
    writer = _writer(args, _manifest(args, [preset], cfg.model_dump_json()))
    traces = {"drive": result.drive, "tx": result.tx, "rx": result.usn}
    writer.add("echo.csv", lambda header: traces_csv(traces, header))
    writer.add("echo.svg", lambda header: svg_document(traces_figure(traces, "backscatter"), header))
    writer.flush()
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    cfg, preset = _channel(args)
    loads = _values(args.loads)
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    band = _band(args, cfg.interrogator.parallel_resonance)
    table = sweep_load(cfg, loads, methods, band=band, bode_points=args.points or 41)
    writer = _writer(args, _manifest(args, [preset], cfg.model_dump_json(), args.loads, args.methods))
    writer.add("shift_table.csv", lambda header: shift_table_csv(table, header), [SHIFT_SIGN_NOTE])
    writer.add("shift_table.svg", lambda header: svg_document(shift_figure(table), header), [SHIFT_SIGN_NOTE])
    writer.flush()
    print(f"{table.succeeded_cells} cells succeeded, {table.failed_cells} failed")
    return EXIT_OK if table.succeeded_cells else EXIT_COMPUTATION


def cmd_presets(args: argparse.Namespace) -> int:
    registry = PresetRegistry()
    for name in registry.names():
        params = registry.transducer(name)
        print(f"{name}: f_p = {params.parallel_resonance:.6g} Hz, K^2 = {params.effective_coupling**2:.4g}")
        for row in consistency_report(params):
            flag = "  MISMATCH" if row.flagged else ""
            print(f"  {row.field:6s} used {row.formula_value:.4g}  stated {row.stated_value:.4g}  gap {row.relative_gap:.1%}{flag}")
    return EXIT_OK


def _common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--out-dir", type=Path, default=None)
    sub.add_argument("--format", choices=("csv", "svg", "both"), default="both")
    sub.add_argument("--dt", default=None, help="transient step, suffixes allowed")
    sub.add_argument("--seed", type=int, default=None, help="reserved")


def _channel_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--preset", default=None)
    sub.add_argument("--cl", default="0", help="load capacitance, e.g. 2n")
    band = sub.add_mutually_exclusive_group()
    band.add_argument("--span", default=None, help="band as factors of f_p, e.g. 0.9,1.1")
    band.add_argument("--profile", choices=sorted(BAND_PROFILES), default=None, help="named absolute band")
    sub.add_argument("--segments", type=int, default=None)
    sub.add_argument("--points", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="echolab", description=__doc__)
    commands = parser.add_subparsers(dest="command", required=True)

    tran = commands.add_parser("tran", help="run the analyses of a netlist file")
    tran.add_argument("netlist")
    tran.add_argument("--probe", action="append", default=None)
    _common(tran)
    tran.set_defaults(handler=cmd_tran)

    measure = commands.add_parser("measure", help="one resonance measurement on a preset channel")
    measure.add_argument("method", choices=MEASURE_METHODS)
    _channel_flags(measure)
    _common(measure)
    measure.set_defaults(handler=cmd_measure)

    echo = commands.add_parser("echo", help="burst the interrogator and record both ports")
    _channel_flags(echo)
    _common(echo)
    echo.set_defaults(handler=cmd_echo)

    sweep = commands.add_parser("sweep", help="resonance shift versus load capacitance")
    sweep.add_argument("--loads", default=DEFAULT_LOADS)
    sweep.add_argument("--methods", default=",".join(m.value for m in SWEEP_METHODS))
    _channel_flags(sweep)
    _common(sweep)
    sweep.set_defaults(handler=cmd_sweep)

    presets = commands.add_parser("presets", help="list presets and their consistency report")
    presets.set_defaults(handler=cmd_presets)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args.positional = [v for v in (getattr(args, "netlist", None), getattr(args, "method", None)) if v]
    configure_logging()
    try:
        return args.handler(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ComputationError as exc:
        logger.error("computation failed", error=str(exc))
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_COMPUTATION


if __name__ == "__main__":
    sys.exit(main())
