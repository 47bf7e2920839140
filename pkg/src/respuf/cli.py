"""Command-line front end.

Subcommands: ``simulate``, ``enroll``, ``regenerate``, ``metrics``,
``sweep`` and ``demo-channel``. Run ``respuf <command> --help`` for options.

Exit status:

====  ======================================================
0     success
2     usage error (bad arguments or configuration values)
3     I/O error (unreadable input, unwritable output)
4     parse error (reading CSV, helper file, config file)
5     regeneration failure (PUF ID could not be rebuilt)
6     channel error (framing, transport, wrong key)
====  ======================================================

Outputs go to ``--out-dir``, defaulting to ``$RESPUF_OUTPUT_DIR`` and then
to ``./respuf_out``.
"""

from __future__ import annotations

import argparse
import io
import json
import os
import socket
import sys
from collections import defaultdict
from dataclasses import replace
from pathlib import Path
from typing import Sequence

from . import channel
from .crypto import SecretKey, derive_key
from .device_model import Environment
from .errors import ChannelError, CsvParseError, HelperFormatError, RegenerationError
from .experiments import ExperimentConfig, metric_reports, population, reading_at, run_sweep
from .fuzzy_extractor import HelperBundle, enroll, regenerate
from .measurement import ReadingSet, parse_reading_csv, write_reading_csv
from .metrics import write_reports_json
from .response import PufResponse, ResponseConfig, response_for_config
from .seeding import rng_for

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_PARSE = 4
EXIT_REGEN = 5
EXIT_CHANNEL = 6

OUTPUT_ENV = "RESPUF_OUTPUT_DIR"
DEFAULT_OUTPUT = "respuf_out"


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _out_dir(args) -> Path:
    path = Path(args.out_dir or os.environ.get(OUTPUT_ENV) or DEFAULT_OUTPUT)
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot create output directory {path}: {exc.strerror}") from None
    return path


def _write_text(path: Path, text: str) -> None:
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot write {path}: {exc.strerror}") from None


def _load_config(args) -> ExperimentConfig:
    if args.config:
        try:
            cfg = ExperimentConfig.from_file(args.config)
        except OSError as exc:
            raise CliError(EXIT_IO, f"cannot read config {args.config}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise CliError(EXIT_PARSE, f"config {args.config}: {exc}") from None
        except (TypeError, ValueError) as exc:
            raise CliError(EXIT_USAGE, f"config {args.config}: {exc}") from None
    else:
        cfg = ExperimentConfig()
    overrides = {}
    if getattr(args, "count", None) is not None:
        if args.count < 1:
            raise CliError(EXIT_USAGE, "--count must be at least 1")
        overrides["device_count"] = args.count
    if getattr(args, "probe_repeats", None) is not None:
        overrides["probe_repeats"] = args.probe_repeats
    try:
        if overrides:
            cfg = replace(cfg, **overrides)
        if args.seed is not None:
            cfg = cfg.with_seed(args.seed)
    except ValueError as exc:
        raise CliError(EXIT_USAGE, str(exc)) from None
    return cfg


def _read_readings(paths: Sequence[str]) -> list[ReadingSet]:
    files: list[Path] = []
    for p in map(Path, paths):
        if p.is_dir():
            files.extend(sorted(p.glob("*.csv")))
        else:
            files.append(p)
    if not files:
        raise CliError(EXIT_IO, f"no reading CSV files found in {', '.join(paths)}")
    readings = []
    for f in files:
        try:
            with open(f, "r", encoding="utf-8", newline="") as fh:
                readings.extend(parse_reading_csv(fh))
        except OSError as exc:
            raise CliError(EXIT_IO, f"cannot read {f}: {exc.strerror}") from None
        except CsvParseError as exc:
            raise CliError(EXIT_PARSE, f"{f}: {exc}") from None
    return readings


def _pick_reading(readings: list[ReadingSet], device: int | None, index: int) -> ReadingSet:
    if device is not None:
        readings = [r for r in readings if r.device_id == device]
        if not readings:
            raise CliError(EXIT_USAGE, f"no readings for device {device}")
    if not -len(readings) <= index < len(readings):
        raise CliError(EXIT_USAGE, f"reading index {index} out of range (have {len(readings)})")
    return readings[index]


def _load_helper(path: str) -> HelperBundle:
    try:
        return HelperBundle.load(path)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot read helper file {path}: {exc.strerror}") from None
    except HelperFormatError as exc:
        raise CliError(EXIT_PARSE, f"helper file {path}: {exc}") from None


def _inject(response: PufResponse, count: int, seed: int) -> PufResponse:
    if count == 0:
        return response
    if not 0 < count <= response.length:
        raise CliError(EXIT_USAGE, f"--inject-errors must be in 0..{response.length}")
    positions = rng_for(seed, "inject", count).choice(response.length, size=count, replace=False)
    return response.flipped(sorted(int(p) for p in positions))


def _regenerate_key(readings_paths, helper_path, device, index, inject=0, inject_seed=0):
    bundle = _load_helper(helper_path)
    fresh = response_for_config(_pick_reading(_read_readings(readings_paths), device, index),
                                ResponseConfig.COMBINED)
    fresh = _inject(fresh, inject, inject_seed)
    try:
        result = regenerate(fresh, bundle)
    except RegenerationError as exc:
        raise CliError(EXIT_REGEN, str(exc)) from None
    return result, derive_key(result.puf_id, 128)


# -- commands ---------------------------------------------------------------

def cmd_simulate(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(args)
    env = Environment(
        cfg.reference_env.temperature if args.temperature is None else args.temperature,
        cfg.reference_env.vdd if args.vdd is None else args.vdd)
    samples = cfg.reference_samples if args.samples is None else args.samples
    if samples < 1 or args.repeats < 1:
        raise CliError(EXIT_USAGE, "--samples and --repeats must be at least 1")
    for device in population(cfg):
        buf = io.StringIO()
        write_reading_csv([reading_at(cfg, device, env, samples, r) for r in range(args.repeats)], buf)
        _write_text(out / f"{args.prefix}{device.device_id:03d}.csv", buf.getvalue())
    print(f"wrote {cfg.device_count} reading files to {out}")
    return EXIT_OK


def cmd_enroll(args) -> int:
    reading = _pick_reading(_read_readings(args.readings), args.device, args.index)
    puf_id, bundle = enroll(response_for_config(reading, ResponseConfig.COMBINED))
    _write_text(Path(args.helper), bundle.to_text())
    key = derive_key(puf_id, 128)
    if args.export_key:
        # Out-of-band provisioning of the receiver; the file holds the raw key.
        _write_text(Path(args.export_key), bytes(key).hex() + "\n")
    print(f"device={reading.device_id}")
    print(f"puf_id={puf_id.to_hex()}")
    print(f"key_fingerprint={key.fingerprint()}")
    print(f"helper={args.helper}")
    key.wipe()
    return EXIT_OK


def cmd_regenerate(args) -> int:
    if args.inject_errors < 0:
        raise CliError(EXIT_USAGE, "--inject-errors must be non-negative")
    result, key = _regenerate_key(args.readings, args.helper, args.device, args.index,
                                  args.inject_errors, args.inject_seed)
    print(f"puf_id={result.puf_id.to_hex()}")
    print(f"key_fingerprint={key.fingerprint()}")
    print(f"corrected_bits={result.corrected_bits}")
    key.wipe()
    return EXIT_OK


def cmd_metrics(args) -> int:
    readings = _read_readings(args.readings)
    by_device: dict[int, list[ReadingSet]] = defaultdict(list)
    for rs in readings:
        by_device[rs.device_id].append(rs)
    if len(by_device) < 2:
        print("warning: uniqueness needs at least two devices; writing a partial report", file=sys.stderr)
    reports = metric_reports(dict(sorted(by_device.items())))
    out = _out_dir(args)
    for report in reports:
        buf = io.StringIO()
        report.write_device_csv(buf)
        _write_text(out / f"metrics_{report.config}.csv", buf.getvalue())
    buf = io.StringIO()
    write_reports_json(reports, buf)
    _write_text(out / "metrics.json", buf.getvalue())
    for report in reports:
        s = report.summary()
        uq = "n/a" if s["uniqueness_pct"] is None else f"{s['uniqueness_pct']:.2f}"
        print(f"{s['config']:<16} L={s['response_length']:<4} reliability={s['reliability_pct']:.2f} "
              f"uniqueness={uq} uniformity={s['uniformity_pct']:.2f} bit_aliasing={s['bit_aliasing_pct']:.2f}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _load_config(args)
    result = run_sweep(cfg, args.kind)
    buf = io.StringIO()
    result.write_csv(buf)
    path = Path(args.output) if args.output else _out_dir(args) / f"sweep_{args.kind}.csv"
    _write_text(path, buf.getvalue())
    sys.stdout.write(buf.getvalue())
    return EXIT_OK


def _read_key_file(path: str) -> SecretKey:
    try:
        text = Path(path).read_text(encoding="ascii").strip()
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot read key file {path}: {exc.strerror}") from None
    try:
        return SecretKey(bytes.fromhex(text))
    except ValueError:
        raise CliError(EXIT_PARSE, f"key file {path} is not hex") from None


def _load_waveform(path: str | None) -> list[int]:
    try:
        return channel.load_waveform(path)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot read waveform {path}: {exc.strerror}") from None
    except ValueError as exc:
        raise CliError(EXIT_PARSE, f"waveform {path}: {exc}") from None


def _finish_receive(args, payload: bytes) -> int:
    samples = channel.waveform_from_bytes(payload)
    out = Path(args.output) if args.output else _out_dir(args) / "received_waveform.csv"
    buf = io.StringIO()
    channel.write_waveform_csv(samples, buf)
    _write_text(out, buf.getvalue())
    print(f"received {len(samples)} samples -> {out}")
    if args.role == "loopback" or args.expect:
        original = _load_waveform(args.expect or args.waveform)
        if samples != original:
            raise CliError(EXIT_CHANNEL, "decrypted waveform differs from the original")
        print("decrypted waveform identical")
    return EXIT_OK


def cmd_demo_channel(args) -> int:
    if args.role == "loopback":
        if args.helper and args.readings:
            _, device_key = _regenerate_key(args.readings, args.helper, args.device, args.index)
        elif args.helper or args.readings:
            raise CliError(EXIT_USAGE, "--helper and --readings must be given together")
        else:
            # Enroll device 0 of the simulated population in-process.
            cfg = _load_config(args)
            dev = population(cfg)[args.device or 0]
            puf_id, bundle = enroll(response_for_config(reading_at(cfg, dev, cfg.reference_env,
                                                                   cfg.reference_samples, 0),
                                                        ResponseConfig.COMBINED))

            def measure():
                return response_for_config(reading_at(cfg, dev, cfg.reference_env, cfg.probe_samples, 1),
                                           ResponseConfig.COMBINED)

            endpoint = channel.DeviceEndpoint(measure, bundle)
            try:
                device_key = endpoint.regenerate_key()
            except RegenerationError as exc:
                raise CliError(EXIT_REGEN, f"provisioning refused: {exc}") from None
        receiver_key = _read_key_file(args.key_file) if args.key_file else SecretKey(bytes(device_key))
        print(f"device key fingerprint   {device_key.fingerprint()}")
        print(f"receiver key fingerprint {receiver_key.fingerprint()}")
        waveform = _load_waveform(args.waveform)
        pipe = channel.LoopbackTransport()
        sent = channel.send_encrypted(channel.waveform_to_bytes(waveform), device_key, pipe)
        pipe.close()
        print(f"sent {len(waveform)} samples in a {sent}-byte frame")
        try:
            payload = channel.receive_decrypted(pipe, receiver_key)
        except ChannelError as exc:
            raise CliError(EXIT_CHANNEL, str(exc)) from None
        finally:
            device_key.wipe()
        return _finish_receive(args, payload)

    if args.role == "sender":
        if not (args.helper and args.readings):
            raise CliError(EXIT_USAGE, "sender needs --helper and --readings")
        try:
            _, key = _regenerate_key(args.readings, args.helper, args.device, args.index)
        except CliError as exc:
            if exc.code == EXIT_REGEN:
                raise CliError(EXIT_REGEN, f"provisioning refused: {exc}") from None
            raise
        waveform = _load_waveform(args.waveform)
        try:
            transport = channel.SocketTransport.connect(args.host, args.port, args.timeout)
            try:
                sent = channel.send_encrypted(channel.waveform_to_bytes(waveform), key, transport)
            finally:
                transport.close()
        except OSError as exc:
            raise CliError(EXIT_CHANNEL, f"cannot send to {args.host}:{args.port}: {exc}") from None
        finally:
            key.wipe()
        print(f"sent {len(waveform)} samples in a {sent}-byte frame to {args.host}:{args.port}")
        return EXIT_OK

    # receiver
    if not args.key_file:
        raise CliError(EXIT_USAGE, "receiver needs --key-file (written by enroll --export-key)")
    key = _read_key_file(args.key_file)
    try:
        with socket.create_server((args.host, args.port)) as server:
            server.settimeout(args.timeout)
            print(f"listening on {args.host}:{server.getsockname()[1]}", flush=True)
            conn, _ = server.accept()
            conn.settimeout(args.timeout)
            transport = channel.SocketTransport(conn)
            try:
                payload = channel.receive_decrypted(transport, key)
            finally:
                transport.close()
    except ChannelError as exc:
        raise CliError(EXIT_CHANNEL, str(exc)) from None
    except OSError as exc:
        raise CliError(EXIT_CHANNEL, f"socket error: {exc}") from None
    finally:
        key.wipe()
    return _finish_receive(args, payload)


# -- parser -----------------------------------------------------------------

def _common(p: argparse.ArgumentParser, population_opts: bool = True) -> None:
    p.add_argument("--out-dir", help=f"output directory (default ${OUTPUT_ENV} or ./{DEFAULT_OUTPUT})")
    if population_opts:
        p.add_argument("--config", help="JSON experiment config file")
        p.add_argument("--seed", type=int, help="master seed (overrides the config)")
        p.add_argument("--count", type=int, help="number of simulated devices (default 30)")


def _reading_opts(p: argparse.ArgumentParser, required: bool = True) -> None:
    p.add_argument("--readings", nargs="+", required=required, metavar="PATH",
                   help="reading CSV files or directories of them")
    p.add_argument("--device", type=int, help="use readings of this device id only")
    p.add_argument("--index", type=int, default=0, help="which of the selected readings to use (default 0)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="respuf", description="Resistor-divider PUF simulator and toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate a device population and write reading CSVs")
    _common(p)
    p.add_argument("--temperature", type=float, help="ambient temperature in C (default reference)")
    p.add_argument("--vdd", type=float, help="supply voltage (default reference)")
    p.add_argument("--samples", type=int, help="acquisitions averaged per reading (default 10000)")
    p.add_argument("--repeats", type=int, default=10, help="readings per device (default 10)")
    p.add_argument("--prefix", default="device_", help="output file name prefix")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("enroll", help="enroll a device and write its helper file")
    _reading_opts(p)
    p.add_argument("--helper", required=True, help="helper file to write")
    p.add_argument("--export-key", metavar="PATH", help="also write the 128-bit key (hex) for a receiver")
    p.set_defaults(func=cmd_enroll)

    p = sub.add_parser("regenerate", help="rebuild the PUF ID from a fresh reading")
    _reading_opts(p)
    p.add_argument("--helper", required=True, help="helper file from enroll")
    p.add_argument("--inject-errors", type=int, default=0, metavar="K", help="flip K random response bits first")
    p.add_argument("--inject-seed", type=int, default=0, help="seed for the injected error positions")
    p.set_defaults(func=cmd_regenerate)

    p = sub.add_parser("metrics", help="PUF metric reports for all four configurations")
    p.add_argument("--readings", nargs="+", required=True, metavar="PATH",
                   help="reading CSV files or directories; the first reading per device is its reference")
    _common(p, population_opts=False)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("sweep", help="BER of COMBINED responses across a temperature or voltage sweep")
    _common(p)
    p.add_argument("kind", choices=("temp", "voltage"))
    p.add_argument("--probe-repeats", type=int, help="probes per device and point (default 10)")
    p.add_argument("--output", help="CSV path (default <out-dir>/sweep_<kind>.csv)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("demo-channel", help="encrypted waveform transfer demo")
    _common(p)
    p.add_argument("role", choices=("loopback", "sender", "receiver"))
    _reading_opts(p, required=False)
    p.add_argument("--helper", help="helper file (sender, or loopback with --readings)")
    p.add_argument("--key-file", help="receiver key (hex); in loopback mode overrides the receiver's key")
    p.add_argument("--waveform", help="waveform CSV to send (default: bundled ECG trace)")
    p.add_argument("--expect", help="original waveform CSV to compare against (receiver)")
    p.add_argument("--output", help="where the receiver writes the decrypted waveform CSV")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=50607)
    p.add_argument("--timeout", type=float, default=30.0, help="socket timeout in seconds")
    p.set_defaults(func=cmd_demo_channel)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
