"""``s2svlc`` command line: encode | channel | decode | sweep | calibrate.

Every stage reads and writes files so intermediate results can be inspected.
Exit status is 0 on success, 1 on usage errors (bad flags, missing inputs)
and 2 on runtime errors.
"""
from __future__ import annotations

import argparse
import dataclasses
import re
import sys
from pathlib import Path

import numpy as np

from .bitstream import ascii_to_bits, prbs, read_bitstream, write_bitstream
from .calibration import DEFAULT_TARGETS, calibrate_channel, read_targets
from .channel import Ambient, CalibrationMap, CameraModel, ChannelParams, capture, default_calibration
from .config import dump_kv, from_kv, parse_kv, read_kv
from .errors import S2SVLCError
from .frame_codec import FrameLayout, build_frames, render_frame
from .harness import HarnessSetup, Variable, run_comparison
from .pipeline import PipelineConfig
from .raster import load_image, save_image
from .receiver import ROI_ERRORS, Pipeline, decode_capture

MANIFEST = "manifest.txt"
PARAMS = "params.txt"
REPORT = "report.txt"
PAYLOAD = "payload.bin"

LIGHTING_NAMES = {"ambient": Ambient.AmbientLight, "nolight": Ambient.NoLight}
# keys a --config file may set besides dataclass fields
EXTRA_KEYS = {"bypass", "calibration"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# ---------------------------------------------------------------- config

def _config_values(args) -> dict[str, str]:
    if not args.config:
        return {}
    path = Path(args.config)
    if not path.exists():
        raise UsageError(f"config file {path} not found")
    try:
        values = read_kv(path)
    except ValueError as exc:
        raise UsageError(f"{path}: {exc}") from None
    known = set(EXTRA_KEYS)
    for cls in (FrameLayout, ChannelParams, CameraModel, PipelineConfig):
        known |= {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(values) - known)
    if unknown:
        raise UsageError(f"{path}: unknown keys {unknown}")
    return values


def _build(cls, values: dict, overrides: dict, base=None):
    names = {f.name for f in dataclasses.fields(cls)}
    try:
        obj = from_kv(cls, {k: v for k, v in values.items() if k in names}, base=base, strict=False)
        flags = {k: v for k, v in overrides.items() if v is not None}
        return dataclasses.replace(obj, **flags) if flags else obj
    except (ValueError, TypeError) as exc:
        raise UsageError(str(exc)) from None


def _seed(args) -> int:
    return args.seed if args.seed is not None else 0


def _layout(args, values) -> FrameLayout:
    base = FrameLayout.bare() if getattr(args, "bare", False) else None
    return _build(FrameLayout, values, dict(rows=args.rows, cols=args.cols, cell_px=args.cell_px,
                                            quiet_zone_cells=args.quiet_zone), base)


def _calibration(spec: str | None) -> CalibrationMap:
    if spec is None or spec == "none":
        return CalibrationMap()
    if spec == "packaged":
        return default_calibration()
    path = Path(spec)
    if not path.exists():
        raise UsageError(f"calibration file {path} not found")
    return CalibrationMap.from_csv(path)


def parse_points(text: str) -> list[float]:
    """``"0,10,20"`` or ``"lo..hi step s"`` (inclusive of ``hi`` when it lands on the grid)."""
    m = re.fullmatch(r"\s*(-?[\d.]+)\s*\.\.\s*(-?[\d.]+)\s*(?:step\s+([\d.]+))?\s*", text)
    if m:
        lo, hi = float(m.group(1)), float(m.group(2))
        step = float(m.group(3) or 1.0)
        if step <= 0 or hi < lo:
            raise UsageError(f"bad range {text!r}")
        n = int(np.floor((hi - lo) / step + 1e-9))
        return [round(lo + i * step, 10) for i in range(n + 1)]
    try:
        return [float(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise UsageError(f"bad points list {text!r}") from None


# ---------------------------------------------------------------- commands

def cmd_encode(args) -> int:
    values = _config_values(args)
    layout = _layout(args, values)
    if args.ascii is not None:
        bits = ascii_to_bits(args.ascii)
    elif args.payload is not None:
        path = Path(args.payload)
        if not path.exists():
            raise UsageError(f"payload file {path} not found")
        bits = read_bitstream(path)
    else:
        bits = prbs(args.prbs, _seed(args))
    frames = build_frames(bits, layout, t0=args.t0, fps=args.fps)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    names = []
    for k, frame in enumerate(frames):
        name = f"frame_{k:04d}.pgm"
        save_image(render_frame(frame), out / name)
        names.append(name)
    write_bitstream(out / PAYLOAD, bits)
    manifest = dump_kv(layout) + f"frames={len(frames)}\nbits={bits.size}\nfiles={','.join(names)}\n"
    (out / MANIFEST).write_text(manifest)
    print(f"wrote {len(frames)} frame(s), {bits.size} bits, to {out}")
    return 0


def _inputs(paths) -> list[Path]:
    files = [Path(p) for p in paths]
    for p in files:
        if not p.exists():
            raise UsageError(f"input {p} not found")
    return files


def cmd_channel(args) -> int:
    values = _config_values(args)
    lighting = LIGHTING_NAMES[args.lighting] if args.lighting else None
    params = _build(ChannelParams, values, dict(
        distance_cm=args.distance, tilt_deg=args.tilt, rotation_deg=args.rotation, ambient=lighting,
        blur_sigma_px=args.blur, noise_std=args.noise, seed=args.seed))
    camera = _build(CameraModel, values, dict(canvas_px=args.canvas, ref_distance_cm=args.ref_distance))
    bypass = args.bypass or values.get("bypass", "false").lower() in ("1", "true", "yes", "on")
    cal_spec = args.calibration or values.get("calibration") or "none"
    calibration = _calibration(cal_spec)
    files = _inputs(args.frames)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for k, path in enumerate(files):
        frame_params = dataclasses.replace(params, seed=params.seed * 1000 + k)
        shot = capture(load_image(path), frame_params, calibration, camera, bypass=bypass)
        save_image(shot, out / f"capture_{k:04d}.ppm")
    echo = dump_kv(params) + dump_kv(camera) + f"bypass={'true' if bypass else 'false'}\ncalibration={cal_spec}\n"
    (out / PARAMS).write_text(echo)
    print(f"captured {len(files)} frame(s) into {out}")
    return 0


def _manifest(path) -> tuple[FrameLayout, int]:
    path = Path(path)
    if not path.exists():
        raise UsageError(f"manifest {path} not found")
    values = parse_kv(path.read_text())
    try:
        layout = from_kv(FrameLayout, values, strict=False)
        return layout, int(values["bits"])
    except (KeyError, ValueError) as exc:
        raise UsageError(f"{path}: bad manifest ({exc})") from None


def cmd_decode(args) -> int:
    values = _config_values(args)
    cfg = _build(PipelineConfig, values, {})
    layout, n_bits = _manifest(args.manifest)
    pipeline = Pipeline(args.pipeline)
    files = _inputs(args.captures)
    grids, lines = [], []
    for path in files:
        try:
            grids.append(decode_capture(load_image(path), layout, pipeline, cfg))
        except ROI_ERRORS as exc:
            grids.append(None)
            lines.append(f"# {path.name}: {type(exc).__name__}: {exc}")

    decoded = [g for g in grids if g is not None]
    by_sequence = (layout.header_cells > 0 and decoded and all(g.crc_ok for g in decoded)
                   and len({g.header.sequence_number for g in decoded}) == len(decoded)
                   and all(g.header.sequence_number < len(grids) for g in decoded))
    slots = [None] * len(grids)
    if by_sequence:
        lost = iter(i for i, g in enumerate(grids) if g is None)
        taken = {g.header.sequence_number for g in decoded}
        free = iter(i for i in range(len(grids)) if i not in taken)
        for i, g in enumerate(grids):
            if g is not None:
                slots[g.header.sequence_number] = (i, g)
        for i in lost:
            slots[next(free)] = (i, None)
    else:
        slots = list(enumerate(grids))

    chunks = []
    report = [f"pipeline={pipeline.value}", f"frames={len(grids)}", f"order={'sequence' if by_sequence else 'file'}"]
    for slot, (i, g) in enumerate(slots):
        if g is None:
            chunks.append(np.zeros(layout.capacity, dtype=np.uint8))
            status = "lost"
        else:
            chunks.append(g.payload_bits)
            status = {True: "ok", False: "fail", None: "none"}[g.crc_ok]
        report.append(f"frame.{slot}={files[i].name} crc={status}")
    bits = np.concatenate(chunks) if chunks else np.zeros(0, dtype=np.uint8)
    if bits.size < n_bits:
        bits = np.concatenate([bits, np.zeros(n_bits - bits.size, dtype=np.uint8)])
    bits = bits[:n_bits]
    frames_lost = sum(g is None for g in grids)
    report += [f"frames_lost={frames_lost}", f"crc_failures={sum(g is not None and g.crc_ok is False for g in grids)}",
               f"bits={n_bits}"]
    if args.truth is not None:
        truth_path = Path(args.truth)
        if not truth_path.exists():
            raise UsageError(f"truth file {truth_path} not found")
        truth = read_bitstream(truth_path)
        if truth.size != n_bits:
            raise S2SVLCError(f"truth has {truth.size} bits, manifest says {n_bits}")
        report.append(f"bit_errors={int(np.count_nonzero(truth != bits))}")
        report.append(f"ber={np.count_nonzero(truth != bits) / n_bits:.8f}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_bitstream(out / PAYLOAD, bits)
    (out / REPORT).write_text("\n".join(report + lines) + "\n")
    print("\n".join(report))
    return 0


def cmd_sweep(args) -> int:
    values = _config_values(args)
    cfg = _build(PipelineConfig, values, {})
    variable = Variable(args.variable)
    points = parse_points(args.points) if args.points else (
        [0, 10, 20, 30, 40, 50] if variable is Variable.Distance else parse_points("-50..50 step 10"))
    lightings = [LIGHTING_NAMES[n] for n in ("ambient", "nolight")] if args.lighting == "both" \
        else [LIGHTING_NAMES[args.lighting]]
    calibration = _calibration(args.calibration or values.get("calibration") or "packaged")
    setup = HarnessSetup(pipeline_config=cfg, calibration=calibration)
    if args.trials < 1:
        raise UsageError("--trials must be >= 1")
    try:
        reports = run_comparison(variable, points, lightings, args.trials, _seed(args),
                                 args.payload_bits, setup=setup, out_dir=args.out)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    for r in reports:
        print(f"{r.variable.value}={r.value:g} {r.lighting.value} {r.pipeline.value} "
              f"ber={r.ber:.5f} lost={r.frames_lost}")
    return 0


def cmd_calibrate(args) -> int:
    targets = DEFAULT_TARGETS
    if args.targets is not None:
        if not Path(args.targets).exists():
            raise UsageError(f"targets file {args.targets} not found")
        targets = read_targets(args.targets)
    cal = calibrate_channel(targets, trials=args.trials, verify_trials=args.verify_trials,
                            base_seed=_seed(args) + 10_000)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cal.to_csv(out / "calibration.csv")
    print(f"wrote {out / 'calibration.csv'}")
    return 0


# ---------------------------------------------------------------- parser

def _global_flags(p: argparse.ArgumentParser, suppress: bool) -> None:
    d = argparse.SUPPRESS
    p.add_argument("--config", default=d if suppress else None, help="key=value config file")
    p.add_argument("--out", default=d if suppress else ".", help="output directory")
    p.add_argument("--seed", type=int, default=d if suppress else None,
                   help="base RNG seed (default: from --config, else 0)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="s2svlc", description="Screen-to-camera OOK link simulator.")
    _global_flags(parser, suppress=False)
    common = _Parser(add_help=False)
    _global_flags(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("encode", parents=[common], help="payload -> frame images")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--ascii", help="ASCII text payload")
    src.add_argument("--payload", help="bitstream file (bytes + optional .len sidecar)")
    src.add_argument("--prbs", type=int, help="PRBS payload of this many bits (seeded by --seed)")
    p.add_argument("--bare", action="store_true", help="no markers or header")
    p.add_argument("--rows", type=int)
    p.add_argument("--cols", type=int)
    p.add_argument("--cell-px", type=int)
    p.add_argument("--quiet-zone", type=int)
    p.add_argument("--t0", type=int, default=0, help="first frame timestamp (ms)")
    p.add_argument("--fps", type=int, default=60)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("channel", parents=[common], help="frame images -> simulated captures")
    p.add_argument("frames", nargs="+")
    p.add_argument("--distance", type=float)
    p.add_argument("--tilt", type=float)
    p.add_argument("--rotation", type=float)
    p.add_argument("--lighting", choices=sorted(LIGHTING_NAMES))
    p.add_argument("--blur", type=float, help="extra Gaussian sigma in pixels")
    p.add_argument("--noise", type=float, help="additive noise std")
    p.add_argument("--canvas", type=int, help="sensor canvas size in pixels")
    p.add_argument("--ref-distance", type=float, help="distance imaged at 1:1 scale (cm)")
    p.add_argument("--bypass", action="store_true", help="skip the ambient stage and colour gains")
    p.add_argument("--calibration", help="'none' (default), 'packaged' or a calibration CSV")
    p.set_defaults(func=cmd_channel)

    p = sub.add_parser("decode", parents=[common], help="captures -> payload + report")
    p.add_argument("captures", nargs="+")
    p.add_argument("--manifest", required=True)
    p.add_argument("--pipeline", choices=[x.value for x in Pipeline], default="proposed")
    p.add_argument("--truth", help="reference bitstream for BER")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("sweep", parents=[common], help="Monte-Carlo BER sweep -> sweep.csv + sweep.svg")
    p.add_argument("--variable", choices=[v.value for v in Variable], required=True)
    p.add_argument("--points", help="'0,10,20' or 'lo..hi step s'")
    p.add_argument("--lighting", choices=["ambient", "nolight", "both"], default="both")
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--payload-bits", type=int, default=40_000)
    p.add_argument("--calibration", help="'packaged' (default), 'none' or a calibration CSV")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("calibrate", parents=[common], help="fit the blur maps -> calibration.csv")
    p.add_argument("--targets", help="CSV with variable,condition,ber (default: built-in curve)")
    p.add_argument("--trials", type=int, default=4, help="trials per bisection step")
    p.add_argument("--verify-trials", type=int, default=20)
    p.set_defaults(func=cmd_calibrate)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except (S2SVLCError, OSError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
