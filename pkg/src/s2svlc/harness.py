"""Monte-Carlo BER experiments over distance, tilt and rotation sweeps."""
from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .bitstream import as_bits, prbs
from .channel import Ambient, CalibrationMap, CameraModel, ChannelParams, capture, default_calibration
from .errors import DegenerateGeometry, LengthMismatch
from .frame_codec import FrameLayout, build_frames, render_frame
from .pipeline import PipelineConfig
from .receiver import ROI_ERRORS, Pipeline, binarize, read_frame

CSV_COLUMNS = ["variable", "value", "lighting", "pipeline", "trials", "bits_tx",
               "bit_errors", "ber", "recovery_efficiency", "frames_lost"]

# angle experiments are run at this screen-to-camera distance
ANGLE_SWEEP_DISTANCE_CM = 15.0


class Variable(enum.Enum):
    Distance = "distance"
    Tilt = "tilt"
    Rotation = "rotation"


@dataclass(frozen=True)
class LightingPreset:
    """Capture conditions that depend on the room lighting, not on the geometry."""

    noise_std: float
    extra_sigma_px: float
    sigma_scale: float = 1.0  # multiplies the calibrated condition blur


LIGHTING_PRESETS = {
    # lit room: short exposure at low sensor gain
    Ambient.AmbientLight: LightingPreset(noise_std=1.0, extra_sigma_px=0.0),
    # dark room: higher sensor gain, and the screen halates against the black
    # surround, spreading whatever blur the geometry already causes
    Ambient.NoLight: LightingPreset(noise_std=4.0, extra_sigma_px=0.0, sigma_scale=1.5),
}

HARNESS_CAMERA = CameraModel(canvas_px=1280, ref_distance_cm=50.0)


@dataclass(frozen=True)
class HarnessSetup:
    layout: FrameLayout = FrameLayout()
    camera: CameraModel = HARNESS_CAMERA
    pipeline_config: PipelineConfig = PipelineConfig()
    calibration: CalibrationMap | None = None  # None -> packaged calibration
    lighting_presets: dict = field(default_factory=lambda: dict(LIGHTING_PRESETS))

    def resolved_calibration(self) -> CalibrationMap:
        return self.calibration if self.calibration is not None else default_calibration()


@dataclass(frozen=True)
class SweepSpec:
    variable: Variable = Variable.Distance
    points: tuple = (0.0, 10.0, 20.0, 30.0, 40.0, 50.0)
    lighting: Ambient = Ambient.AmbientLight
    trials: int = 20
    pipeline: Pipeline = Pipeline.Proposed
    payload_bits: int = 40_000
    base_seed: int = 0

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        lo, hi = (0.0, 50.0) if self.variable is Variable.Distance else (-50.0, 50.0)
        for p in self.points:
            if not lo <= p <= hi:
                raise ValueError(f"{self.variable.value} point {p} outside [{lo}, {hi}]")
        object.__setattr__(self, "points", tuple(float(p) for p in self.points))


@dataclass(frozen=True)
class BerReport:
    variable: Variable
    value: float
    lighting: Ambient
    pipeline: Pipeline
    trials: int
    bits_tx: int
    bit_errors: float  # mean per trial
    frames_lost: int   # summed over trials
    ber_std: float = 0.0  # standard deviation of per-trial BER

    @property
    def ber(self) -> float:
        return self.bit_errors / self.bits_tx

    @property
    def recovery_efficiency(self) -> float:
        return 1.0 - self.ber

    def csv_row(self) -> list[str]:
        return [self.variable.value, f"{self.value:g}", self.lighting.value, self.pipeline.value,
                str(self.trials), str(self.bits_tx), f"{self.bit_errors:.4f}", f"{self.ber:.8f}",
                f"{self.recovery_efficiency:.8f}", str(self.frames_lost)]


def compute_ber(tx, rx) -> float:
    tx, rx = as_bits(tx), as_bits(rx)
    if tx.size != rx.size:
        raise LengthMismatch(f"{tx.size} bits sent, {rx.size} received")
    if tx.size == 0:
        raise LengthMismatch("empty streams")
    return float(np.count_nonzero(tx != rx)) / tx.size


def channel_params(variable: Variable, value: float, lighting: Ambient, seed: int,
                   presets=None) -> ChannelParams:
    """Capture conditions for one sweep point; angle sweeps sit at 15 cm."""
    preset = (presets or LIGHTING_PRESETS)[lighting]
    kw = dict(distance_cm=ANGLE_SWEEP_DISTANCE_CM, ambient=lighting, seed=seed,
              noise_std=preset.noise_std, blur_sigma_px=preset.extra_sigma_px)
    if variable is Variable.Distance:
        kw["distance_cm"] = value
    elif variable is Variable.Tilt:
        kw["tilt_deg"] = value
    else:
        kw["rotation_deg"] = value
    return ChannelParams(**kw)


@dataclass
class TrialResult:
    errors: dict  # Pipeline -> bit errors (lost frames count half their bits)
    lost: dict    # Pipeline -> frames lost


def run_trial(params: ChannelParams, payload_bits: int, payload_seed: int, pipelines,
              setup: HarnessSetup = HarnessSetup(), calibration: CalibrationMap | None = None,
              max_frames: int | None = None) -> TrialResult:
    """One transmission: every pipeline decodes the same captured rasters."""
    calibration = calibration if calibration is not None else setup.resolved_calibration()
    calibration = calibration.scaled(setup.lighting_presets[params.ambient].sigma_scale)
    layout = setup.layout
    payload = prbs(payload_bits, payload_seed)
    frames = build_frames(payload, layout)
    if max_frames is not None:
        frames = frames[:max_frames]
    errors = {p: 0.0 for p in pipelines}
    lost = {p: 0 for p in pipelines}
    cap = layout.capacity
    for k, frame in enumerate(frames):
        sent = frame.payload_bits
        n_real = min(cap, payload_bits - k * cap)
        frame_params = replace(params, seed=params.seed * 1000 + k)
        try:
            shot = capture(render_frame(frame), frame_params, calibration, setup.camera)
        except DegenerateGeometry:
            shot = None
        for p in pipelines:
            try:
                if shot is None:
                    raise DegenerateGeometry("frame outside the sensor")
                got = read_frame(binarize(shot, p, setup.pipeline_config), layout).payload_bits
            except ROI_ERRORS + (DegenerateGeometry,):
                errors[p] += n_real / 2.0
                lost[p] += 1
                continue
            errors[p] += float(np.count_nonzero(got[:n_real] != sent[:n_real]))
    return TrialResult(errors, lost)


def _reports(variable, value, lighting, pipelines, results, bits) -> list[BerReport]:
    out = []
    for p in pipelines:
        errs = np.array([r.errors[p] for r in results])
        out.append(BerReport(variable, float(value), lighting, p, len(results), bits,
                             float(errs.mean()), int(sum(r.lost[p] for r in results)),
                             float((errs / bits).std())))
    return out


def evaluate_point(variable: Variable, value: float, lighting: Ambient, trials: int, base_seed: int,
                   payload_bits: int = 40_000, pipelines=(Pipeline.Proposed, Pipeline.Baseline),
                   setup: HarnessSetup = HarnessSetup(), calibration: CalibrationMap | None = None,
                   max_frames: int | None = None) -> list[BerReport]:
    """Paired Monte-Carlo estimate at one condition, one report per pipeline."""
    results = []
    bits = payload_bits
    if max_frames is not None:
        bits = min(payload_bits, max_frames * setup.layout.capacity)
    for t in range(trials):
        seed = base_seed + t
        params = channel_params(variable, value, lighting, seed, setup.lighting_presets)
        results.append(run_trial(params, payload_bits, seed, pipelines, setup, calibration, max_frames))
    return _reports(variable, value, lighting, pipelines, results, bits)


def run_point(condition: float, spec: SweepSpec, setup: HarnessSetup = HarnessSetup()) -> BerReport:
    return evaluate_point(spec.variable, condition, spec.lighting, spec.trials, spec.base_seed,
                          spec.payload_bits, (spec.pipeline,), setup)[0]


def run_sweep(spec: SweepSpec, setup: HarnessSetup = HarnessSetup(), out_dir=None) -> list[BerReport]:
    reports = [run_point(v, spec, setup) for v in spec.points]
    if out_dir is not None:
        write_outputs(reports, out_dir)
    return reports


def run_comparison(variable: Variable, points, lightings=(Ambient.AmbientLight, Ambient.NoLight),
                   trials: int = 20, base_seed: int = 0, payload_bits: int = 40_000,
                   setup: HarnessSetup = HarnessSetup(), out_dir=None) -> list[BerReport]:
    """Both pipelines x each lighting; pipelines share every captured raster."""
    reports = []
    for lighting in lightings:
        spec = SweepSpec(variable, tuple(points), lighting, trials, Pipeline.Proposed, payload_bits, base_seed)
        for v in spec.points:
            reports.extend(evaluate_point(variable, v, lighting, trials, base_seed, payload_bits, setup=setup))
    if out_dir is not None:
        write_outputs(reports, out_dir)
    return reports


def reports_to_csv(reports) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in reports:
        w.writerow(r.csv_row())
    return buf.getvalue()


def write_csv(reports, path) -> None:
    Path(path).write_text(reports_to_csv(reports), newline="")


def write_svg(reports, path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "s2svlc"
    series: dict[tuple, list] = {}
    for r in reports:
        series.setdefault((r.lighting.value, r.pipeline.value), []).append((r.value, r.ber))
    fig, ax = plt.subplots(figsize=(6, 4))
    for (lighting, pipe), pts in series.items():
        xs, ys = zip(*pts)
        ax.plot(xs, ys, marker="o", label=f"({lighting})-({pipe})")
    variable = reports[0].variable.value if reports else ""
    unit = "cm" if variable == "distance" else "degrees"
    ax.set_xlabel(f"{variable} ({unit})")
    ax.set_ylabel("BER")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def write_outputs(reports, out_dir, stem: str = "sweep") -> None:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_csv(reports, out_dir / f"{stem}.csv")
    write_svg(reports, out_dir / f"{stem}.svg")
