"""Fit the condition-to-blur maps so the baseline decoder follows a target BER curve."""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .channel import Ambient, CalibrationMap
from .errors import CalibrationFailed
from .harness import HarnessSetup, Variable, evaluate_point
from .receiver import Pipeline

# Baseline BER the simulated link should show under AmbientLight.  Distance
# rises from error-free at contact to about a third of the bits at 50 cm;
# angle curves start from the 15 cm operating point and reach roughly 0.385
# (tilt) and 0.35 (rotation) at 50 degrees.
DEFAULT_TARGETS = (
    [(Variable.Distance, d, b) for d, b in
     [(0.0, 0.0), (10.0, 0.03), (15.0, 0.10), (20.0, 0.16), (30.0, 0.22), (40.0, 0.28), (50.0, 0.33)]]
    + [(Variable.Tilt, a, b) for a, b in
       [(0.0, 0.0), (10.0, 0.13), (20.0, 0.17), (30.0, 0.23), (40.0, 0.30), (50.0, 0.385)]]
    + [(Variable.Rotation, a, b) for a, b in
       [(0.0, 0.0), (10.0, 0.12), (20.0, 0.16), (30.0, 0.21), (40.0, 0.28), (50.0, 0.35)]]
)

SIGMA_MAX = 8.0


def _normalize(target_curve) -> dict:
    """Group ``(condition, ber)`` or ``(variable, condition, ber)`` entries by variable."""
    grouped: dict[Variable, dict[float, float]] = {}
    for entry in target_curve:
        if len(entry) == 2:
            cond, ber = entry
            if isinstance(cond, tuple):
                var, x = cond
            else:
                var, x = Variable.Distance, cond
        elif len(entry) == 3:
            var, x, ber = entry
        else:
            raise ValueError(f"bad target entry {entry!r}")
        var = Variable(var) if not isinstance(var, Variable) else var
        x = float(x) if var is Variable.Distance else abs(float(x))
        if not 0.0 <= float(ber) <= 0.5:
            raise ValueError(f"target BER {ber} outside [0, 0.5]")
        pts = grouped.setdefault(var, {})
        pts[x] = max(pts.get(x, 0.0), float(ber))
    for var, pts in grouped.items():
        bers = [pts[x] for x in sorted(pts)]
        if any(b1 < b0 for b0, b1 in zip(bers, bers[1:])):
            raise CalibrationFailed(f"{var.value} targets are not monotone")
    return grouped


def _with_point(base: CalibrationMap, var: Variable, xs, sigmas) -> CalibrationMap:
    curves = dict(base.curves)
    curves[var.value] = (np.asarray(xs, dtype=float), np.asarray(sigmas, dtype=float))
    return CalibrationMap(curves)


def _baseline_ber(var, x, cal, setup, lighting, trials, base_seed, max_frames) -> float:
    rep = evaluate_point(var, x, lighting, trials, base_seed, pipelines=(Pipeline.Baseline,),
                         setup=setup, calibration=cal, max_frames=max_frames)[0]
    return rep.ber


def calibrate_channel(target_curve=DEFAULT_TARGETS, setup: HarnessSetup | None = None,
                      lighting: Ambient = Ambient.AmbientLight, trials: int = 4,
                      verify_trials: int = 20, base_seed: int = 10_000, sigma_tol: float = 0.02,
                      max_frames: int | None = 1) -> CalibrationMap:
    """Return piecewise-linear condition-to-sigma maps matching ``target_curve``.

    For each condition, in increasing order, the smallest sigma (not below the
    previous condition's) whose Monte-Carlo baseline BER reaches the target is
    found by bisection. Angle maps are fitted on top of the distance map at the
    angle-sweep distance, so the distance curve is fitted first. The result is
    re-measured with ``verify_trials`` trials and rejected if the baseline BER
    decreases anywhere along a curve.
    """
    if verify_trials < 20:
        raise ValueError("verification needs at least 20 trials")
    setup = setup or HarnessSetup(calibration=CalibrationMap())
    grouped = _normalize(target_curve)
    cal = CalibrationMap()
    order = [v for v in (Variable.Distance, Variable.Tilt, Variable.Rotation) if v in grouped]
    for var in order:
        xs, sigmas = [], []
        for x in sorted(grouped[var]):
            target = grouped[var][x]

            def ber_at(s, x=x):
                trial_cal = _with_point(cal, var, xs + [x], sigmas + [s])
                return _baseline_ber(var, x, trial_cal, setup, lighting, trials, base_seed, max_frames)

            lo = sigmas[-1] if sigmas else 0.0
            if ber_at(lo) >= target:
                xs.append(x)
                sigmas.append(lo)
                continue
            hi = max(lo + 0.5, 2 * lo)
            while ber_at(hi) < target:
                lo, hi = hi, 2 * hi
                if hi > SIGMA_MAX:
                    raise CalibrationFailed(f"{var.value}={x}: BER {target} unreachable below sigma {SIGMA_MAX}")
            while hi - lo > sigma_tol:
                mid = 0.5 * (lo + hi)
                if ber_at(mid) >= target:
                    hi = mid
                else:
                    lo = mid
            xs.append(x)
            sigmas.append(round(hi, 4))
        cal = _with_point(cal, var, xs, sigmas)

    for var in order:
        xs = sorted(grouped[var])
        bers = [_baseline_ber(var, x, cal, setup, lighting, verify_trials, base_seed, max_frames) for x in xs]
        for (x0, b0), (x1, b1) in zip(zip(xs, bers), zip(xs[1:], bers[1:])):
            if b1 < b0:
                raise CalibrationFailed(
                    f"baseline BER falls from {b0:.4f} at {var.value}={x0} to {b1:.4f} at {x1}")
    return cal


def read_targets(path) -> list:
    """Targets CSV with columns ``variable,condition,ber``."""
    with open(path, newline="") as fh:
        return [(Variable(row["variable"]), float(row["condition"]), float(row["ber"]))
                for row in csv.DictReader(fh)]


def packaged_calibration_path() -> Path:
    return Path(__file__).with_name("data") / "calibration.csv"
