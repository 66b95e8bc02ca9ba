import numpy as np
import pytest

from s2svlc.calibration import DEFAULT_TARGETS, calibrate_channel, read_targets
from s2svlc.channel import ChannelParams, default_calibration
from s2svlc.errors import CalibrationFailed
from s2svlc.harness import Variable


def test_single_reference_point_gives_zero_map():
    cal = calibrate_channel([(25.0, 0.0)], trials=1)
    xs, ys = cal.curves["distance"]
    assert xs.tolist() == [25.0] and ys.tolist() == [0.0]


def test_non_monotone_targets_rejected():
    with pytest.raises(CalibrationFailed):
        calibrate_channel([(0.0, 0.2), (10.0, 0.1)])


def test_verification_needs_twenty_trials():
    with pytest.raises(ValueError):
        calibrate_channel([(25.0, 0.0)], verify_trials=5)


def test_target_entry_forms(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text("variable,condition,ber\ndistance,0,0\ntilt,-50,0.3\n")
    assert read_targets(p) == [(Variable.Distance, 0.0, 0.0), (Variable.Tilt, -50.0, 0.3)]
    with pytest.raises(ValueError):
        calibrate_channel([(0.0, 0.7)])


def test_default_targets_are_monotone():
    for var in Variable:
        pts = sorted((abs(x), b) for v, x, b in DEFAULT_TARGETS if v is var)
        assert all(b1 >= b0 for (_, b0), (_, b1) in zip(pts, pts[1:]))
        assert pts[-1][1] >= 0.3


def test_packaged_map_interpolates_between_points():
    cal = default_calibration()
    xs, ys = cal.curves["distance"]
    mid = 0.5 * (xs[-2] + xs[-1])
    s = cal.sigma_for("distance", mid)
    assert ys[-2] <= s <= ys[-1]
    assert s == pytest.approx(np.interp(mid, xs, ys))
    # the 15 cm operating point is an explicit calibration entry
    assert 15.0 in xs.tolist()
    assert cal.effective_sigma(ChannelParams(distance_cm=15)) == pytest.approx(ys[xs.tolist().index(15.0)])
