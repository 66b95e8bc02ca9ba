import pytest

from s2svlc.channel import Ambient, ChannelParams
from s2svlc.config import dump_kv, from_kv, parse_kv
from s2svlc.pipeline import GrayscaleMethod, PipelineConfig


def test_parse_kv_comments_and_blanks():
    assert parse_kv("a = 1\n\n# note\nb=x # tail\n") == {"a": "1", "b": "x"}
    with pytest.raises(ValueError):
        parse_kv("no equals sign")


def test_enum_by_name_or_value():
    assert from_kv(ChannelParams, {"ambient": "nolight"}).ambient is Ambient.NoLight
    assert from_kv(ChannelParams, {"ambient": "NoLight"}).ambient is Ambient.NoLight
    assert from_kv(PipelineConfig, {"grayscale_method": "thirds"}).grayscale_method is GrayscaleMethod.SafeThirds
    with pytest.raises(ValueError):
        from_kv(ChannelParams, {"ambient": "dusk"})


def test_unknown_keys():
    with pytest.raises(ValueError):
        from_kv(ChannelParams, {"zoom": "2"})
    assert from_kv(ChannelParams, {"zoom": "2"}, strict=False) == ChannelParams()


def test_pipeline_config_round_trip():
    cfg = PipelineConfig(grayscale_method=GrayscaleMethod.Mean, adaptive_offset=-2.5, adaptive_block_px=15)
    assert from_kv(PipelineConfig, parse_kv(dump_kv(cfg))) == cfg


def test_base_is_overridden():
    base = ChannelParams(tilt_deg=10, seed=4)
    assert from_kv(ChannelParams, {"seed": "9"}, base=base) == ChannelParams(tilt_deg=10, seed=9)
