import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from s2svlc.errors import ImageIOError, ImageNotFound, UnsupportedFormat
from s2svlc.raster import ImageRaster, load_image, save_image


def test_read_gray_pgm(tmp_path):
    p = tmp_path / "a.pgm"
    p.write_bytes(b"P5\n2 2\n255\n" + bytes([0, 255, 0, 255]))
    img = load_image(p)
    assert (img.width, img.height, img.channels) == (2, 2, 1)
    assert img.samples == bytes([0, 255, 0, 255])


def test_read_ppm_single_pixel(tmp_path):
    p = tmp_path / "a.ppm"
    p.write_bytes(b"P6 1 1 255\n" + bytes([10, 20, 30]))
    img = load_image(p)
    assert img == ImageRaster.from_samples(1, 1, 3, bytes([10, 20, 30]))


def test_header_comments_are_skipped(tmp_path):
    p = tmp_path / "c.pgm"
    p.write_bytes(b"P5\n# made by hand\n1 2 # size\n255\n" + bytes([7, 9]))
    assert load_image(p).samples == bytes([7, 9])


def test_sixteen_bit_pgm_rejected(tmp_path):
    p = tmp_path / "deep.pgm"
    p.write_bytes(b"P5\n1 1\n65535\n\x00\x01")
    with pytest.raises(UnsupportedFormat):
        load_image(p)


def test_missing_file(tmp_path):
    with pytest.raises(ImageNotFound):
        load_image(tmp_path / "nope.pgm")


def test_unknown_format(tmp_path):
    p = tmp_path / "x.bmp"
    p.write_bytes(b"BM....")
    with pytest.raises(UnsupportedFormat):
        load_image(p)


def test_png_with_alpha_rejected(tmp_path):
    from PIL import Image

    p = tmp_path / "a.png"
    Image.new("RGBA", (2, 2)).save(p)
    with pytest.raises(UnsupportedFormat):
        load_image(p)


def test_png_palette_rejected(tmp_path):
    from PIL import Image

    p = tmp_path / "p.png"
    Image.new("P", (2, 2)).save(p)
    with pytest.raises(UnsupportedFormat):
        load_image(p)


@pytest.mark.parametrize("suffix", [".pgm", ".png"])
def test_round_trip_gray_pixel(tmp_path, suffix):
    img = ImageRaster(np.array([[128]], dtype=np.uint8))
    save_image(img, tmp_path / f"g{suffix}")
    assert load_image(tmp_path / f"g{suffix}") == img


@pytest.mark.parametrize("suffix", [".ppm", ".png"])
def test_round_trip_rgb(tmp_path, suffix):
    img = ImageRaster(np.arange(12, dtype=np.uint8).reshape(2, 2, 3))
    save_image(img, tmp_path / f"c{suffix}")
    assert load_image(tmp_path / f"c{suffix}") == img


def test_unwritable_path(tmp_path):
    img = ImageRaster(np.zeros((1, 1), dtype=np.uint8))
    with pytest.raises(ImageIOError):
        save_image(img, tmp_path / "missing_dir" / "x.pgm")


def test_raster_is_immutable():
    img = ImageRaster(np.zeros((2, 2), dtype=np.uint8))
    with pytest.raises(ValueError):
        img.pixels[0, 0] = 1


def test_raster_validation():
    with pytest.raises(ValueError):
        ImageRaster(np.array([[256]]))
    with pytest.raises(ValueError):
        ImageRaster(np.zeros((2, 2, 4), dtype=np.uint8))
    with pytest.raises(ValueError):
        ImageRaster(np.zeros((0, 3), dtype=np.uint8))
    with pytest.raises(ValueError):
        ImageRaster.from_samples(2, 2, 1, bytes(3))


_shapes = st.tuples(st.integers(1, 9), st.integers(1, 9), st.sampled_from([1, 3]))


@settings(max_examples=40, deadline=None)
@given(_shapes.flatmap(lambda s: arrays(np.uint8, (s[0], s[1]) if s[2] == 1 else (s[0], s[1], 3))),
       st.sampled_from(["pnm", ".png"]))
def test_round_trip_property(tmp_path_factory, px, kind):
    img = ImageRaster(px)
    suffix = (".pgm" if img.channels == 1 else ".ppm") if kind == "pnm" else ".png"
    path = tmp_path_factory.mktemp("rt") / f"img{suffix}"
    save_image(img, path)
    assert load_image(path) == img
