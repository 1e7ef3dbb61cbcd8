import json

import numpy as np
import pytest
from PIL import Image

from wavekd.errors import DecodeError, InvalidArgumentError
from wavekd.imagefile import (
    derescale_band,
    list_images,
    load_band_images,
    load_image,
    rescale_band,
    save_band_images,
    save_image,
)
from wavekd.wavelet import dwt_pyramid


def test_p5_mapping(tmp_path):
    p = tmp_path / "a.pgm"
    p.write_bytes(b"P5\n2 2\n255\n" + bytes([0, 255, 128, 64]))
    img = load_image(p)
    assert img.shape == (2, 2, 1)
    np.testing.assert_array_equal(img.ravel(), [0, 1, 128 / 255, 64 / 255])


def test_header_comments(tmp_path):
    p = tmp_path / "c.pgm"
    p.write_bytes(b"P5 # comment\n# another\n2 1 255\n" + bytes([10, 20]))
    np.testing.assert_array_equal(load_image(p).ravel(), [10 / 255, 20 / 255])


def test_p6_with_p5_sized_content(tmp_path):
    p = tmp_path / "bad.pgm"
    p.write_bytes(b"P6\n2 2\n255\n" + bytes([0, 255, 128, 64]))
    with pytest.raises(DecodeError, match="truncated") as e:
        load_image(p)
    assert "bad.pgm" in str(e.value)


@pytest.mark.parametrize(
    "data, reason",
    [
        (b"P5\n2 2\n65535\n" + bytes(8), "maxval"),
        (b"P5\n2 2\n", "truncated"),
        (b"P2\n1 1\n255\n0\n", "unsupported format"),
        (b"GIF89a", "unsupported format"),
    ],
)
def test_decode_errors(tmp_path, data, reason):
    p = tmp_path / "x.pgm"
    p.write_bytes(data)
    with pytest.raises(DecodeError, match=reason):
        load_image(p)


def test_ppm_round_trip(tmp_path):
    x = np.random.default_rng(0).random((5, 7, 3))
    save_image(x, tmp_path / "x.ppm")
    y = load_image(tmp_path / "x.ppm")
    assert y.shape == x.shape
    assert np.max(np.abs(y - x)) <= 1 / 510 + 1e-15


@pytest.mark.parametrize("channels, mode", [(1, "L"), (3, "RGB")])
def test_png_round_trip(tmp_path, channels, mode):
    x = np.random.default_rng(1).random((6, 4, channels))
    save_image(x, tmp_path / "x.png")
    with Image.open(tmp_path / "x.png") as im:
        assert im.mode == mode
    y = load_image(tmp_path / "x.png")
    assert y.shape == x.shape
    assert np.max(np.abs(y - x)) <= 1 / 510 + 1e-15


def test_png_rejects_16_bit(tmp_path):
    Image.fromarray(np.zeros((4, 4), dtype=np.uint16)).save(tmp_path / "d.png")
    with pytest.raises(DecodeError, match="bit depth"):
        load_image(tmp_path / "d.png")


def test_png_rejects_palette(tmp_path):
    Image.fromarray(np.zeros((4, 4), dtype=np.uint8)).convert("P").save(tmp_path / "p.png")
    with pytest.raises(DecodeError, match="color type"):
        load_image(tmp_path / "p.png")


def test_save_channel_mismatch(tmp_path):
    with pytest.raises(InvalidArgumentError):
        save_image(np.zeros((2, 2, 3)), tmp_path / "x.pgm")
    with pytest.raises(InvalidArgumentError):
        save_image(np.zeros((2, 2, 1)), tmp_path / "x.bmp")


def test_rescale_round_trip():
    band = np.random.default_rng(2).normal(size=(4, 4, 1))
    s, lo, hi = rescale_band(band)
    assert s.min() == 0.0 and s.max() == 1.0
    np.testing.assert_allclose(derescale_band(s, lo, hi), band, atol=1e-14)
    s, lo, hi = rescale_band(np.full((2, 2, 1), -3.0))
    assert np.all(s == 0.5) and lo == hi == -3.0
    assert np.all(derescale_band(s, lo, hi) == -3.0)


def test_band_images(tmp_path):
    x = np.random.default_rng(3).random((8, 8, 1))
    x[:, :4] = 0.5  # gives some all-zero detail coefficients, but not a whole band
    p = dwt_pyramid(x, 3)
    written = save_band_images(p, tmp_path / "bands")
    names = sorted(w.name for w in written)
    assert len(written) == 11
    assert "bands.json" in names and "LL3.pgm" in names and "HH1.pgm" in names
    meta = json.loads((tmp_path / "bands" / "bands.json").read_text())
    assert [b["name"] for b in meta["bands"]][0] == "LL3"
    back = load_band_images(tmp_path / "bands")
    for b in meta["bands"]:
        span = b["max"] - b["min"]
        got = back.low if b["name"] == "LL3" else back.details[int(b["name"][2]) - 1][["LH", "HL", "HH"].index(b["name"][:2])]
        ref = p.low if b["name"] == "LL3" else p.details[int(b["name"][2]) - 1][["LH", "HL", "HH"].index(b["name"][:2])]
        # quantization error is at most half a gray level of the band's range
        assert np.max(np.abs(got - ref)) <= span / 510 + 1e-12


def test_constant_band_is_mid_gray(tmp_path):
    p = dwt_pyramid(np.full((4, 4, 1), 0.2), 2)
    save_band_images(p, tmp_path)
    meta = json.loads((tmp_path / "bands.json").read_text())
    hh1 = next(b for b in meta["bands"] if b["name"] == "HH1")
    assert hh1["degenerate"] is True
    img = load_image(tmp_path / "HH1.pgm")
    assert np.all(img == 128 / 255)


def test_list_images(tmp_path):
    for n in ("b.pgm", "a.png", "notes.txt"):
        (tmp_path / n).write_bytes(b"")
    assert list(list_images(tmp_path)) == ["a", "b"]
    (tmp_path / "a.pgm").write_bytes(b"")
    with pytest.raises(InvalidArgumentError, match="duplicate"):
        list_images(tmp_path)
