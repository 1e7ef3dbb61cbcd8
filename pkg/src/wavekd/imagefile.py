"""Image file I/O: binary PGM/PPM (read and write) and 8-bit PNG via Pillow.

Samples are mapped to [0, 1] by v / 255 on load and quantized back with
round(clip(x, 0, 1) * 255) on save.
"""

from __future__ import annotations

import json
import os
import struct
from pathlib import Path

import numpy as np

from .bands import BandId, canonical_bands
from .errors import DecodeError, InvalidArgumentError
from .wavelet import WaveletPyramid, as_image

IMAGE_SUFFIXES = (".pgm", ".ppm", ".png")
PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"
SIDECAR = "bands.json"


def _pnm_tokens(data: bytes, count: int, path):
    """Read ``count`` header tokens after the magic; return (tokens, raster offset)."""
    pos = 2
    tokens = []
    n = len(data)
    while len(tokens) < count:
        while pos < n and data[pos:pos + 1].isspace():
            pos += 1
        if pos < n and data[pos:pos + 1] == b"#":
            while pos < n and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < n and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise DecodeError(path, "truncated header")
        tok = data[start:pos]
        if not tok.isdigit():
            raise DecodeError(path, f"bad header field {tok!r}")
        tokens.append(int(tok))
    # exactly one whitespace byte separates the header from the raster
    if pos >= n or not data[pos:pos + 1].isspace():
        raise DecodeError(path, "truncated header")
    return tokens, pos + 1


def _decode_pnm(data: bytes, path) -> np.ndarray:
    channels = 1 if data[:2] == b"P5" else 3
    (width, height, maxval), offset = _pnm_tokens(data, 3, path)
    if width < 1 or height < 1:
        raise DecodeError(path, f"bad dimensions {width}x{height}")
    if maxval != 255:
        raise DecodeError(path, f"unsupported maxval {maxval} (only 255)")
    need = width * height * channels
    raster = data[offset:offset + need]
    if len(raster) < need:
        raise DecodeError(path, f"truncated raster: expected {need} bytes, found {len(raster)}")
    px = np.frombuffer(raster, dtype=np.uint8).reshape(height, width, channels)
    return px.astype(np.float64) / 255.0


def _decode_png(data: bytes, path) -> np.ndarray:
    from PIL import Image

    if len(data) < 33 or data[12:16] != b"IHDR":
        raise DecodeError(path, "truncated PNG header")
    bit_depth, color_type, _, _, interlace = struct.unpack(">BBBBB", data[24:29])
    if bit_depth != 8:
        raise DecodeError(path, f"unsupported PNG bit depth {bit_depth} (only 8)")
    if color_type not in (0, 2):
        raise DecodeError(path, f"unsupported PNG color type {color_type} (grayscale or RGB only)")
    if interlace:
        raise DecodeError(path, "interlaced PNG is not supported")
    try:
        with Image.open(path) as im:
            im.load()
            px = np.asarray(im, dtype=np.uint8)
    except (OSError, SyntaxError, ValueError) as e:
        raise DecodeError(path, f"corrupt PNG: {e}") from None
    if px.ndim == 2:
        px = px[:, :, np.newaxis]
    return px.astype(np.float64) / 255.0


def load_image(path) -> np.ndarray:
    """Decode a P5/P6 or 8-bit gray/RGB PNG file to an (H, W, C) float64 array in [0, 1]."""
    with open(path, "rb") as f:
        data = f.read()
    if data[:2] in (b"P5", b"P6"):
        return _decode_pnm(data, path)
    if data[:8] == PNG_SIGNATURE:
        return _decode_png(data, path)
    raise DecodeError(path, "unsupported format (expected binary PGM/PPM or PNG)")


def quantize(image) -> np.ndarray:
    return np.round(np.clip(as_image(image), 0.0, 1.0) * 255.0).astype(np.uint8)


def save_image(image, path) -> Path:
    """Write ``image`` as PGM, PPM or PNG depending on the file suffix."""
    path = Path(path)
    px = quantize(image)
    h, w, c = px.shape
    suffix = path.suffix.lower()
    if suffix in (".pgm", ".ppm"):
        want = 1 if suffix == ".pgm" else 3
        if c != want:
            raise InvalidArgumentError(f"{suffix} needs {want} channel(s), image has {c}")
        magic = b"P5" if c == 1 else b"P6"
        with open(path, "wb") as f:
            f.write(magic + b"\n%d %d\n255\n" % (w, h))
            f.write(px.tobytes())
    elif suffix == ".png":
        from PIL import Image

        if c not in (1, 3):
            raise InvalidArgumentError(f"PNG output needs 1 or 3 channels, image has {c}")
        Image.fromarray(px[:, :, 0] if c == 1 else px).save(path, format="PNG")
    else:
        raise InvalidArgumentError(f"unknown image suffix {path.suffix!r}")
    return path


# -- band visualization -------------------------------------------------------------


def rescale_band(band: np.ndarray):
    """Affine map to [0, 1]. Returns (scaled, lo, hi); a constant band maps to 0.5."""
    lo = float(np.min(band))
    hi = float(np.max(band))
    if hi == lo:
        return np.full(band.shape, 0.5), lo, hi
    return (band - lo) / (hi - lo), lo, hi


def derescale_band(scaled: np.ndarray, lo: float, hi: float) -> np.ndarray:
    if hi == lo:
        return np.full(np.shape(scaled), lo)
    return lo + np.asarray(scaled, dtype=np.float64) * (hi - lo)


def _band_suffix(channels: int) -> str:
    return ".pgm" if channels == 1 else ".ppm"


def save_band_images(pyramid: WaveletPyramid, out_dir) -> list[Path]:
    """One image per band plus a ``bands.json`` sidecar with the rescaling ranges."""
    from .bands import band_array

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    c = pyramid.low.shape[2]
    if c not in (1, 3):
        raise InvalidArgumentError(f"band images need 1 or 3 channels, got {c}")
    written = []
    entries = []
    for b in canonical_bands(pyramid.levels):
        scaled, lo, hi = rescale_band(band_array(pyramid, b))
        name = b.name + _band_suffix(c)
        written.append(save_image(scaled, out_dir / name))
        entries.append({"name": b.name, "file": name, "min": lo, "max": hi, "degenerate": hi == lo})
    sidecar = {
        "levels": pyramid.levels,
        "shape": list(pyramid.shape),
        "rescale": "pixel = (coefficient - min) / (max - min); constant band -> 0.5",
        "bands": entries,
    }
    side = out_dir / SIDECAR
    side.write_text(json.dumps(sidecar, indent=2) + "\n")
    written.append(side)
    return written


def load_band_images(out_dir) -> WaveletPyramid:
    """Rebuild a pyramid from ``save_band_images`` output (8-bit quantized)."""
    out_dir = Path(out_dir)
    meta = json.loads((out_dir / SIDECAR).read_text())
    arrays = {}
    for e in meta["bands"]:
        arrays[e["name"]] = derescale_band(load_image(out_dir / e["file"]), e["min"], e["max"])
    levels = meta["levels"]
    low = arrays[BandId(levels, "LL").name]
    details = tuple(
        tuple(arrays[f"{o}{k}"] for o in ("LH", "HL", "HH")) for k in range(1, levels + 1)
    )
    return WaveletPyramid(levels, low, details)


def list_images(directory) -> dict[str, Path]:
    """Map filename stem -> path for supported images in ``directory``."""
    out = {}
    for name in sorted(os.listdir(directory)):
        p = Path(directory) / name
        if p.suffix.lower() in IMAGE_SUFFIXES and p.is_file():
            if p.stem in out:
                raise InvalidArgumentError(f"duplicate image stem {p.stem!r} in {directory}")
            out[p.stem] = p
    return out
