"""Grayscale image I/O for the experiment harness.

Images are exchanged as ImagePlane objects: double-precision pixels in
[EPS_IMAGE, 1], scaled from 8- or 16-bit integer rasters.  Two container
formats are supported — binary portable graymap (P5) parsed here directly,
and portable network graphics via Pillow.  Color rasters are split into
independent grayscale planes.
"""

import os
from dataclasses import dataclass

import numpy as np
from PIL import Image

from ..errors import FormatError, ShapeError
from ..geometry import EPS_IMAGE

__all__ = ["ImagePlane", "load_image", "load_planes", "save_image"]


@dataclass
class ImagePlane:
    height: int
    width: int
    pixels: np.ndarray  # flat float64 vector, values in [EPS_IMAGE, 1]
    path: str = ""
    bit_depth: int = 8

    @property
    def image(self) -> np.ndarray:
        """Pixels reshaped to (height, width)."""
        return self.pixels.reshape(self.height, self.width)

    @classmethod
    def from_array(cls, arr, bit_depth: int = 16, path: str = "") -> "ImagePlane":
        arr = np.asarray(arr, dtype=np.float64)
        if arr.ndim != 2:
            raise ShapeError(f"expected a 2-D array, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise FormatError("pixel array contains non-finite values")
        if arr.min() < 0.0 or arr.max() > 1.0 + 1e-9:
            raise FormatError(
                f"pixel values must lie in [0, 1], got range "
                f"[{arr.min():g}, {arr.max():g}]"
            )
        pixels = np.clip(arr, EPS_IMAGE, 1.0).reshape(-1)
        return cls(arr.shape[0], arr.shape[1], pixels, path, bit_depth)


def _scale_from_ints(arr: np.ndarray, maxval: int) -> np.ndarray:
    return np.clip(arr.astype(np.float64) / float(maxval), EPS_IMAGE, 1.0)


def _read_pgm(path: str) -> ImagePlane:
    with open(path, "rb") as fh:
        data = fh.read()
    pos = 0

    def token() -> bytes:
        nonlocal pos
        while pos < len(data):
            c = data[pos : pos + 1]
            if c == b"#":
                while pos < len(data) and data[pos : pos + 1] not in (b"\n", b"\r"):
                    pos += 1
            elif c.isspace():
                pos += 1
            else:
                break
        start = pos
        while pos < len(data):
            c = data[pos : pos + 1]
            if c.isspace() or c == b"#":
                break
            pos += 1
        if start == pos:
            raise FormatError(f"{path}: truncated graymap header")
        return data[start:pos]

    magic = token()
    if magic != b"P5":
        raise FormatError(f"{path}: expected binary graymap magic P5, got {magic!r}")
    try:
        width, height, maxval = int(token()), int(token()), int(token())
    except ValueError as exc:
        raise FormatError(f"{path}: non-numeric graymap header field") from exc
    if width < 1 or height < 1:
        raise FormatError(f"{path}: bad raster dimensions {width}x{height}")
    if not (0 < maxval < 65536):
        raise FormatError(f"{path}: maxval {maxval} outside [1, 65535]")
    pos += 1  # single whitespace byte separating header from raster
    count = width * height
    if maxval < 256:
        raw = np.frombuffer(data, dtype=np.uint8, count=count, offset=pos)
        depth = 8
    else:
        raw = np.frombuffer(data, dtype=">u2", count=count, offset=pos)
        depth = 16
    if raw.size != count:
        raise FormatError(f"{path}: raster truncated ({raw.size} of {count} pixels)")
    pixels = _scale_from_ints(raw, maxval).reshape(-1)
    return ImagePlane(height, width, pixels, str(path), depth)


def _png_planes(path: str):
    try:
        img = Image.open(path)
        img.load()
    except OSError as exc:
        raise FormatError(f"{path}: cannot decode image: {exc}") from exc
    mode = img.mode
    if mode == "L":
        arrays, maxval, depth = [np.asarray(img, dtype=np.float64)], 255, 8
    elif mode in ("I;16", "I;16B", "I;16L", "I"):
        arr = np.asarray(img, dtype=np.float64)
        arrays, maxval, depth = [arr], 65535, 16
    elif mode in ("RGB", "RGBA"):
        rgb = np.asarray(img.convert("RGB"), dtype=np.float64)
        arrays = [rgb[..., c] for c in range(3)]
        maxval, depth = 255, 8
    else:
        raise FormatError(f"{path}: unsupported image mode {mode!r}")
    planes = []
    for arr in arrays:
        pixels = _scale_from_ints(arr, maxval).reshape(-1)
        planes.append(ImagePlane(arr.shape[0], arr.shape[1], pixels, str(path), depth))
    return planes


def load_planes(path) -> list:
    """All grayscale planes of a raster file (1 for grayscale, 3 for color)."""
    path = os.fspath(path)
    ext = os.path.splitext(path)[1].lower()
    if ext == ".pgm":
        return [_read_pgm(path)]
    if ext == ".png":
        return _png_planes(path)
    raise FormatError(f"{path}: unsupported image extension {ext!r} (use .pgm or .png)")


def load_image(path) -> ImagePlane:
    """Load a grayscale raster; values scaled to [EPS_IMAGE, 1].

    Raises FormatError for color inputs — those carry several planes, use
    load_planes to process each independently.
    """
    planes = load_planes(path)
    if len(planes) != 1:
        raise FormatError(
            f"{os.fspath(path)}: color image with {len(planes)} planes; "
            "use load_planes"
        )
    return planes[0]


def save_image(plane, path, bit_depth: int = None) -> None:
    """Write an ImagePlane (or a 2-D array in [0, 1]) as .pgm or .png.

    The integer scaling is round(pixel * maxval), so a save/load round trip
    reproduces pixels to half a quantization step.
    """
    if isinstance(plane, np.ndarray):
        plane = ImagePlane.from_array(plane, bit_depth or 16)
    depth = bit_depth or plane.bit_depth
    if depth not in (8, 16):
        raise FormatError(f"bit depth must be 8 or 16, got {depth}")
    maxval = 255 if depth == 8 else 65535
    quant = np.rint(plane.image * maxval)
    path = os.fspath(path)
    ext = os.path.splitext(path)[1].lower()
    if ext == ".pgm":
        header = f"P5\n{plane.width} {plane.height}\n{maxval}\n".encode("ascii")
        raw = quant.astype(np.uint8 if depth == 8 else ">u2").tobytes()
        with open(path, "wb") as fh:
            fh.write(header + raw)
    elif ext == ".png":
        if depth == 8:
            img = Image.fromarray(quant.astype(np.uint8), mode="L")
        else:
            img = Image.fromarray(quant.astype(np.uint16))
        img.save(path, format="PNG")
    else:
        raise FormatError(f"{path}: unsupported image extension {ext!r} (use .pgm or .png)")
