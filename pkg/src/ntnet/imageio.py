"""Binary netpbm (P5 greyscale, P6 RGB) reading and writing."""
from __future__ import annotations

import os

import numpy as np


class ImageFormatError(ValueError):
    pass


def _tokens(data: bytes, count: int):
    """Pull ``count`` whitespace-separated header tokens, skipping # comments."""
    out = []
    i = 0
    n = len(data)
    while len(out) < count:
        while i < n and data[i:i + 1].isspace():
            i += 1
        if i >= n:
            raise ImageFormatError("truncated header")
        if data[i:i + 1] == b"#":
            while i < n and data[i:i + 1] not in (b"\n", b"\r"):
                i += 1
            continue
        j = i
        while j < n and not data[j:j + 1].isspace() and data[j:j + 1] != b"#":
            j += 1
        out.append(data[i:j])
        i = j
    # exactly one whitespace byte separates the header from the raster
    return out, i + 1


def read_pnm(path) -> np.ndarray:
    """Return uint8 pixels, (H, W) for P5 or (H, W, 3) for P6, and the maxval."""
    with open(path, "rb") as fh:
        data = fh.read()
    try:
        (magic, w, h, maxval), offset = _tokens(data, 4)
        w, h, maxval = int(w), int(h), int(maxval)
    except (ImageFormatError, ValueError) as exc:
        raise ImageFormatError(f"{path}: malformed netpbm header ({exc})") from None
    if magic not in (b"P5", b"P6"):
        raise ImageFormatError(f"{path}: unsupported netpbm type {magic!r}")
    if not 0 < maxval <= 255:
        raise ImageFormatError(f"{path}: unsupported bit depth (maxval={maxval}); only 8-bit data is read")
    if w <= 0 or h <= 0:
        raise ImageFormatError(f"{path}: invalid size {w}x{h}")
    channels = 1 if magic == b"P5" else 3
    need = w * h * channels
    raster = data[offset:offset + need]
    if len(raster) != need:
        raise ImageFormatError(f"{path}: expected {need} raster bytes, found {len(raster)}")
    arr = np.frombuffer(raster, dtype=np.uint8).reshape((h, w) if channels == 1 else (h, w, 3))
    return arr.copy(), maxval


def write_pnm(path, pixels: np.ndarray) -> None:
    pixels = np.asarray(pixels)
    if pixels.dtype != np.uint8:
        raise TypeError("write_pnm expects uint8 pixels")
    if pixels.ndim == 3 and pixels.shape[2] == 1:
        pixels = pixels[:, :, 0]
    if pixels.ndim == 2:
        magic = b"P5"
    elif pixels.ndim == 3 and pixels.shape[2] == 3:
        magic = b"P6"
    else:
        raise ValueError(f"write_pnm: unsupported pixel shape {pixels.shape}")
    h, w = pixels.shape[:2]
    with open(path, "wb") as fh:
        fh.write(magic + b"\n%d %d\n255\n" % (w, h))
        fh.write(np.ascontiguousarray(pixels).tobytes())


def to_chw(pixels: np.ndarray, maxval: int = 255) -> np.ndarray:
    """uint8 pixels to a float (C, H, W) image in [0, 1]."""
    arr = np.asarray(pixels, dtype=np.float64) / maxval
    if arr.ndim == 2:
        arr = arr[:, :, None]
    return np.clip(np.ascontiguousarray(arr.transpose(2, 0, 1)), 0.0, 1.0)


def to_uint8(image: np.ndarray) -> np.ndarray:
    """(C, H, W) float image in [0, 1] to (H, W[, 3]) uint8, rounding to nearest."""
    img = np.asarray(image, dtype=np.float64)
    px = np.round(np.clip(img, 0.0, 1.0) * 255.0).astype(np.uint8).transpose(1, 2, 0)
    return px[:, :, 0] if px.shape[2] == 1 else px


def load_image(path) -> np.ndarray:
    pixels, maxval = read_pnm(path)
    return to_chw(pixels, maxval)


def save_image(path, image: np.ndarray) -> None:
    write_pnm(path, to_uint8(image))


def image_extension(channels: int) -> str:
    return ".pgm" if channels == 1 else ".ppm"


SUPPORTED_SUFFIXES = (".pgm", ".ppm", ".pnm")


def list_images(directory) -> list:
    names = sorted(n for n in os.listdir(directory) if n.lower().endswith(SUPPORTED_SUFFIXES))
    return [os.path.join(directory, n) for n in names]
