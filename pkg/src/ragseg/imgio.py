"""Raster I/O and color conversions.

Images are plain numpy arrays:
  RGB image   -- uint8, shape (H, W, 3)
  LAB image   -- float64, shape (H, W, 3), L in [0, 100]
  gray raster -- float64, shape (H, W), 0..255
  label map   -- int32/int64, shape (H, W), compact ids 0..n-1
"""

import os
import re

import numpy as np
from PIL import Image, UnidentifiedImageError


class ImageIOError(Exception):
    """Base class for raster decode/encode failures."""


class UnsupportedFormatError(ImageIOError):
    pass


class CorruptImageError(ImageIOError):
    pass


class LabelRangeError(ImageIOError):
    """Label ids do not fit the chosen on-disk format."""


def load_image(path):
    """Load an 8-bit RGB image from a PNG or binary PPM (P6) file."""
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    with open(path, "rb") as f:
        magic = f.read(2)
    if magic == b"P6":
        return _load_ppm(path)
    if magic == b"\x89P":
        return _load_png(path)
    raise UnsupportedFormatError(f"{path}: not a PNG or binary PPM file")


def _load_png(path):
    try:
        with Image.open(path) as im:
            im = im.convert("RGB")
            arr = np.asarray(im, dtype=np.uint8)
    except UnidentifiedImageError as e:
        raise CorruptImageError(f"{path}: undecodable PNG") from e
    return arr


def _load_ppm(path):
    with open(path, "rb") as f:
        data = f.read()
    # header: "P6" whitespace width whitespace height whitespace maxval single-ws
    m = re.match(rb"P6\s+(?:#[^\n]*\n\s*)*(\d+)\s+(\d+)\s+(\d+)\s", data)
    if m is None:
        raise CorruptImageError(f"{path}: malformed PPM header")
    w, h, maxval = int(m.group(1)), int(m.group(2), ), int(m.group(3))
    if maxval != 255:
        raise UnsupportedFormatError(f"{path}: only maxval 255 PPM supported")
    payload = data[m.end():]
    need = w * h * 3
    if len(payload) < need:
        raise CorruptImageError(f"{path}: truncated PPM payload "
                                f"({len(payload)} of {need} bytes)")
    return np.frombuffer(payload[:need], dtype=np.uint8).reshape(h, w, 3).copy()


def save_image(img, path):
    """Write an (H, W, 3) uint8 array as PNG."""
    Image.fromarray(np.asarray(img, dtype=np.uint8), mode="RGB").save(path)


# sRGB (D65) -> CIELAB, standard piecewise gamma and white point.
_SRGB_TO_XYZ = np.array([
    [0.4124564, 0.3575761, 0.1804375],
    [0.2126729, 0.7151522, 0.0721750],
    [0.0193339, 0.1191920, 0.9503041],
])
_WHITE_D65 = np.array([0.95047, 1.00000, 1.08883])


def rgb_to_lab(img):
    """Convert an 8-bit sRGB image to CIELAB (D65)."""
    rgb = np.asarray(img, dtype=np.float64) / 255.0
    lin = np.where(rgb <= 0.04045, rgb / 12.92, ((rgb + 0.055) / 1.055) ** 2.4)
    xyz = lin @ _SRGB_TO_XYZ.T
    t = xyz / _WHITE_D65
    eps = 216.0 / 24389.0
    kappa = 24389.0 / 27.0
    f = np.where(t > eps, np.cbrt(t), (kappa * t + 16.0) / 116.0)
    lab = np.empty_like(xyz)
    lab[..., 0] = 116.0 * f[..., 1] - 16.0
    lab[..., 1] = 500.0 * (f[..., 0] - f[..., 1])
    lab[..., 2] = 200.0 * (f[..., 1] - f[..., 2])
    return lab


def luminance(img):
    """Rec.601 luma of an 8-bit RGB image, as float64 in 0..255."""
    rgb = np.asarray(img, dtype=np.float64)
    return 0.299 * rgb[..., 0] + 0.587 * rgb[..., 1] + 0.114 * rgb[..., 2]


def compact_labels(labels):
    """Relabel so ids form the contiguous range 0..n-1 (order of first use)."""
    labels = np.asarray(labels)
    _, inv = np.unique(labels, return_inverse=True)
    return inv.reshape(labels.shape).astype(np.int32)


def write_label_map(labels, path):
    """Persist a label map as 16-bit gray PNG or as a text matrix.

    Format is chosen by extension: .png or .txt. Text files carry a
    "width height" header line followed by one row of ids per line.
    """
    labels = np.asarray(labels)
    ext = os.path.splitext(path)[1].lower()
    if ext == ".png":
        if labels.max(initial=0) > 0xFFFF or labels.min(initial=0) < 0:
            raise LabelRangeError(f"label ids out of 16-bit range for {path}")
        Image.fromarray(labels.astype(np.uint16)).save(path)
    elif ext == ".txt":
        h, w = labels.shape
        with open(path, "w") as f:
            f.write(f"{w} {h}\n")
            for row in labels:
                f.write(" ".join(str(int(v)) for v in row) + "\n")
    else:
        raise UnsupportedFormatError(f"unknown label-map extension: {path}")


def read_label_map(path):
    """Inverse of write_label_map (16-bit PNG or text matrix)."""
    ext = os.path.splitext(path)[1].lower()
    if ext == ".png":
        with Image.open(path) as im:
            arr = np.asarray(im)
        if arr.ndim != 2:
            raise CorruptImageError(f"{path}: label PNG must be single-channel")
        return arr.astype(np.int32)
    if ext == ".txt":
        with open(path) as f:
            header = f.readline().split()
            if len(header) != 2:
                raise CorruptImageError(f"{path}: bad label-map header")
            w, h = int(header[0]), int(header[1])
            rows = []
            for line in f:
                if line.strip():
                    rows.append([int(v) for v in line.split()])
        arr = np.array(rows, dtype=np.int32)
        if arr.shape != (h, w):
            raise CorruptImageError(
                f"{path}: matrix shape {arr.shape} does not match header {h}x{w}")
        return arr
    raise UnsupportedFormatError(f"unknown label-map extension: {path}")
