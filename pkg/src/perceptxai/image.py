"""Pixel-grid types, PNG I/O and procedural base images."""
from dataclasses import dataclass
import os

import numpy as np
import png
from scipy.ndimage import gaussian_filter

from .errors import (
    DimensionTooSmall,
    IoFailure,
    MalformedPng,
    MissingFile,
    UnnormalizedHeatmap,
    UnsupportedFormat,
)
from .validation import check_gray, check_image

LUMA = np.array([0.299, 0.587, 0.114])


@dataclass
class Heatmap:
    """Per-pixel attribution scores.

    When ``normalized`` is true the values satisfy min = 0 and max = 1, or are
    all zero if the raw scores were constant.
    """

    values: np.ndarray
    normalized: bool = False

    @property
    def shape(self):
        return self.values.shape

    @classmethod
    def from_raw(cls, raw):
        return cls(minmax_normalize(raw), normalized=True)


def minmax_normalize(raw):
    raw = np.asarray(raw, dtype=np.float64)
    lo, hi = raw.min(), raw.max()
    if hi <= lo:
        return np.zeros_like(raw)
    out = (raw - lo) / (hi - lo)
    # pin the extremes exactly despite rounding
    out[raw == lo] = 0.0
    out[raw == hi] = 1.0
    return out


def load_image(path):
    """Read an 8- or 16-bit PNG as an ``(H, W, 3)`` float image in [0, 1].

    Alpha is dropped and grayscale is replicated to three channels. Palette
    images are accepted only when they carry a transparency table.
    """
    path = os.fspath(path)
    if not os.path.isfile(path):
        raise MissingFile(path)
    try:
        reader = png.Reader(filename=path)
        reader.preamble()
        if reader.colormap and reader.trns is None:
            raise UnsupportedFormat(f"{path}: palette PNG without transparency table")
        if not reader.colormap and reader.bitdepth not in (8, 16):
            raise UnsupportedFormat(f"{path}: bit depth {reader.bitdepth} not supported")
        width, height, rows, info = reader.asDirect()
        data = np.array([np.asarray(row, dtype=np.float64) for row in rows])
    except (png.FormatError, png.ChunkError, EOFError, ValueError) as exc:
        if isinstance(exc, UnsupportedFormat):
            raise
        raise MalformedPng(f"{path}: {exc}") from exc

    planes = info["planes"]
    data = data.reshape(height, width, planes) / float(2 ** info["bitdepth"] - 1)
    if planes in (2, 4):
        data = data[:, :, :-1]
    if data.shape[2] == 1:
        data = np.repeat(data, 3, axis=2)
    return np.ascontiguousarray(data)


def _to_bytes(values):
    # round half up, v -> floor(v * 255 + 0.5)
    return np.floor(np.clip(values, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)


def save_image(img, path):
    """Write an Image, GrayImage or normalized Heatmap as an 8-bit PNG."""
    if isinstance(img, Heatmap):
        if not img.normalized:
            raise UnnormalizedHeatmap("heatmap must be normalized before saving")
        arr = check_gray(img.values)
    else:
        arr = np.asarray(img, dtype=np.float64)
        arr = check_gray(arr) if arr.ndim == 2 else check_image(arr)
    data = _to_bytes(arr)
    height, width = data.shape[:2]
    greyscale = data.ndim == 2
    writer = png.Writer(width, height, greyscale=greyscale, bitdepth=8)
    try:
        with open(path, "wb") as fh:
            writer.write(fh, data.reshape(height, -1))
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def save_mask(mask, path):
    """Store a binary mask as an 8-bit {0, 255} PNG."""
    save_image(np.asarray(mask, dtype=np.float64), path)


def load_mask(path):
    return (load_image(path)[:, :, 0] >= 0.5).astype(np.uint8)


def to_grayscale(img):
    """Rec. 601 luma: ``0.299 R + 0.587 G + 0.114 B``."""
    img = np.asarray(img, dtype=np.float64)
    r, g, b = img[..., 0], img[..., 1], img[..., 2]
    y = r * LUMA[0] + g * LUMA[1] + b * LUMA[2]
    # the weights sum to 1 - 1e-16 in floating point; keep y inside the channel range
    return np.clip(y, np.minimum(np.minimum(r, g), b), np.maximum(np.maximum(r, g), b))


def _soft_step(signed_dist, width):
    # 1 inside (negative distance), 0 outside, logistic ramp across the boundary
    return 0.5 * (1.0 - np.tanh(signed_dist / width))


def synth_base(seed, width, height):
    """Deterministic procedural stand-in for a natural photograph.

    Smooth cosine-gradient background, a few soft-edged ellipses and
    rectangles, and a little low-pass noise. Values stay well inside (0, 1) so
    that multiplicative cues and a pure-white overlay remain visible.
    """
    if width < 32 or height < 32:
        raise DimensionTooSmall(f"base images need width, height >= 32, got {width}x{height}")
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)
    u, v = xx / width, yy / height

    img = np.empty((height, width, 3))
    img[:] = rng.uniform(0.35, 0.6, size=3)
    for _ in range(3):
        fx, fy = rng.uniform(-1.5, 1.5, size=2)
        phase = rng.uniform(0, 2 * np.pi)
        tint = rng.uniform(0.02, 0.06, size=3)
        wave = np.cos(2 * np.pi * (fx * u + fy * v) + phase)
        img += wave[:, :, None] * tint

    for _ in range(rng.integers(2, 6)):
        cx, cy = rng.uniform(0.1, 0.9) * width, rng.uniform(0.1, 0.9) * height
        a = rng.uniform(0.08, 0.25) * width
        b = rng.uniform(0.08, 0.25) * height
        color = rng.uniform(0.2, 0.75, size=3)
        if rng.random() < 0.5:
            theta = rng.uniform(0, np.pi)
            dx, dy = xx - cx, yy - cy
            ex = dx * np.cos(theta) + dy * np.sin(theta)
            ey = -dx * np.sin(theta) + dy * np.cos(theta)
            dist = (np.sqrt((ex / a) ** 2 + (ey / b) ** 2) - 1.0) * min(a, b)
        else:
            dist = np.maximum(np.abs(xx - cx) - a, np.abs(yy - cy) - b)
        alpha = _soft_step(dist, rng.uniform(1.5, 3.0))[:, :, None]
        img = img * (1.0 - alpha) + color * alpha

    noise = gaussian_filter(rng.standard_normal((height, width)), sigma=3.0, mode="wrap")
    noise *= 0.01 / max(noise.std(), 1e-12)
    img += noise[:, :, None]
    return np.clip(img, 0.0, 1.0)


def quantize8(img):
    """Round samples to the 8-bit grid exactly as :func:`save_image` stores them."""
    return _to_bytes(np.asarray(img, dtype=np.float64)) / 255.0
