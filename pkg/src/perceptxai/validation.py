"""Input validation helpers, in the spirit of ``sklearn.utils.validation``.

Conventions used throughout the package:

* ``Image``     -- float64 array of shape ``(height, width, 3)`` in [0, 1]
* ``GrayImage`` -- float64 array of shape ``(height, width)`` in [0, 1]
* ``Mask``      -- uint8 array of shape ``(height, width)`` with values {0, 1}
* ``Heatmap``   -- :class:`perceptxai.image.Heatmap`
"""
import numpy as np

from .errors import BadFraction, DimensionMismatch, InvalidImage


def check_image(img, name="img"):
    """Return ``img`` as a contiguous float64 ``(H, W, 3)`` array, or raise."""
    arr = np.ascontiguousarray(img, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise InvalidImage(f"{name} must have shape (height, width, 3), got {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise InvalidImage(f"{name} is empty")
    if not np.all(np.isfinite(arr)):
        raise InvalidImage(f"{name} contains non-finite samples")
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise InvalidImage(f"{name} samples must lie in [0, 1]")
    return arr


def check_gray(img, name="img"):
    arr = np.ascontiguousarray(img, dtype=np.float64)
    if arr.ndim != 2 or arr.size == 0:
        raise InvalidImage(f"{name} must be a non-empty 2-D array, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidImage(f"{name} contains non-finite samples")
    return arr


def check_mask(mask, shape=None, name="mask"):
    arr = np.asarray(mask)
    if arr.ndim != 2:
        raise InvalidImage(f"{name} must be 2-D, got {arr.shape}")
    if not np.all((arr == 0) | (arr == 1)):
        raise InvalidImage(f"{name} must be strictly binary")
    if shape is not None and arr.shape != tuple(shape):
        raise DimensionMismatch(f"{name} shape {arr.shape} does not match {tuple(shape)}")
    return arr.astype(np.uint8)


def check_same_shape(a, b, what="inputs"):
    if np.shape(a)[:2] != np.shape(b)[:2]:
        raise DimensionMismatch(f"{what} differ in size: {np.shape(a)[:2]} vs {np.shape(b)[:2]}")


def check_fraction(k, name="k"):
    k = float(k)
    if not 0.0 <= k <= 1.0:
        raise BadFraction(f"{name} must lie in [0, 1], got {k}")
    return k
