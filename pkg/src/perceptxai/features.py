"""Feature extractors turning images into fixed-length vectors.

Two families:

* ``spectral`` -- the DC-normalized azimuthal profile pooled into bands. A model
  on these features is free to use global high-frequency statistics.
* ``patch``    -- per-patch ``[mean, stddev, laplacian_energy]`` of the luma,
  laid out patch by patch in row-major order so that weights map back onto
  pixels.
"""
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .errors import IncompatibleSpec, InvalidConfig
from .image import to_grayscale
from .spectrum import dft2_amplitude, azimuthal_average

SPECTRAL = "spectral"
PATCH = "patch"
PATCH_STATS = ("mean", "stddev", "laplacian_energy")


@dataclass(frozen=True)
class FeatureSpec:
    kind: str = SPECTRAL
    bands: int = 32
    patch_size: int = 16

    def __post_init__(self):
        if self.kind not in (SPECTRAL, PATCH):
            raise InvalidConfig(f"unknown feature kind {self.kind!r}")
        if self.kind == SPECTRAL and self.bands < 2:
            raise InvalidConfig("spectral features need at least 2 bands")
        if self.kind == PATCH and self.patch_size < 1:
            raise InvalidConfig("patch_size must be positive")

    @classmethod
    def spectral(cls, bands=32):
        return cls(SPECTRAL, bands=bands)

    @classmethod
    def patch(cls, patch_size=16):
        return cls(PATCH, patch_size=patch_size)

    def check_shape(self, shape):
        h, w = shape[:2]
        if self.kind == PATCH:
            if h % self.patch_size or w % self.patch_size:
                raise IncompatibleSpec(f"patch size {self.patch_size} does not divide {w}x{h}")
        elif self.bands > min(h, w) // 2 + 1:
            raise IncompatibleSpec(f"{self.bands} bands exceed the {min(h, w) // 2 + 1}-bin profile")

    def n_features(self, shape):
        self.check_shape(shape)
        if self.kind == SPECTRAL:
            return self.bands
        return (shape[0] // self.patch_size) * (shape[1] // self.patch_size) * len(PATCH_STATS)

    def grid(self, shape):
        """Number of patch rows and columns."""
        return shape[0] // self.patch_size, shape[1] // self.patch_size

    def to_dict(self):
        if self.kind == SPECTRAL:
            return {"kind": SPECTRAL, "bands": self.bands}
        return {"kind": PATCH, "patch_size": self.patch_size, "stats": list(PATCH_STATS)}

    @classmethod
    def from_dict(cls, d):
        if d.get("kind") == SPECTRAL:
            return cls.spectral(int(d.get("bands", 32)))
        if d.get("kind") == PATCH:
            return cls.patch(int(d.get("patch_size", 16)))
        raise InvalidConfig(f"unknown feature kind {d.get('kind')!r}")


def pool_profile(values, bands):
    """DC value followed by ``bands - 1`` equal-width means over bins 1..K."""
    values = np.asarray(values, dtype=np.float64)
    rest = values[1:]
    # bin i of `rest` goes to band floor(i * (bands - 1) / len(rest))
    idx = (np.arange(len(rest)) * (bands - 1)) // len(rest)
    sums = np.bincount(idx, weights=rest, minlength=bands - 1)
    counts = np.bincount(idx, minlength=bands - 1)
    return np.concatenate([[values[0]], sums / counts])


def spectral_features(img, bands=32):
    gray = to_grayscale(img)
    profile = azimuthal_average(dft2_amplitude(gray), "dc")
    return pool_profile(profile.values, bands)


def laplacian_energy_map(gray_patches):
    """Mean squared 4-neighbour Laplacian of each patch, borders clamped per patch.

    ``gray_patches`` has shape ``(..., p, p)``.
    """
    g = np.asarray(gray_patches, dtype=np.float64)
    pad = np.concatenate([g[..., :1, :], g, g[..., -1:, :]], axis=-2)
    pad = np.concatenate([pad[..., :, :1], pad, pad[..., :, -1:]], axis=-1)
    lap = (pad[..., :-2, 1:-1] + pad[..., 2:, 1:-1] + pad[..., 1:-1, :-2]
           + pad[..., 1:-1, 2:] - 4.0 * g)
    return (lap ** 2).mean(axis=(-2, -1))


def patch_stats(img, patch_size=16):
    """Array of shape ``(rows, cols, 3)`` holding [mean, stddev, laplacian_energy]."""
    gray = to_grayscale(img)
    h, w = gray.shape
    rows, cols = h // patch_size, w // patch_size
    patches = gray.reshape(rows, patch_size, cols, patch_size).transpose(0, 2, 1, 3)
    out = np.empty((rows, cols, 3))
    out[..., 0] = patches.mean(axis=(-2, -1))
    out[..., 1] = patches.std(axis=(-2, -1))
    out[..., 2] = laplacian_energy_map(patches)
    return out


def extract_features(img, spec):
    img = np.asarray(img, dtype=np.float64)
    spec.check_shape(img.shape)
    if spec.kind == SPECTRAL:
        return spectral_features(img, spec.bands)
    return patch_stats(img, spec.patch_size).ravel()


def patch_of_feature(spec, shape):
    """Patch index (row-major) owning each feature of a patch feature vector."""
    rows, cols = spec.grid(shape)
    return np.repeat(np.arange(rows * cols), len(PATCH_STATS))


class FeatureExtractor(BaseEstimator, TransformerMixin):
    """Stateless transformer mapping a stack of images to a feature matrix."""

    def __init__(self, kind=SPECTRAL, bands=32, patch_size=16):
        self.kind = kind
        self.bands = bands
        self.patch_size = patch_size

    @property
    def spec(self):
        return FeatureSpec(self.kind, self.bands, self.patch_size)

    def fit(self, X, y=None):
        X = np.asarray(X)
        self.spec.check_shape(X.shape[1:3] if X.ndim == 4 else X.shape)
        return self

    def transform(self, X):
        spec = self.spec
        return np.stack([extract_features(img, spec) for img in X])
