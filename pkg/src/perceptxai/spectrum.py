"""Amplitude spectra and their azimuthally averaged 1-D profiles."""
import csv
from dataclasses import dataclass

import numpy as np

from .errors import BadBand, DimensionTooSmall, EmptyBin, PerceptError
from .image import to_grayscale
from .validation import check_gray

TOP_QUARTILE = (0.75, 1.0)


@dataclass
class SpectrumProfile:
    values: np.ndarray
    normalization: str = "dc"

    def __len__(self):
        return len(self.values)


def dft2_amplitude(gray):
    """Unnormalized 2-D DFT magnitude with DC shifted to ``(h // 2, w // 2)``.

    No window is applied.
    """
    gray = check_gray(gray)
    if min(gray.shape) < 2:
        raise DimensionTooSmall(f"spectrum needs at least 2x2 pixels, got {gray.shape}")
    return np.abs(np.fft.fftshift(np.fft.fft2(gray)))


def radial_bins(shape):
    """Integer ring index ``round(r)`` of every element of a DC-centred grid."""
    h, w = shape
    yy, xx = np.mgrid[0:h, 0:w]
    return np.rint(np.hypot(yy - h // 2, xx - w // 2)).astype(np.int64)


def azimuthal_average(spec, normalization="dc"):
    """Mean amplitude over rings of constant radial frequency.

    Rings beyond ``min(h, w) // 2`` are discarded so every returned bin is a
    fully populated ring. With ``normalization="dc"`` the profile is divided by
    its zero-frequency value.
    """
    if normalization not in ("dc", "none"):
        raise PerceptError(f"unknown normalization {normalization!r}")
    spec = np.asarray(spec, dtype=np.float64)
    last = min(spec.shape) // 2
    bins = radial_bins(spec.shape).ravel()
    keep = bins <= last
    counts = np.bincount(bins[keep], minlength=last + 1)
    if np.any(counts == 0):
        raise EmptyBin("radial bin without elements")
    values = np.bincount(bins[keep], weights=spec.ravel()[keep], minlength=last + 1) / counts
    if normalization == "dc":
        if values[0] > 0:
            values = values / values[0]
        else:
            values = np.zeros_like(values)
    return SpectrumProfile(values, normalization)


def image_profile(img, normalization="dc"):
    """Profile of an RGB or gray image (RGB is converted to luma first)."""
    img = np.asarray(img, dtype=np.float64)
    gray = to_grayscale(img) if img.ndim == 3 else img
    return azimuthal_average(dft2_amplitude(gray), normalization)


def _band_slice(n_bins, band):
    lo, hi = band
    if not 0.0 <= lo < hi <= 1.0:
        raise BadBand(f"band must satisfy 0 <= lo < hi <= 1, got {band}")
    last = n_bins - 1
    idx = np.arange(n_bins)
    # small slack so that e.g. 0.75 * 64 is not lost to rounding
    return (idx >= lo * last - 1e-9) & (idx <= hi * last + 1e-9)


def band_energy(profile, band=TOP_QUARTILE):
    """Mean profile value over bin indices in ``[lo * K, hi * K]``, K = last bin."""
    values = profile.values if isinstance(profile, SpectrumProfile) else np.asarray(profile)
    sel = _band_slice(len(values), band)
    if not sel.any():
        raise BadBand(f"band {band} selects no bins of a {len(values)}-bin profile")
    return float(values[sel].mean())


def class_separation(profiles_a, profiles_b, band=TOP_QUARTILE):
    """Cohen's d between per-image band energies of two groups.

    Returns 0 when both groups are constant and equal and ``inf`` when both are
    constant but different.
    """
    if len(profiles_a) == 0 or len(profiles_b) == 0:
        raise PerceptError("class_separation needs two non-empty groups")
    lengths = {len(p) for p in list(profiles_a) + list(profiles_b)}
    if len(lengths) != 1:
        raise PerceptError(f"profiles differ in length: {sorted(lengths)}")
    ea = np.array([band_energy(p, band) for p in profiles_a])
    eb = np.array([band_energy(p, band) for p in profiles_b])
    diff = abs(ea.mean() - eb.mean())
    dof = len(ea) + len(eb) - 2
    ss = ((ea - ea.mean()) ** 2).sum() + ((eb - eb.mean()) ** 2).sum()
    pooled = np.sqrt(ss / dof) if dof > 0 else 0.0
    if pooled == 0.0:
        return 0.0 if diff == 0.0 else float("inf")
    return float(diff / pooled)


def write_profile_csv(profile, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bin", "value"])
        for i, v in enumerate(profile.values):
            writer.writerow([i, repr(float(v))])


def write_profile_matrix_csv(names, profiles, path):
    n_bins = len(profiles[0]) if profiles else 0
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["image"] + [f"bin{i}" for i in range(n_bins)])
        for name, p in zip(names, profiles):
            writer.writerow([name] + [repr(float(v)) for v in p.values])


def write_separation_csv(rows, path):
    """``rows`` is an iterable of ``(band_lo, band_hi, separation)``."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["band_lo", "band_hi", "separation"])
        for lo, hi, sep in rows:
            writer.writerow([lo, hi, repr(float(sep))])
