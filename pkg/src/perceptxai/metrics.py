"""Quantitative evaluation of explanations: AUC-IoU and perturbation curves."""
import csv
from dataclasses import dataclass
import math

import numpy as np

from .classify import predict
from .errors import DimensionMismatch, EmptySplit, PerceptError, UnnormalizedHeatmap
from .explain import fill_color
from .image import Heatmap
from .spectrum import image_profile
from .synth import derive_seed, iter_split
from .validation import check_fraction, check_mask

THRESHOLDS = np.arange(1, 101) / 100.0
DEFAULT_KS = (0.0, 0.001, 0.005, 0.01, 0.05, 0.1, 0.2, 0.3, 0.5)


@dataclass
class IoUCurve:
    thresholds: np.ndarray
    ious: np.ndarray
    auc: float


@dataclass
class PerturbationCurve:
    ks: np.ndarray
    acc_topk: np.ndarray
    acc_random: np.ndarray
    seed: int
    fill: str


def _values(hm):
    if isinstance(hm, Heatmap):
        if not hm.normalized:
            raise UnnormalizedHeatmap("auc_iou needs a normalized heatmap")
        return np.asarray(hm.values, dtype=np.float64)
    return np.asarray(hm, dtype=np.float64)


def auc_iou(hm, mask):
    """IoU of ``hm >= t`` with ``mask`` for ``t = 0.01 .. 1.00`` and its mean.

    An empty union scores 0.
    """
    values = _values(hm)
    mask = check_mask(mask, values.shape).astype(bool)
    flat = values.ravel()
    m = mask.ravel()
    # sort once; each threshold then selects a suffix of the sorted values
    order = np.argsort(flat, kind="stable")
    sorted_vals = flat[order]
    in_mask_cum = np.concatenate([[0], np.cumsum(m[order][::-1])])
    mask_total = int(m.sum())
    ious = np.empty(len(THRESHOLDS))
    for i, t in enumerate(THRESHOLDS):
        n_sel = len(flat) - np.searchsorted(sorted_vals, t, side="left")
        inter = int(in_mask_cum[n_sel])
        union = n_sel + mask_total - inter
        ious[i] = inter / union if union else 0.0
    return IoUCurve(THRESHOLDS.copy(), ious, float(ious.mean()))


def n_removed(k, n_pixels):
    # floor(k * n) with slack for decimal fractions such as 0.57 * 100
    return min(n_pixels, int(math.floor(k * n_pixels + 1e-9)))


def topk_indices(hm, k):
    """Row-major indices of the ``floor(k * W * H)`` highest heatmap pixels.

    Ties are broken by ascending pixel index, so the selection for a smaller
    ``k`` is always a prefix of the selection for a larger one.
    """
    values = _values(hm).ravel()
    order = np.argsort(-values, kind="stable")
    return order[: n_removed(k, values.size)]


def _remove(img, idx, fill):
    img = np.asarray(img, dtype=np.float64)
    out = img.copy()
    out.reshape(-1, 3)[idx] = fill_color(img, fill)
    return out


def perturb_topk(img, hm, k, fill="black"):
    k = check_fraction(k)
    if np.shape(img)[:2] != np.shape(_values(hm)):
        raise DimensionMismatch(f"image {np.shape(img)[:2]} vs heatmap {np.shape(_values(hm))}")
    return _remove(img, topk_indices(hm, k), fill)


def perturb_random(img, k, seed, fill="black"):
    k = check_fraction(k)
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 3:
        raise DimensionMismatch(f"expected an (H, W, 3) image, got {img.shape}")
    n = img.shape[0] * img.shape[1]
    idx = np.random.default_rng(seed).permutation(n)[: n_removed(k, n)]
    return _remove(img, idx, fill)


def perturbation_curve(model, manifest, split, method, ks=DEFAULT_KS, seed=0, fill="black",
                       images=None):
    """Accuracy after removing the top-k attributed pixels versus k random pixels.

    ``method(model, img)`` returns a heatmap; it runs once per image. Random
    removal for image ``i`` at grid position ``j`` uses a seed derived from
    ``(seed, i, j)`` only, so results do not depend on evaluation order.
    """
    ks = [check_fraction(k) for k in ks]
    if not ks or ks[0] != 0.0 or any(b < a for a, b in zip(ks, ks[1:])):
        raise PerceptError("ks must be sorted ascending and start at 0")
    pairs = images if images is not None else iter_split(manifest, split)
    hits_topk = np.zeros(len(ks))
    hits_random = np.zeros(len(ks))
    total = 0
    for i, (img, entry) in enumerate(pairs):
        hm = method(model, img)
        for j, k in enumerate(ks):
            label_t, _ = predict(model, perturb_topk(img, hm, k, fill))
            label_r, _ = predict(model, perturb_random(img, k, derive_seed(seed, i, j), fill))
            hits_topk[j] += label_t == entry.label
            hits_random[j] += label_r == entry.label
        total += 1
    if total == 0:
        raise EmptySplit(f"split {split!r} is empty")
    return PerturbationCurve(np.array(ks), hits_topk / total, hits_random / total, seed, fill)


def spectral_shift_report(img, hm, k, seed=0, fill="black", normalization="dc"):
    """Profiles of the image, its top-k removal and its random removal."""
    return (
        image_profile(img, normalization),
        image_profile(perturb_topk(img, hm, k, fill), normalization),
        image_profile(perturb_random(img, k, seed, fill), normalization),
    )


def write_iou_csv(curve, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["threshold", "iou"])
        for t, v in zip(curve.thresholds, curve.ious):
            writer.writerow([f"{t:.2f}", repr(float(v))])
        writer.writerow(["auc", repr(float(curve.auc))])


def write_perturbation_csv(curve, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "acc_topk", "acc_random"])
        for k, a, b in zip(curve.ks, curve.acc_topk, curve.acc_random):
            writer.writerow([repr(float(k)), repr(float(a)), repr(float(b))])


def write_shift_csv(profiles, path):
    orig, topk, rand = profiles
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bin", "orig", "topk", "random"])
        for i, (a, b, c) in enumerate(zip(orig.values, topk.values, rand.values)):
            writer.writerow([i, repr(float(a)), repr(float(b)), repr(float(c))])
