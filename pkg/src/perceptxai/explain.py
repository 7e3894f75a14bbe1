"""Per-pixel attribution heatmaps for a fitted :class:`~perceptxai.classify.Model`."""
import csv

import numpy as np

from .classify import predict
from .errors import BadPatchSize, NotPatchModel
from .features import PATCH, PATCH_STATS
from .image import Heatmap

FILLS = ("mean", "black", "gray")


def fill_color(img, fill):
    """RGB value used to replace removed or occluded pixels."""
    if fill == "mean":
        return np.asarray(img, dtype=np.float64).reshape(-1, 3).mean(axis=0)
    if fill == "black":
        return np.zeros(3)
    if fill == "gray":
        return np.full(3, 0.5)
    raise ValueError(f"fill must be one of {FILLS}, got {fill!r}")


def _check_patch(img, patch_size):
    h, w = np.shape(img)[:2]
    if patch_size < 1 or h % patch_size or w % patch_size:
        raise BadPatchSize(f"patch size {patch_size} does not divide {w}x{h}")
    return h // patch_size, w // patch_size


def _expand(per_patch, patch_size):
    return np.kron(per_patch, np.ones((patch_size, patch_size)))


def occlusion_drops(model, img, patch_size=16, fill="mean"):
    """Logit drop for occluding each patch, shape ``(rows, cols)``.

    Each patch is evaluated independently against the same unoccluded logit.
    """
    img = np.asarray(img, dtype=np.float64)
    rows, cols = _check_patch(img, patch_size)
    color = fill_color(img, fill)
    base = model.logit(img)
    drops = np.empty((rows, cols))
    work = img.copy()
    for r in range(rows):
        for c in range(cols):
            ys, xs = slice(r * patch_size, (r + 1) * patch_size), slice(c * patch_size, (c + 1) * patch_size)
            saved = work[ys, xs].copy()
            work[ys, xs] = color
            drops[r, c] = base - model.logit(work)
            work[ys, xs] = saved
    return drops


def occlusion_heatmap(model, img, patch_size=16, fill="mean"):
    drops = occlusion_drops(model, img, patch_size, fill)
    return Heatmap.from_raw(_expand(np.maximum(drops, 0.0), patch_size))


def patch_contributions(model, img):
    """Per-patch sum of ``w_f * z_f(x)`` over the patch's features, shape ``(rows, cols)``."""
    if model.spec.kind != PATCH:
        raise NotPatchModel("contribution heatmaps need a patch-feature model")
    x = model.features(img)
    terms = model.zscore(x) * model.weights
    rows, cols = model.spec.grid(np.shape(img))
    return terms.reshape(rows * cols, len(PATCH_STATS)).sum(axis=1).reshape(rows, cols)


def contribution_heatmap(model, img):
    """Positive evidence per patch for the predicted class."""
    contrib = patch_contributions(model, img)
    label, _ = predict(model, img)
    if label == 0:
        contrib = -contrib
    return Heatmap.from_raw(_expand(np.maximum(contrib, 0.0), model.spec.patch_size))


def heatmap_method(name, patch_size=16, fill="mean"):
    """Return ``f(model, img) -> Heatmap`` for a method name."""
    if name == "occlusion":
        return lambda model, img: occlusion_heatmap(model, img, patch_size, fill)
    if name == "contribution":
        return lambda model, img: contribution_heatmap(model, img)
    raise ValueError(f"unknown heatmap method {name!r}")


def write_patch_csv(raw, normalized, path):
    """``patch_row,patch_col,raw,normalized`` for each patch."""
    raw = np.asarray(raw)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["patch_row", "patch_col", "raw", "normalized"])
        for (r, c), v in np.ndenumerate(raw):
            writer.writerow([r, c, repr(float(v)), repr(float(normalized[r, c]))])


def overlay(img, heatmap, alpha=0.6):
    """Red overlay of a normalized heatmap on an image, for quick viewing."""
    img = np.asarray(img, dtype=np.float64)
    a = alpha * heatmap.values[:, :, None]
    red = np.zeros_like(img)
    red[..., 0] = 1.0
    return np.clip(img * (1.0 - a) + red * a, 0.0, 1.0)
