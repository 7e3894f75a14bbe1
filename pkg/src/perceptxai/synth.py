"""Two-class datasets with controlled distinguishing cues and ground-truth masks."""
from dataclasses import dataclass, field
import glob
import json
import os

import numpy as np

from .errors import BadFactor, BadPeriod, CueAbsent, EmptySplit, InvalidConfig, IoFailure, SquareTooLarge
from .image import load_image, load_mask, quantize8, save_image, save_mask, synth_base
from .validation import check_image

STRIPES = "HighFreqStripes"
SQUARE = "WhiteSquare"


@dataclass(frozen=True)
class CueSpec:
    """A distinguishing feature and who can perceive it.

    Stripes are machine-only; the white square is perceptible to both.
    """

    kind: str
    params: dict = field(default_factory=dict, hash=False)
    human_perceptible: bool = False
    machine_perceptible: bool = True

    @classmethod
    def stripes(cls, factor=0.9, period_rows=2):
        return cls(STRIPES, {"factor": factor, "period_rows": period_rows}, False, True)

    @classmethod
    def white_square(cls, side=15):
        return cls(SQUARE, {"side": side}, True, True)

    def to_dict(self):
        return {
            "kind": self.kind,
            "params": dict(self.params),
            "human_perceptible": self.human_perceptible,
            "machine_perceptible": self.machine_perceptible,
        }

    @classmethod
    def from_dict(cls, d):
        if d.get("kind") not in (STRIPES, SQUARE):
            raise InvalidConfig(f"unknown cue kind {d.get('kind')!r}")
        return cls(d["kind"], dict(d.get("params", {})),
                   bool(d.get("human_perceptible", d["kind"] == SQUARE)),
                   bool(d.get("machine_perceptible", True)))


def apply_hf_stripes(img, factor=0.9, period_rows=2):
    """Scale every RGB sample by ``factor`` on rows with ``r mod 2p >= p``.

    With the defaults, rows 2, 3, 6, 7, ... are darkened, giving a vertical
    period of four rows.
    """
    img = check_image(img)
    if not 0.0 < factor <= 1.0:
        raise BadFactor(f"factor must be in (0, 1], got {factor}")
    if int(period_rows) != period_rows or not 1 <= period_rows <= img.shape[0] / 2:
        raise BadPeriod(f"period_rows must be an integer in [1, height/2], got {period_rows}")
    rows = np.arange(img.shape[0])
    scaled = (rows % (2 * period_rows)) >= period_rows
    out = img.copy()
    out[scaled] *= factor
    return out


def apply_white_square(img, side=15, seed=0):
    """Paint a pure-white ``side x side`` square at a seeded uniform position.

    Returns the new image and the mask of the square.
    """
    img = check_image(img)
    h, w = img.shape[:2]
    if side < 1 or side > min(h, w):
        raise SquareTooLarge(f"square side {side} does not fit in {w}x{h}")
    rng = np.random.default_rng(seed)
    top = int(rng.integers(0, h - side + 1))
    left = int(rng.integers(0, w - side + 1))
    out = img.copy()
    out[top:top + side, left:left + side] = 1.0
    mask = np.zeros((h, w), dtype=np.uint8)
    mask[top:top + side, left:left + side] = 1
    return out, mask


def default_cues():
    return [CueSpec.stripes(), CueSpec.white_square()]


def derive_seed(*keys):
    """Stable 63-bit seed from a tuple of non-negative integers."""
    state = np.random.SeedSequence([int(k) for k in keys]).generate_state(2, dtype=np.uint32)
    return int((int(state[0]) << 31) ^ int(state[1]))


@dataclass
class DatasetConfig:
    width: int = 128
    height: int = 128
    count: int = 1000
    cues: list = field(default_factory=default_cues)
    seed: int = 0
    split: tuple = (0.7, 0.15, 0.15)
    base_dir: str = None

    def validate(self):
        if self.count < 10:
            raise InvalidConfig(f"count must be >= 10 per class, got {self.count}")
        if self.width < 32 or self.height < 32:
            raise InvalidConfig("width and height must be >= 32")
        if len(self.split) != 3 or any(f < 0 for f in self.split) or abs(sum(self.split) - 1.0) > 1e-9:
            raise InvalidConfig(f"split fractions must be three non-negatives summing to 1, got {self.split}")
        kinds = [c.kind for c in self.cues]
        if len(set(kinds)) != len(kinds):
            raise InvalidConfig("each cue kind may appear at most once")

    def cue(self, kind):
        for c in self.cues:
            if c.kind == kind:
                return c
        return None

    def to_dict(self):
        return {
            "width": self.width,
            "height": self.height,
            "count": self.count,
            "cues": [c.to_dict() for c in self.cues],
            "seed": self.seed,
            "split": list(self.split),
            "base_dir": self.base_dir,
        }

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "cues" in d:
            d["cues"] = [CueSpec.from_dict(c) for c in d["cues"]]
        if "split" in d:
            d["split"] = tuple(d["split"])
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise InvalidConfig(f"unknown dataset fields: {sorted(unknown)}")
        return cls(**d)


@dataclass
class Entry:
    image: str
    label: int
    seed: int
    hsf_mask: str = None
    ws_mask: str = None
    split: str = "train"
    index: int = 0


@dataclass
class DatasetManifest:
    root: str
    entries: list
    cues: list
    split: tuple
    config: DatasetConfig = None
    preprocess: dict = None

    def path(self, rel):
        return os.path.join(self.root, rel)

    def split_entries(self, split):
        if split == "all":
            return list(self.entries)
        return [e for e in self.entries if e.split == split]

    def labels(self, split):
        return np.array([e.label for e in self.split_entries(split)])

    def to_dict(self):
        return {
            # entry paths are relative to the manifest's directory
            "root": ".",
            "cues": [c.to_dict() for c in self.cues],
            "split": list(self.split),
            "entries": [
                {"image": e.image, "label": e.label, "seed": e.seed, "hsf_mask": e.hsf_mask,
                 "ws_mask": e.ws_mask, "split": e.split, "index": e.index}
                for e in self.entries
            ],
            "config": self.config.to_dict() if self.config else None,
            "preprocess": self.preprocess,
        }

    @classmethod
    def from_dict(cls, d, root=None):
        try:
            entries = [Entry(**e) for e in d["entries"]]
            return cls(
                root=root if root is not None else d["root"],
                entries=entries,
                cues=[CueSpec.from_dict(c) for c in d["cues"]],
                split=tuple(d["split"]),
                config=DatasetConfig.from_dict(d["config"]) if d.get("config") else None,
                preprocess=d.get("preprocess"),
            )
        except (KeyError, TypeError) as exc:
            raise InvalidConfig(f"malformed manifest: {exc}") from exc

    def save(self, path=None):
        path = path or os.path.join(self.root, "manifest.json")
        try:
            with open(path, "w") as fh:
                json.dump(self.to_dict(), fh, indent=1)
                fh.write("\n")
        except OSError as exc:
            raise IoFailure(f"cannot write {path}: {exc}") from exc
        return path

    @classmethod
    def load(cls, path):
        if os.path.isdir(path):
            path = os.path.join(path, "manifest.json")
        with open(path) as fh:
            d = json.load(fh)
        # relative entry paths resolve against the manifest's own directory
        return cls.from_dict(d, root=os.path.dirname(os.path.abspath(path)))


def split_counts(n, split):
    n_train = int(round(split[0] * n))
    n_val = int(round(split[1] * n))
    return n_train, n_val, n - n_train - n_val


def _base_files(base_dir):
    files = sorted(glob.glob(os.path.join(base_dir, "*.png")))
    if not files:
        raise InvalidConfig(f"no PNG files in base_dir {base_dir}")
    return files


def render_entry(config, label, index, neutralize=(), base_files=None):
    """Generate one dataset image (quantized to 8 bits) and its square mask.

    ``neutralize`` names cue kinds to leave out; the base image and every seed
    stay the same, so the result differs from the original only by that cue.
    """
    seed = derive_seed(config.seed, label, index)
    if config.base_dir:
        files = base_files or _base_files(config.base_dir)
        img = load_image(files[(2 * index + (1 - label)) % len(files)])
        if img.shape[:2] != (config.height, config.width):
            raise InvalidConfig(f"base image size {img.shape[1]}x{img.shape[0]} differs from config")
    else:
        img = synth_base(seed, config.width, config.height)
    mask = None
    if label == 1:
        stripes = config.cue(STRIPES)
        if stripes is not None:
            factor = 1.0 if STRIPES in neutralize else stripes.params.get("factor", 0.9)
            img = apply_hf_stripes(img, factor, stripes.params.get("period_rows", 2))
        square = config.cue(SQUARE)
        if square is not None:
            side = square.params.get("side", 15)
            placed, mask = apply_white_square(img, side, derive_seed(seed, 1))
            if SQUARE not in neutralize:
                img = placed
    return quantize8(img), mask, seed


def _write_entry(config, root, label, index, base_files, n_train, n_val):
    img, mask, seed = render_entry(config, label, index, base_files=base_files)
    name = f"c{label}_{index:05d}"
    split = "train" if index < n_train else "val" if index < n_train + n_val else "test"
    entry = Entry(image=f"images/{name}.png", label=label, seed=seed, split=split, index=index)
    save_image(img, os.path.join(root, entry.image))
    if mask is not None:
        entry.ws_mask = f"masks/{name}_ws.png"
        entry.hsf_mask = f"masks/{name}_hsf.png"
        save_mask(mask, os.path.join(root, entry.ws_mask))
        save_mask(1 - mask, os.path.join(root, entry.hsf_mask))
    return entry


def build_dataset(config, root, jobs=1):
    """Render the dataset to ``root`` and write ``root/manifest.json``.

    Class 1 gets the configured cues (stripes first, square last); class 0 is
    the base image alone. ``jobs`` only changes how many workers render
    entries, never the output.
    """
    from joblib import Parallel, delayed

    config.validate()
    try:
        os.makedirs(os.path.join(root, "images"), exist_ok=True)
        os.makedirs(os.path.join(root, "masks"), exist_ok=True)
    except OSError as exc:
        raise IoFailure(f"cannot create {root}: {exc}") from exc
    base_files = _base_files(config.base_dir) if config.base_dir else None
    n_train, n_val, _ = split_counts(config.count, config.split)
    tasks = [(label, i) for label in (1, 0) for i in range(config.count)]
    entries = Parallel(n_jobs=jobs)(
        delayed(_write_entry)(config, root, label, i, base_files, n_train, n_val) for label, i in tasks
    )
    manifest = DatasetManifest(root=os.fspath(root), entries=list(entries), cues=list(config.cues),
                               split=tuple(config.split), config=config)
    manifest.save()
    return manifest


def load_entry_image(manifest, entry):
    return load_image(manifest.path(entry.image))


def load_entry_masks(manifest, entry):
    """``(hsf_mask, ws_mask)``; both ``None`` for class-0 entries."""
    if entry.ws_mask is None:
        return None, None
    return load_mask(manifest.path(entry.hsf_mask)), load_mask(manifest.path(entry.ws_mask))


def iter_split(manifest, split):
    entries = manifest.split_entries(split)
    if not entries:
        raise EmptySplit(f"split {split!r} is empty")
    for e in entries:
        yield load_entry_image(manifest, e), e


def rebuild_split(manifest, split, neutralize=()):
    """Regenerate a split in memory with some cues removed.

    The manifest's preprocessing (if any) is applied to the regenerated images
    so they match what a model trained on that manifest expects.
    """
    from .filters import FilterParams, apply_filter

    config = manifest.config
    if config is None:
        raise InvalidConfig("manifest lacks the generation config needed to rebuild images")
    for kind in neutralize:
        if config.cue(kind) is None:
            raise CueAbsent(f"dataset was not built with cue {kind}")
    entries = manifest.split_entries(split)
    if not entries:
        raise EmptySplit(f"split {split!r} is empty")
    params = FilterParams(**manifest.preprocess) if manifest.preprocess else None
    base_files = _base_files(config.base_dir) if config.base_dir else None
    for e in entries:
        img, _, _ = render_entry(config, e.label, e.index, neutralize, base_files)
        if params is not None:
            img = quantize8(apply_filter(img, params))
        yield img, e
