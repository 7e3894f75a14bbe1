"""End-to-end controlled experiment: stages, config handling and the run manifest.

Output layout under the run directory::

    data/raw/          dataset as generated (manifest.json, images/, masks/)
    data/filtered/     the same dataset after the preprocessing filter
    spectrum/          per-image profiles and the class-separation report
    models/            one JSON model per configured model
    eval/              accuracy and cue-reliance tables
    explain/<model>/   heatmap PNGs and per-patch CSVs
    heatmap_eval/      AUC-IoU curves and the per-model summary table
    perturb/           perturbation curves and spectral shift profiles
    report/            summary.json and SVG figures
    run_manifest.json  resolved config, seeds and a hash of every artifact
"""
import copy
import csv
import hashlib
import json
import os
import shutil

import jsonschema
import numpy as np
from joblib import Parallel, delayed

from . import __version__
from .classify import DEFAULT_HYPER, Model, accuracy_of, measure_cue_reliance, train
from .errors import ConfigInvalid, EmptySplit, StageDependencyMissing
from .explain import heatmap_method, write_patch_csv
from .features import FeatureSpec
from .filters import FilterParams, apply_filter
from .image import Heatmap, load_image, save_image
from .metrics import (
    DEFAULT_KS,
    auc_iou,
    perturbation_curve,
    spectral_shift_report,
    write_iou_csv,
    write_perturbation_csv,
    write_shift_csv,
)
from .spectrum import (
    TOP_QUARTILE,
    SpectrumProfile,
    band_energy,
    class_separation,
    image_profile,
    write_profile_matrix_csv,
    write_separation_csv,
)
from .synth import CueSpec, DatasetConfig, DatasetManifest, build_dataset, derive_seed, iter_split, load_entry_masks

STAGES = ("synth", "filter", "spectrum", "train", "eval", "explain", "heatmap-eval", "perturb", "report")
QUARTILE_BANDS = [[0.0, 0.25], [0.25, 0.5], [0.5, 0.75], [0.75, 1.0]]

DEFAULT_CONFIG = {
    "seed": 0,
    "dataset": {
        "width": 128,
        "height": 128,
        "count": 1000,
        "split": [0.7, 0.15, 0.15],
        "cues": [CueSpec.stripes().to_dict(), CueSpec.white_square().to_dict()],
        "base_dir": None,
    },
    "filter": {"sigma_spatial": 3.0, "sigma_range": 0.1, "radius": 9, "mode": "bilateral",
               "train_only": False},
    "spectrum": {"count": 100, "bands": QUARTILE_BANDS},
    "train": {"epochs": 500, "learning_rate": 0.5, "l2": 1e-4},
    "models": {
        "vanilla": {"features": {"kind": "spectral", "bands": 32}, "data": "raw", "heatmap": "occlusion"},
        "filtered": {"features": {"kind": "patch", "patch_size": 16}, "data": "filtered",
                     "heatmap": "contribution"},
    },
    "explain": {"split": "test", "patch_size": 16, "fill": "mean"},
    "perturb": {"split": "test", "ks": list(DEFAULT_KS), "fill": "black", "shift_k": 0.2},
}

_POS_INT = {"type": "integer", "minimum": 1}
_FRACTION = {"type": "number", "minimum": 0, "maximum": 1}
_SPLIT = {"enum": ["train", "val", "test"]}
_FILL = {"enum": ["mean", "black", "gray"]}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "seed": {"type": "integer", "minimum": 0},
        "dataset": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "width": {"type": "integer", "minimum": 32},
                "height": {"type": "integer", "minimum": 32},
                "count": {"type": "integer", "minimum": 10},
                "split": {"type": "array", "items": _FRACTION, "minItems": 3, "maxItems": 3},
                "cues": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "required": ["kind"],
                        "additionalProperties": False,
                        "properties": {
                            "kind": {"enum": ["HighFreqStripes", "WhiteSquare"]},
                            "params": {"type": "object"},
                            "human_perceptible": {"type": "boolean"},
                            "machine_perceptible": {"type": "boolean"},
                        },
                    },
                },
                "base_dir": {"type": ["string", "null"]},
            },
        },
        "filter": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "sigma_spatial": {"type": "number", "exclusiveMinimum": 0},
                "sigma_range": {"type": "number", "exclusiveMinimum": 0},
                "radius": {"type": ["integer", "null"], "minimum": 0},
                "mode": {"enum": ["bilateral", "gaussian"]},
                "train_only": {"type": "boolean"},
            },
        },
        "spectrum": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "count": _POS_INT,
                "bands": {"type": "array", "minItems": 1,
                          "items": {"type": "array", "items": _FRACTION, "minItems": 2, "maxItems": 2}},
            },
        },
        "train": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"epochs": _POS_INT, "learning_rate": {"type": "number", "exclusiveMinimum": 0},
                           "l2": {"type": "number", "minimum": 0}},
        },
        "models": {
            "type": "object",
            "minProperties": 1,
            "propertyNames": {"pattern": "^[A-Za-z0-9_-]+$"},
            "additionalProperties": {
                "type": "object",
                "required": ["features", "data"],
                "additionalProperties": False,
                "properties": {
                    "features": {
                        "type": "object",
                        "required": ["kind"],
                        "properties": {"kind": {"enum": ["spectral", "patch"]}, "bands": _POS_INT,
                                       "patch_size": _POS_INT, "stats": {"type": "array"}},
                    },
                    "data": {"enum": ["raw", "filtered"]},
                    "heatmap": {"enum": ["occlusion", "contribution"]},
                },
            },
        },
        "explain": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"split": _SPLIT, "patch_size": _POS_INT, "fill": _FILL},
        },
        "perturb": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"split": _SPLIT, "ks": {"type": "array", "items": _FRACTION, "minItems": 1},
                           "fill": _FILL, "shift_k": _FRACTION},
        },
    },
}


def _merge(base, override):
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict) and key != "models":
            out[key] = _merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def _pointer(path):
    parts = [str(p).replace("~", "~0").replace("/", "~1") for p in path]
    return "/" + "/".join(parts) if parts else ""


def resolve_config(user=None, seed_override=None):
    """Validate a user config and fill in defaults.

    Raises :class:`ConfigInvalid` carrying a JSON pointer to the first bad field.
    """
    user = {} if user is None else user
    if not isinstance(user, dict):
        raise ConfigInvalid("config must be a JSON object", "")
    try:
        jsonschema.validate(user, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigInvalid(exc.message, _pointer(exc.absolute_path)) from None
    cfg = _merge(DEFAULT_CONFIG, user)
    if seed_override is not None:
        cfg["seed"] = int(seed_override)

    ds = cfg["dataset"]
    if abs(sum(ds["split"]) - 1.0) > 1e-9:
        raise ConfigInvalid("split fractions must sum to 1", "/dataset/split")
    try:
        dataset_config(cfg).validate()
    except ValueError as exc:
        raise ConfigInvalid(str(exc), "/dataset") from None
    try:
        filter_params(cfg).validate((ds["height"], ds["width"]))
    except ValueError as exc:
        raise ConfigInvalid(str(exc), "/filter") from None
    for name, m in cfg["models"].items():
        try:
            FeatureSpec.from_dict(m["features"]).check_shape((ds["height"], ds["width"]))
        except ValueError as exc:
            raise ConfigInvalid(str(exc), f"/models/{name}/features") from None
        if m.get("heatmap") == "contribution" and m["features"]["kind"] != "patch":
            raise ConfigInvalid("contribution heatmaps need patch features", f"/models/{name}/heatmap")
    p = cfg["explain"]["patch_size"]
    if ds["height"] % p or ds["width"] % p:
        raise ConfigInvalid(f"patch size {p} does not divide the image size", "/explain/patch_size")
    ks = cfg["perturb"]["ks"]
    if ks[0] != 0 or any(b < a for a, b in zip(ks, ks[1:])):
        raise ConfigInvalid("ks must be sorted ascending and start at 0", "/perturb/ks")
    for i, (lo, hi) in enumerate(cfg["spectrum"]["bands"]):
        if not lo < hi:
            raise ConfigInvalid("band needs lo < hi", f"/spectrum/bands/{i}")
    return cfg


def load_config(path, seed_override=None):
    if path is None:
        return resolve_config({}, seed_override)
    try:
        with open(path) as fh:
            user = json.load(fh)
    except OSError as exc:
        raise ConfigInvalid(f"cannot read config {path}: {exc}", "") from None
    except json.JSONDecodeError as exc:
        raise ConfigInvalid(f"config is not valid JSON: {exc}", "") from None
    return resolve_config(user, seed_override)


def dataset_config(cfg):
    d = dict(cfg["dataset"])
    d["seed"] = cfg["seed"]
    return DatasetConfig.from_dict(d)


def filter_params(cfg):
    f = {k: v for k, v in cfg["filter"].items() if k != "train_only"}
    return FilterParams(**f)


def model_spec(cfg, name):
    return FeatureSpec.from_dict(cfg["models"][name]["features"])


def eval_data(cfg, name):
    """Data variant a model is evaluated and explained on.

    With ``filter.train_only`` a model trained on filtered data still sees raw
    images at inference time.
    """
    data = cfg["models"][name]["data"]
    if data == "filtered" and cfg["filter"]["train_only"]:
        return "raw"
    return data


def default_heatmap(cfg, name):
    m = cfg["models"][name]
    return m.get("heatmap") or ("contribution" if m["features"]["kind"] == "patch" else "occlusion")


# ----------------------------------------------------------------------------
# artifacts and the run manifest


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _tree_hashes(out, rel_dirs):
    hashes = {}
    for rel in rel_dirs:
        top = os.path.join(out, rel)
        if os.path.isfile(top):
            hashes[rel] = sha256_file(top)
            continue
        for dirpath, _, files in os.walk(top):
            for f in files:
                full = os.path.join(dirpath, f)
                hashes[os.path.relpath(full, out).replace(os.sep, "/")] = sha256_file(full)
    return dict(sorted(hashes.items()))


def _write_json(obj, path):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _read_json(path):
    with open(path) as fh:
        return json.load(fh)


def record_stage(out, cfg, stage, rel_dirs, seeds=None):
    """Merge one stage's artifacts and seeds into ``run_manifest.json``."""
    path = os.path.join(out, "run_manifest.json")
    run = _read_json(path) if os.path.exists(path) else {}
    run["tool"] = "perceptxai"
    run["version"] = __version__
    run["config"] = cfg
    stages = run.setdefault("stages", {})
    stages[stage] = {"artifacts": _tree_hashes(out, rel_dirs), "seeds": seeds or {"seed": cfg["seed"]}}
    _write_json(run, path)
    return run


def _data_dir(out, variant):
    return os.path.join(out, "data", variant)


def require_manifest(out, variant):
    path = os.path.join(_data_dir(out, variant), "manifest.json")
    if not os.path.exists(path):
        stage = "synth" if variant == "raw" else "filter"
        raise StageDependencyMissing(f"{variant} dataset not found at {path}; run `{stage}` first")
    return DatasetManifest.load(path)


def require_model(out, name):
    path = os.path.join(out, "models", f"{name}.json")
    if not os.path.exists(path):
        raise StageDependencyMissing(f"model {name!r} not found at {path}; run `train` first")
    return Model.load(path)


def _require_file(path, stage):
    if not os.path.exists(path):
        raise StageDependencyMissing(f"{path} not found; run `{stage}` first")
    return path


def _csv_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _fmt(v):
    return repr(float(v)) if isinstance(v, (float, np.floating)) else v


# ----------------------------------------------------------------------------
# stages


def stage_synth(cfg, out, jobs=1):
    root = _data_dir(out, "raw")
    if os.path.isdir(root):
        shutil.rmtree(root)
    build_dataset(dataset_config(cfg), root, jobs=jobs)
    return record_stage(out, cfg, "synth", ["data/raw"])


def _filter_one(src, dst, params):
    save_image(apply_filter(load_image(src), params), dst)


def filter_manifest(manifest, params, root, jobs=1):
    """Filter every image of ``manifest`` into ``root`` with a parallel manifest.

    Masks are copied unchanged; the new manifest records ``params`` as its
    preprocessing so cue-free rebuilds can be filtered the same way.
    """
    for sub in ("images", "masks"):
        os.makedirs(os.path.join(root, sub), exist_ok=True)
    Parallel(n_jobs=jobs)(
        delayed(_filter_one)(manifest.path(e.image), os.path.join(root, e.image), params)
        for e in manifest.entries
    )
    entries = []
    for e in manifest.entries:
        for m in (e.ws_mask, e.hsf_mask):
            if m:
                shutil.copyfile(manifest.path(m), os.path.join(root, m))
        entries.append(copy.copy(e))
    out = DatasetManifest(os.fspath(root), entries, list(manifest.cues), manifest.split, manifest.config,
                          params.to_dict())
    out.save()
    return out


def stage_filter(cfg, out, jobs=1):
    raw = require_manifest(out, "raw")
    root = _data_dir(out, "filtered")
    if os.path.isdir(root):
        shutil.rmtree(root)
    filter_manifest(raw, filter_params(cfg), root, jobs=jobs)
    return record_stage(out, cfg, "filter", ["data/filtered"])


def _first_per_class(manifest, count):
    picked = {0: [], 1: []}
    for e in manifest.entries:
        if len(picked[e.label]) < count:
            picked[e.label].append(e)
    return picked


def spectrum_report(cfg, out):
    """Profiles of the first ``spectrum.count`` images per class, raw and filtered.

    Returns ``{variant: {label: [profiles]}}`` and writes the CSVs.
    """
    d = os.path.join(out, "spectrum")
    os.makedirs(d, exist_ok=True)
    count = cfg["spectrum"]["count"]
    bands = cfg["spectrum"]["bands"]
    profiles = {}
    rows = []
    for variant in ("raw", "filtered"):
        manifest = require_manifest(out, variant)
        picked = _first_per_class(manifest, count)
        profiles[variant] = {}
        names, all_profiles = [], []
        for label in (1, 0):
            profiles[variant][label] = []
            for e in picked[label]:
                p = image_profile(load_image(manifest.path(e.image)))
                profiles[variant][label].append(p)
                names.append(e.image)
                all_profiles.append(p)
        write_profile_matrix_csv(names, all_profiles, os.path.join(d, f"profiles_{variant}.csv"))
        seps = [(lo, hi, class_separation(profiles[variant][1], profiles[variant][0], (lo, hi)))
                for lo, hi in bands]
        write_separation_csv(seps, os.path.join(d, f"separation_{variant}.csv"))
        rows += [(variant, lo, hi, s) for lo, hi, s in seps]
    _write_rows(os.path.join(d, "separation.csv"), ["data", "band_lo", "band_hi", "separation"],
                [[v, lo, hi, _fmt(s)] for v, lo, hi, s in rows])
    return profiles


def stage_spectrum(cfg, out, jobs=1):
    spectrum_report(cfg, out)
    return record_stage(out, cfg, "spectrum", ["spectrum"])


def stage_train(cfg, out, jobs=1):
    d = os.path.join(out, "models")
    os.makedirs(d, exist_ok=True)
    hyper = {**DEFAULT_HYPER, **cfg["train"], "seed": cfg["seed"]}
    for name, m in cfg["models"].items():
        manifest = require_manifest(out, m["data"])
        model = train(manifest, model_spec(cfg, name), hyper)
        model.meta["data"] = m["data"]
        model.save(os.path.join(d, f"{name}.json"))
    return record_stage(out, cfg, "train", ["models"])


def stage_eval(cfg, out, jobs=1):
    d = os.path.join(out, "eval")
    os.makedirs(d, exist_ok=True)
    manifests = {v: require_manifest(out, v) for v in ("raw", "filtered")}
    acc_rows, rel_rows = [], []
    for name in cfg["models"]:
        model = require_model(out, name)
        for variant in ("raw", "filtered"):
            acc = accuracy_of(model, iter_split(manifests[variant], "test"))
            acc_rows.append([name, variant, "test", _fmt(acc)])
        native = manifests[eval_data(cfg, name)]
        for cue in native.config.cues:
            rel_rows.append([name, cue.kind, _fmt(measure_cue_reliance(model, native, cue.kind, "test"))])
    _write_rows(os.path.join(d, "accuracy.csv"), ["model", "data", "split", "accuracy"], acc_rows)
    _write_rows(os.path.join(d, "reliance.csv"), ["model", "cue", "reliance"], rel_rows)
    return record_stage(out, cfg, "eval", ["eval"])


def _method(cfg, name):
    e = cfg["explain"]
    return heatmap_method(default_heatmap(cfg, name), e["patch_size"], e["fill"])


def stage_explain(cfg, out, jobs=1):
    split = cfg["explain"]["split"]
    for name in cfg["models"]:
        model = require_model(out, name)
        manifest = require_manifest(out, eval_data(cfg, name))
        method = _method(cfg, name)
        d = os.path.join(out, "explain", name)
        if os.path.isdir(d):
            shutil.rmtree(d)
        os.makedirs(d)
        p = cfg["explain"]["patch_size"]
        for img, e in iter_split(manifest, split):
            hm = method(model, img)
            stem = os.path.splitext(os.path.basename(e.image))[0]
            save_image(hm, os.path.join(d, f"{stem}.png"))
            per_patch = hm.values[::p, ::p]
            write_patch_csv(per_patch, per_patch, os.path.join(d, f"{stem}.csv"))
    return record_stage(out, cfg, "explain", ["explain"])


def load_patch_heatmap(path, patch_size):
    """Rebuild a full-resolution normalized heatmap from its per-patch CSV."""
    rows = _csv_rows(path)
    n_r = 1 + max(int(r["patch_row"]) for r in rows)
    n_c = 1 + max(int(r["patch_col"]) for r in rows)
    grid = np.zeros((n_r, n_c))
    for r in rows:
        grid[int(r["patch_row"]), int(r["patch_col"])] = float(r["normalized"])
    return Heatmap(np.kron(grid, np.ones((patch_size, patch_size))), normalized=True)


def stage_heatmap_eval(cfg, out, jobs=1):
    split = cfg["explain"]["split"]
    p = cfg["explain"]["patch_size"]
    d = os.path.join(out, "heatmap_eval")
    os.makedirs(d, exist_ok=True)
    table = []
    for name in cfg["models"]:
        manifest = require_manifest(out, eval_data(cfg, name))
        src = os.path.join(out, "explain", name)
        _require_file(src, "explain")
        curves = {"ws": [], "hsf": []}
        for e in manifest.split_entries(split):
            if e.label != 1:
                continue
            stem = os.path.splitext(os.path.basename(e.image))[0]
            hm = load_patch_heatmap(_require_file(os.path.join(src, f"{stem}.csv"), "explain"), p)
            hsf, ws = load_entry_masks(manifest, e)
            curves["ws"].append(auc_iou(hm, ws))
            curves["hsf"].append(auc_iou(hm, hsf))
        if not curves["ws"]:
            raise EmptySplit(f"split {split!r} has no class-1 images to score")
        for mask, cs in curves.items():
            mean_ious = np.mean([c.ious for c in cs], axis=0)
            mean_curve = type(cs[0])(cs[0].thresholds, mean_ious, float(np.mean([c.auc for c in cs])))
            write_iou_csv(mean_curve, os.path.join(d, f"{name}_{mask}.csv"))
            table.append([name, default_heatmap(cfg, name), mask, len(cs), _fmt(mean_curve.auc)])
    _write_rows(os.path.join(d, "auc_iou.csv"), ["model", "method", "mask", "n_images", "mean_auc"], table)
    return record_stage(out, cfg, "heatmap-eval", ["heatmap_eval"])


def _relative_change(a, b):
    return abs(b - a) / a if a else float("inf") if b != a else 0.0


def stage_perturb(cfg, out, jobs=1):
    pc = cfg["perturb"]
    d = os.path.join(out, "perturb")
    os.makedirs(d, exist_ok=True)
    seed = cfg["seed"]
    summary_rows = []
    for name in cfg["models"]:
        model = require_model(out, name)
        manifest = require_manifest(out, eval_data(cfg, name))
        method = _method(cfg, name)
        pairs = list(iter_split(manifest, pc["split"]))
        curve = perturbation_curve(model, manifest, pc["split"], method, pc["ks"], seed, pc["fill"], images=pairs)
        write_perturbation_csv(curve, os.path.join(d, f"{name}_curve.csv"))

        # spectral shift over the class-1 images of the split, averaged per bin
        shifts, changes = [], []
        for i, (img, e) in enumerate(pairs):
            if e.label != 1:
                continue
            profs = spectral_shift_report(img, method(model, img), pc["shift_k"],
                                          seed=derive_seed(seed, i), fill=pc["fill"])
            shifts.append([p.values for p in profs])
            e0, et, er = (band_energy(p, TOP_QUARTILE) for p in profs)
            changes.append((_relative_change(e0, et), _relative_change(e0, er)))
        mean = np.mean(shifts, axis=0)
        write_shift_csv([SpectrumProfile(v) for v in mean], os.path.join(d, f"{name}_shift.csv"))
        ch = np.mean(changes, axis=0)
        summary_rows.append([name, pc["shift_k"], _fmt(ch[0]), _fmt(ch[1])])
    _write_rows(os.path.join(d, "shift_summary.csv"),
                ["model", "k", "topk_top_quartile_change", "random_top_quartile_change"], summary_rows)
    return record_stage(out, cfg, "perturb", ["perturb"])


def collect_summary(cfg, out):
    """Gather every stage's CSV outputs into one dictionary."""
    summary = {"config": cfg}
    path = os.path.join(out, "spectrum", "separation.csv")
    if os.path.exists(path):
        summary["separation"] = [{"data": r["data"], "band": [float(r["band_lo"]), float(r["band_hi"])],
                                  "separation": float(r["separation"])} for r in _csv_rows(path)]
    path = os.path.join(out, "eval", "accuracy.csv")
    if os.path.exists(path):
        summary["accuracy"] = {f"{r['model']}@{r['data']}": float(r["accuracy"]) for r in _csv_rows(path)}
    path = os.path.join(out, "eval", "reliance.csv")
    if os.path.exists(path):
        summary["reliance"] = {f"{r['model']}/{r['cue']}": float(r["reliance"]) for r in _csv_rows(path)}
    path = os.path.join(out, "heatmap_eval", "auc_iou.csv")
    if os.path.exists(path):
        summary["auc_iou"] = {f"{r['model']}/{r['mask']}": float(r["mean_auc"]) for r in _csv_rows(path)}
    curves = {}
    for name in cfg["models"]:
        path = os.path.join(out, "perturb", f"{name}_curve.csv")
        if os.path.exists(path):
            rows = _csv_rows(path)
            curves[name] = {k: [float(r[k]) for r in rows] for k in ("k", "acc_topk", "acc_random")}
    if curves:
        summary["perturbation"] = curves
    path = os.path.join(out, "perturb", "shift_summary.csv")
    if os.path.exists(path):
        summary["spectral_shift"] = {r["model"]: {"k": float(r["k"]),
                                                  "topk": float(r["topk_top_quartile_change"]),
                                                  "random": float(r["random_top_quartile_change"])}
                                     for r in _csv_rows(path)}
    return summary


def stage_report(cfg, out, jobs=1):
    from .plots import plot_perturbation, plot_profiles

    d = os.path.join(out, "report")
    os.makedirs(d, exist_ok=True)
    summary = collect_summary(cfg, out)
    if len(summary) == 1:
        raise StageDependencyMissing("nothing to report; run the earlier stages first")
    _write_json(summary, os.path.join(d, "summary.json"))
    for variant in ("raw", "filtered"):
        path = os.path.join(out, "spectrum", f"profiles_{variant}.csv")
        if os.path.exists(path):
            plot_profiles(path, os.path.join(d, f"spectrum_{variant}.svg"), title=f"{variant} images")
    for name, curve in summary.get("perturbation", {}).items():
        plot_perturbation(curve, os.path.join(d, f"perturb_{name}.svg"), title=name)
    return record_stage(out, cfg, "report", ["report"])


STAGE_FUNCS = {
    "synth": stage_synth,
    "filter": stage_filter,
    "spectrum": stage_spectrum,
    "train": stage_train,
    "eval": stage_eval,
    "explain": stage_explain,
    "heatmap-eval": stage_heatmap_eval,
    "perturb": stage_perturb,
    "report": stage_report,
}


def run_stage(stage, cfg, out, jobs=1):
    os.makedirs(out, exist_ok=True)
    return STAGE_FUNCS[stage](cfg, out, jobs=jobs)


def run_all(cfg, out, jobs=1, stages=STAGES):
    for stage in stages:
        run_stage(stage, cfg, out, jobs)
    return _read_json(os.path.join(out, "run_manifest.json"))
