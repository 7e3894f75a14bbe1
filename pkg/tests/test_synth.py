import json
import os

import numpy as np
import pytest

from perceptxai.errors import BadFactor, BadPeriod, CueAbsent, InvalidConfig, SquareTooLarge
from perceptxai.image import load_image, save_image
from perceptxai.synth import (
    SQUARE,
    STRIPES,
    CueSpec,
    DatasetConfig,
    DatasetManifest,
    apply_hf_stripes,
    apply_white_square,
    build_dataset,
    load_entry_image,
    load_entry_masks,
    rebuild_split,
    render_entry,
    split_counts,
)


def test_stripes_constant_image():
    out = apply_hf_stripes(np.full((8, 4, 3), 0.5), 0.9, 2)
    expected = [0.5, 0.5, 0.45, 0.45, 0.5, 0.5, 0.45, 0.45]
    np.testing.assert_allclose(out[:, 0, 0], expected, rtol=0, atol=1e-15)
    assert np.all(out[:, :, :] == out[:, :1, :1])


def test_stripes_identity_factor(rng):
    img = rng.random((10, 6, 3))
    np.testing.assert_array_equal(apply_hf_stripes(img, 1.0, 2), img)


def test_stripes_period_one():
    out = apply_hf_stripes(np.ones((8, 1, 3)), 0.5, 1)
    np.testing.assert_array_equal(out[:, 0, 0], [1, 0.5, 1, 0.5, 1, 0.5, 1, 0.5])


@pytest.mark.parametrize("factor", [0.0, -0.1, 1.5])
def test_stripes_bad_factor(factor):
    with pytest.raises(BadFactor):
        apply_hf_stripes(np.ones((8, 8, 3)), factor, 2)


@pytest.mark.parametrize("period", [0, 5, 2.5])
def test_stripes_bad_period(period):
    with pytest.raises(BadPeriod):
        apply_hf_stripes(np.ones((8, 8, 3)), 0.9, period)


def test_white_square_224():
    img, mask = apply_white_square(np.zeros((224, 224, 3)), 15, seed=7)
    assert mask.sum() == 225
    assert np.all(img[mask == 1] == 1.0)
    assert np.all(img[mask == 0] == 0.0)
    ys, xs = np.nonzero(mask)
    assert ys.max() - ys.min() == 14 and xs.max() - xs.min() == 14


def test_white_square_full_image():
    img, mask = apply_white_square(np.zeros((20, 20, 3)), 20, seed=1)
    assert np.all(img == 1.0) and np.all(mask == 1)


def test_white_square_deterministic():
    a = apply_white_square(np.zeros((64, 64, 3)), 15, seed=99)[1]
    b = apply_white_square(np.zeros((64, 64, 3)), 15, seed=99)[1]
    np.testing.assert_array_equal(a, b)


def test_white_square_too_large():
    with pytest.raises(SquareTooLarge):
        apply_white_square(np.zeros((10, 20, 3)), 11, seed=0)


def test_cue_flags():
    assert CueSpec.stripes().human_perceptible is False
    assert CueSpec.stripes().machine_perceptible is True
    assert CueSpec.white_square().human_perceptible is True
    assert CueSpec.white_square().machine_perceptible is True
    assert CueSpec.from_dict(CueSpec.stripes(0.8, 1).to_dict()) == CueSpec.stripes(0.8, 1)


def test_split_counts():
    assert split_counts(100, (0.7, 0.15, 0.15)) == (70, 15, 15)


def test_build_counts_and_masks(small_dataset):
    m = small_dataset
    assert len(m.entries) == 40
    c1 = [e for e in m.entries if e.label == 1]
    c0 = [e for e in m.entries if e.label == 0]
    assert len(c1) == len(c0) == 20
    assert all(e.hsf_mask and e.ws_mask for e in c1)
    assert all(e.hsf_mask is None and e.ws_mask is None for e in c0)
    for e in c1:
        hsf, ws = load_entry_masks(m, e)
        assert not np.any(hsf & ws)
        assert np.all(hsf | ws)
        assert ws.sum() == 225


def test_build_split_balance(tmp_path):
    m = build_dataset(DatasetConfig(width=32, height=32, count=100, cues=[CueSpec.white_square(5)]), tmp_path)
    for split, n in (("train", 140), ("val", 30), ("test", 30)):
        labels = m.labels(split)
        assert len(labels) == n
        assert labels.sum() == n // 2


def test_square_is_pure_white_after_stripes(small_dataset):
    m = small_dataset
    for e in m.entries[:5]:
        img = load_entry_image(m, e)
        ws = load_entry_masks(m, e)[1].astype(bool)
        assert np.all(img[ws] == 1.0)


def test_class1_is_class0_pipeline_plus_cues():
    cfg = DatasetConfig(width=32, height=32, count=10, seed=5)
    img, mask, seed = render_entry(cfg, 1, 3)
    plain, _, _ = render_entry(cfg, 1, 3, neutralize=(STRIPES, SQUARE))
    # outside the square the only change is the row modulation
    rows = (np.arange(32) % 4) >= 2
    outside = mask == 0
    ratio_rows = np.where(rows[:, None], 0.9, 1.0)
    np.testing.assert_allclose(img[outside], np.round(plain * ratio_rows[:, :, None] * 255)[outside] / 255,
                               atol=1 / 255 + 1e-12)


def test_manifest_json_schema(small_dataset):
    with open(os.path.join(small_dataset.root, "manifest.json")) as fh:
        d = json.load(fh)
    for key in ("root", "cues", "split", "entries"):
        assert key in d
    assert set(d["cues"][0]) == {"kind", "params", "human_perceptible", "machine_perceptible"}
    assert {"image", "label", "seed", "hsf_mask", "ws_mask"} <= set(d["entries"][0])
    assert abs(sum(d["split"]) - 1) < 1e-12


def test_manifest_load_roundtrip(small_dataset):
    loaded = DatasetManifest.load(small_dataset.root)
    assert loaded.entries == small_dataset.entries
    assert os.path.samefile(loaded.root, small_dataset.root)


def test_build_deterministic(tmp_path):
    cfg = DatasetConfig(width=32, height=32, count=10, seed=11)
    build_dataset(cfg, tmp_path / "a")
    build_dataset(cfg, tmp_path / "b", jobs=2)
    for dirpath, _, files in os.walk(tmp_path / "a"):
        for f in files:
            pa = os.path.join(dirpath, f)
            pb = os.path.join(tmp_path / "b", os.path.relpath(pa, tmp_path / "a"))
            with open(pa, "rb") as fa, open(pb, "rb") as fb:
                assert fa.read() == fb.read(), f


def test_build_invalid_count(tmp_path):
    with pytest.raises(InvalidConfig):
        build_dataset(DatasetConfig(count=5), tmp_path)


def test_build_invalid_split(tmp_path):
    with pytest.raises(InvalidConfig):
        build_dataset(DatasetConfig(count=10, width=32, height=32, split=(0.5, 0.5, 0.5)), tmp_path)


def test_rebuild_matches_saved(small_dataset):
    for img, e in rebuild_split(small_dataset, "test"):
        np.testing.assert_array_equal(img, load_entry_image(small_dataset, e))


def test_rebuild_neutralized_square(small_dataset):
    for img, e in rebuild_split(small_dataset, "test", neutralize=(SQUARE,)):
        if e.label == 1:
            ws = load_entry_masks(small_dataset, e)[1].astype(bool)
            assert not np.all(img[ws] == 1.0)
        else:
            np.testing.assert_array_equal(img, load_entry_image(small_dataset, e))


def test_rebuild_cue_absent(tmp_path):
    m = build_dataset(DatasetConfig(width=32, height=32, count=10, cues=[CueSpec.white_square()]), tmp_path)
    with pytest.raises(CueAbsent):
        list(rebuild_split(m, "test", neutralize=(STRIPES,)))


def test_base_dir(tmp_path, rng):
    base = tmp_path / "bases"
    base.mkdir()
    for i in range(3):
        save_image(rng.random((32, 32, 3)), base / f"b{i}.png")
    cfg = DatasetConfig(width=32, height=32, count=10, base_dir=str(base))
    img, mask, _ = render_entry(cfg, 0, 1)
    # class 0, index 1 takes file (2 * 1 + 1) % 3 = 0
    np.testing.assert_array_equal(img, load_image(base / "b0.png"))
