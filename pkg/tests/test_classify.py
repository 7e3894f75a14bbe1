import json

import numpy as np
import pytest
from sklearn.base import clone

from perceptxai.classify import (
    LogisticGD,
    Model,
    evaluate,
    log_loss,
    measure_cue_reliance,
    predict,
    sigmoid,
    split_features,
    train,
)
from perceptxai.errors import CueAbsent, EmptyClass, EmptySplit, IncompatibleSpec, NonFiniteLoss
from perceptxai.features import FeatureSpec
from perceptxai.synth import STRIPES, SQUARE, CueSpec, DatasetConfig, DatasetManifest, build_dataset, iter_split


def test_sigmoid_stable():
    z = np.array([-1000.0, -1.0, 0.0, 1.0, 1000.0])
    s = sigmoid(z)
    assert np.all(np.isfinite(s))
    assert s[2] == 0.5 and s[0] == 0.0 and s[4] == 1.0
    np.testing.assert_allclose(s + sigmoid(-z), 1.0)


def test_log_loss_zero_logits():
    assert log_loss(np.zeros(4), np.array([0, 1, 0, 1])) == pytest.approx(np.log(2))


def test_separable_1d():
    x = np.linspace(-2, 2, 40)
    x = x[x != 0]
    y = (x > 0).astype(int)
    est = LogisticGD().fit(x[:, None], y)
    assert est.score(x[:, None], y) == 1.0


def test_zero_features():
    X = np.zeros((20, 3))
    y = np.r_[np.ones(10), np.zeros(10)]
    est = LogisticGD().fit(X, y)
    np.testing.assert_array_equal(est.coef_, 0.0)
    assert list(est.dropped_) == [0, 1, 2]
    assert est.intercept_ == pytest.approx(0.0, abs=1e-12)
    assert est.score(X, y) == 0.5


def test_zscore_statistics(rng):
    X = rng.normal(3.0, 2.0, size=(50, 4))
    X[:, 2] = 5.0
    y = (X[:, 0] > 3).astype(int)
    est = LogisticGD(epochs=10).fit(X, y)
    Z = est.zscore(X)
    keep = [0, 1, 3]
    assert np.all(np.abs(Z[:, keep].mean(axis=0)) < 1e-6)
    assert np.all(np.abs(Z[:, keep].std(axis=0) - 1) < 1e-6)
    assert list(est.dropped_) == [2]
    assert est.coef_[2] == 0.0


def test_loss_non_increasing(rng):
    X = rng.normal(size=(80, 5))
    y = (X @ np.array([1.0, -2.0, 0.5, 0.0, 0.3]) + 0.3 * rng.normal(size=80) > 0).astype(int)
    hist = LogisticGD().fit(X, y).loss_history_
    assert len(hist) == 501
    assert np.all(np.diff(hist) <= 1e-12)


def test_deterministic(rng):
    X = rng.normal(size=(30, 3))
    y = (X[:, 0] > 0).astype(int)
    a, b = LogisticGD().fit(X, y), LogisticGD().fit(X, y)
    np.testing.assert_array_equal(a.coef_, b.coef_)
    assert a.intercept_ == b.intercept_


def test_empty_class():
    with pytest.raises(EmptyClass):
        LogisticGD().fit(np.zeros((5, 2)), np.array([1, 1, 1, 1, 0]))


def test_divergence_detected(rng):
    X = rng.normal(size=(20, 2))
    y = (X[:, 0] > 0).astype(int)
    with pytest.raises(NonFiniteLoss):
        LogisticGD(learning_rate=1e308, epochs=5).fit(X, y)


def test_sklearn_api(rng):
    est = LogisticGD(epochs=50, l2=0.01)
    assert est.get_params() == {"epochs": 50, "learning_rate": 0.5, "l2": 0.01}
    X = rng.normal(size=(20, 2))
    y = (X[:, 1] > 0).astype(int)
    c = clone(est).fit(X, y)
    proba = c.predict_proba(X)
    np.testing.assert_allclose(proba.sum(axis=1), 1.0)
    np.testing.assert_array_equal(c.predict(X), (proba[:, 1] >= 0.5).astype(int))


def test_zero_model_ties_to_one():
    spec = FeatureSpec.patch(16)
    m = Model.zeros(spec, (32, 32))
    label, score = predict(m, np.random.default_rng(0).random((32, 32, 3)))
    assert score == 0.5 and label == 1


def test_negated_model(rng):
    spec = FeatureSpec.patch(16)
    m = Model(spec, rng.normal(size=12), 0.3, rng.random(12), rng.random(12) + 0.5)
    img = rng.random((32, 32, 3))
    s = predict(m, img)[1]
    assert predict(m.negated(), img)[1] == pytest.approx(1 - s, abs=1e-15)


def test_predict_depends_only_on_z(rng):
    spec = FeatureSpec.patch(16)
    m = Model(spec, rng.normal(size=12), -0.1, rng.random(12), rng.random(12) + 0.5)
    img = rng.random((32, 32, 3))
    x = m.features(img)
    assert m.logit(img) == m.logit_of_features(x)
    assert m.logit(img) == pytest.approx(float(((x - m.norm_mean) / m.norm_std) @ m.weights) - 0.1)


def test_incompatible_image():
    m = Model.zeros(FeatureSpec.patch(16), (32, 32))
    with pytest.raises(IncompatibleSpec):
        predict(m, np.zeros((48, 48, 3)))


def test_train_and_serialize(small_dataset, tmp_path):
    m = train(small_dataset, FeatureSpec.spectral(8))
    assert m.meta["epochs"] == 500 and m.meta["seed"] == 0
    assert np.isfinite(m.meta["final_train_loss"])
    path = tmp_path / "m.json"
    m.save(path)
    d = json.loads(path.read_text())
    assert set(d) == {"spec", "weights", "bias", "norm_mean", "norm_std", "dropped_features", "meta"}
    again = Model.load(path)
    np.testing.assert_array_equal(again.weights, m.weights)
    m2 = train(small_dataset, FeatureSpec.spectral(8))
    m2.save(tmp_path / "m2.json")
    assert path.read_bytes() == (tmp_path / "m2.json").read_bytes()


def test_train_uses_train_split_only(small_dataset):
    X, y = split_features(small_dataset, "train", FeatureSpec.spectral(8))
    m = train(small_dataset, FeatureSpec.spectral(8))
    keep = m.norm_std != 1.0
    np.testing.assert_allclose(m.norm_mean[keep], X.mean(axis=0)[keep])


def test_training_scores_high(small_dataset):
    m = train(small_dataset, FeatureSpec.spectral(16))
    scores = [predict(m, img)[1] for img, e in iter_split(small_dataset, "train") if e.label == 1]
    assert np.mean(np.array(scores) > 0.9) >= 0.95


def test_evaluate_constant_model_and_empty_split(small_dataset):
    spec = FeatureSpec.patch(16)
    zero = Model.zeros(spec, (32, 32))
    assert evaluate(zero, small_dataset, "test") == 0.5
    with pytest.raises(EmptySplit):
        evaluate(zero, DatasetManifest(small_dataset.root, [], [], (1, 0, 0)), "test")


def test_zero_model_reliance(small_dataset):
    zero = Model.zeros(FeatureSpec.patch(16), (32, 32))
    assert measure_cue_reliance(zero, small_dataset, STRIPES) == 0.0
    assert measure_cue_reliance(zero, small_dataset, SQUARE) == 0.0


def test_reliance_cue_absent(tmp_path):
    m = build_dataset(DatasetConfig(width=32, height=32, count=10, cues=[CueSpec.white_square()]), tmp_path)
    with pytest.raises(CueAbsent):
        measure_cue_reliance(Model.zeros(FeatureSpec.patch(16), (32, 32)), m, STRIPES)
