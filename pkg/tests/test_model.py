import json
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pprfraud.model import (
    DimensionMismatch,
    EmptyMatrix,
    LogisticModel,
    ScalerStats,
    SingleClassTraining,
    TrainParams,
    apply_scaler,
    feature_importance,
    fit,
    fit_scaler,
    load_model,
    loss_and_grad,
    predict_proba,
    save_model,
    sigmoid,
    train,
)

from oracles import finite_difference_grad, reference_loss


def model_with(weights, names=None, intercept=0.0):
    w = np.asarray(weights, dtype=float)
    d = len(w)
    return LogisticModel(tuple(names or [f"x{i}" for i in range(d)]), w, intercept, ScalerStats(np.zeros(d), np.ones(d)), TrainParams())


def test_scaler_two_values():
    s = fit_scaler(np.array([[0.0], [2.0]]))
    np.testing.assert_allclose(apply_scaler(np.array([[0.0], [2.0]]), s).ravel(), [-1.0, 1.0])


def test_scaler_constant_column_maps_to_zero():
    X = np.c_[np.full(5, 3.0), np.arange(5.0)]
    Z = apply_scaler(X, fit_scaler(X))
    assert np.all(Z[:, 0] == 0.0)
    assert abs(Z[:, 1].mean()) < 1e-9 and Z[:, 1].std() == pytest.approx(1.0)


def test_scaler_rejects_empty():
    with pytest.raises(EmptyMatrix):
        fit_scaler(np.zeros((0, 3)))


def test_separable_pair_is_learned():
    m = fit(np.array([[0.0], [1.0]]), np.array([0, 1]), TrainParams(max_epochs=2000, l2_lambda=0.0))
    assert m.final_loss < 0.01
    p = predict_proba(m, np.array([[0.0], [1.0]]))
    assert p[0] < 0.5 < p[1]


def test_single_class_gives_degenerate_model():
    with pytest.warns(SingleClassTraining):
        m = fit(np.random.default_rng(0).normal(size=(20, 3)), np.zeros(20))
    assert m.degenerate
    assert np.all(m.weights == 0)
    assert np.all(predict_proba(m, np.ones((4, 3))) < 0.5)


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(10, 7))
    y = (rng.random(10) < 0.4).astype(float)
    w, b = rng.normal(size=7), 0.3
    loss, gw, gb = loss_and_grad(w, b, X, y, 1e-3)
    assert loss == pytest.approx(reference_loss(w, b, X, y, 1e-3), rel=1e-12)
    fw, fb = finite_difference_grad(w, b, X, y, 1e-3)
    assert np.max(np.abs(np.r_[gw, gb] - np.r_[fw, fb])) / max(1e-12, np.max(np.abs(np.r_[fw, fb]))) < 1e-6


def test_predictions_at_extremes():
    assert predict_proba(model_with([0.0, 0.0]), np.array([[5.0, -3.0]]))[0] == 0.5
    assert sigmoid(np.array([40.0]))[0] >= 1 - 1e-15
    assert sigmoid(np.array([-800.0]))[0] == 0.0
    assert np.all(np.isfinite(sigmoid(np.array([-1e308, 1e308]))))


@given(st.lists(st.floats(-50, 50), min_size=2, max_size=30))
def test_probability_is_monotone_in_a_positive_feature(xs):
    xs = np.sort(np.array(xs))
    p = predict_proba(model_with([1.5, 0.0]), np.c_[xs, np.zeros_like(xs)])
    assert np.all(np.diff(p) >= 0)
    assert np.all((p >= 0) & (p <= 1))


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        predict_proba(model_with([1.0, 2.0]), np.ones((3, 3)))
    with pytest.raises(DimensionMismatch):
        train(np.ones((3, 2)), np.array([0, 1]))


def test_importance_order():
    ranked = feature_importance(model_with([0.8, -0.7, 0.01], ["a", "b", "c"]))
    assert [n for n, _ in ranked] == ["a", "b", "c"]
    assert ranked[1][1] == pytest.approx(0.7)


@given(st.lists(st.floats(-10, 10), min_size=1, max_size=8), st.randoms(use_true_random=False))
def test_importance_ignores_sign_and_column_order(ws, rnd):
    names = [f"f{i}" for i in range(len(ws))]
    flipped = [w if rnd.random() < 0.5 else -w for w in ws]
    assert feature_importance(model_with(ws, names)) == feature_importance(model_with(flipped, names))
    perm = list(range(len(ws)))
    rnd.shuffle(perm)
    shuffled = model_with([ws[i] for i in perm], [names[i] for i in perm])
    assert feature_importance(shuffled) == feature_importance(model_with(ws, names))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_loss_never_increases(seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(40, 4))
    y = (X[:, 0] + rng.normal(size=40) > 0).astype(float)
    y[:2] = [0, 1]
    m = train(X, y, TrainParams(learning_rate=5.0, max_epochs=100))
    assert np.all(np.diff(m.loss_history) <= 0)


def test_perfect_separator_ranks_first():
    rng = np.random.default_rng(1)
    y = (rng.random(300) < 0.3).astype(float)
    X = np.c_[rng.normal(size=300), y * 2.0 + rng.normal(0, 0.05, 300), rng.normal(size=300)]
    m = fit(X, y, feature_names=["noise_a", "signal", "noise_b"])
    assert feature_importance(m)[0][0] == "signal"


def test_balanced_weighting_raises_minority_scores():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(500, 2))
    y = (X[:, 0] + rng.normal(size=500) > 2.0).astype(float)
    plain = fit(X, y)
    balanced = fit(X, y, TrainParams(class_weighting="balanced"))
    assert predict_proba(balanced, X)[y == 1].mean() > predict_proba(plain, X)[y == 1].mean()


def test_json_round_trip(tmp_path):
    rng = np.random.default_rng(4)
    X = rng.normal(size=(50, 3))
    y = (X[:, 1] > 0).astype(float)
    m = fit(X, y, TrainParams(class_weighting="balanced", max_epochs=20), ["a", "b", "c"])
    path = tmp_path / "m.json"
    save_model(m, path)
    back = load_model(path)
    assert back.feature_names == m.feature_names
    assert back.params == m.params
    assert predict_proba(back, X).tobytes() == predict_proba(m, X).tobytes()
    json.loads(path.read_text())


def test_training_is_silent_on_normal_data():
    X = np.random.default_rng(5).normal(size=(30, 2))
    y = (X[:, 0] > 0).astype(float)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        fit(X, y)


def test_rejects_bad_params_and_labels():
    with pytest.raises(ValueError):
        TrainParams(learning_rate=0)
    with pytest.raises(ValueError):
        train(np.ones((2, 1)), np.array([0, 2]))
