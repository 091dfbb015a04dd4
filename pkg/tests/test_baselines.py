import json

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from skelhar.baselines import (
    DimensionMismatchError,
    KnnModel,
    KnnParams,
    LinearSvmModel,
    SingleClassError,
    SvmParams,
    hinge_objective,
    knn_predict,
    knn_predict_many,
    svm_predict,
    svm_predict_many,
    svm_train,
)


def knn_oracle(store, labels, k, x):
    """Exhaustive sort by (distance, index), then vote with ties to the lowest label."""
    d = [float(((s - x) ** 2).sum()) for s in store]
    order = sorted(range(len(store)), key=lambda i: (d[i], i))[:k]
    votes = {}
    for i in order:
        votes[int(labels[i])] = votes.get(int(labels[i]), 0) + 1
    top = max(votes.values())
    return min(lab for lab, c in votes.items() if c == top)


def test_knn_memorizes():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(30, 45))
    y = rng.integers(0, 14, 30)
    model = KnnModel(X, y, 1)
    assert [knn_predict(model, x) for x in X] == y.tolist()


def test_knn_vote_majority_and_tie():
    X = np.array([[0.0], [1.0], [2.0], [3.0]])
    assert knn_predict(KnnModel(X, [0, 0, 1, 1], 3), [0.0]) == 0
    assert knn_predict(KnnModel(X, [5, 2, 9, 9], 2), [0.5]) == 2


def test_knn_matches_sort_oracle():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(500, 45))
    y = rng.integers(0, 4, 500)
    model = KnnModel(X, y, 5)
    Q = rng.normal(size=(50, 45))
    assert knn_predict_many(model, Q).tolist() == [knn_oracle(X, y, 5, q) for q in Q]


@given(arrays(np.float64, 45, elements=st.floats(-1e4, 1e4)))
def test_knn_translation_invariant(shift):
    rng = np.random.default_rng(2)
    X = rng.normal(0, 100, (60, 45))
    y = rng.integers(0, 3, 60)
    Q = rng.normal(0, 100, (10, 45))
    a = knn_predict_many(KnnModel(X, y, 3), Q)
    b = knn_predict_many(KnnModel(X + shift, y, 3), Q + shift)
    assert a.tolist() == b.tolist()


def test_knn_validation():
    with pytest.raises(ValueError):
        KnnModel(np.zeros((2, 3)), [0, 1], 3)
    with pytest.raises(ValueError):
        KnnModel(np.zeros((0, 3)), [], 1)
    with pytest.raises(ValueError):
        KnnParams(k=0)
    with pytest.raises(DimensionMismatchError):
        knn_predict(KnnModel(np.zeros((2, 3)), [0, 1]), [0.0, 0.0])


def test_knn_json_round_trip():
    model = KnnModel(np.arange(6.0).reshape(3, 2), [1, 2, 3], 2)
    back = KnnModel.from_json(json.loads(json.dumps(model.to_json())))
    assert back.k == 2 and back.vectors.tolist() == model.vectors.tolist()


def separable_toy(seed=0):
    rng = np.random.default_rng(seed)
    X = np.concatenate([rng.normal([-3, -3], 0.7, (60, 2)), rng.normal([3, 3], 0.7, (60, 2))])
    y = np.array([4] * 60 + [11] * 60)
    return X, y


def test_svm_separable_toy():
    X, y = separable_toy()
    model = svm_train(X, y, lam=1e-3, epochs=20, seed=0)
    assert (svm_predict_many(model, X) == y).all()
    assert model.classes.tolist() == [4, 11]


def test_svm_objective_trend():
    rng = np.random.default_rng(3)
    X = np.concatenate([rng.normal(c, 1.5, (80, 4)) for c in (-1, 0, 1)])
    y = np.repeat([0, 1, 2], 80)
    model = svm_train(X, y, lam=1e-2, epochs=20, seed=1)
    hist = np.array(model.objective_history)
    assert np.all(hist[1:] <= hist[:-1] * 1.01)


def test_svm_duplicated_data_same_decision():
    X, y = separable_toy(1)
    a = svm_train(X, y, lam=1e-3, epochs=5, seed=2)
    b = svm_train(np.concatenate([X, X]), np.concatenate([y, y]), lam=1e-3, epochs=5, seed=2)
    grid = np.stack(np.meshgrid(np.linspace(-6, 6, 13), np.linspace(-6, 6, 13)), -1).reshape(-1, 2)
    np.testing.assert_allclose(a.decision_function(grid), b.decision_function(grid), atol=1e-6, rtol=0)


def test_svm_deterministic():
    X, y = separable_toy(2)
    a = svm_train(X, y, seed=3, epochs=3)
    b = svm_train(X, y, seed=3, epochs=3)
    assert a.dumps() == b.dumps()


def test_svm_single_class():
    with pytest.raises(SingleClassError):
        svm_train(np.zeros((4, 2)), [1, 1, 1, 1])


def hand_model(W, b):
    W = np.asarray(W, dtype=float)
    return LinearSvmModel(np.arange(len(W)), W, np.asarray(b, dtype=float), np.zeros(W.shape[1]), np.ones(W.shape[1]), 1e-4, 1)


def test_svm_predict_rules():
    m = hand_model([[1.0, 0.0], [-1.0, 0.0]], [0.0, 0.0])
    assert svm_predict(m, [2.0, 0.0]) == 0
    assert svm_predict(m, [-2.0, 0.0]) == 1
    assert svm_predict(m, [0.0, 5.0]) == 0  # on the boundary: first class in canonical order
    with pytest.raises(DimensionMismatchError):
        svm_predict(m, [0.0])


@given(arrays(np.float64, (2, 3), elements=st.floats(-5, 5)), arrays(np.float64, 2, elements=st.floats(-5, 5)), arrays(np.float64, 3, elements=st.floats(-5, 5)))
def test_two_class_prediction_is_sign_of_difference(W, b, x):
    m = hand_model(W, b)
    diff = (W[0] - W[1]) @ x + (b[0] - b[1])
    s = m.decision_function(x[None])[0]
    if s[0] == s[1]:
        return
    assert svm_predict(m, x) == (0 if diff > 0 else 1)


@given(st.floats(-100, 100))
def test_common_bias_shift_keeps_argmax(c):
    rng = np.random.default_rng(4)
    W, b = rng.normal(size=(4, 3)), rng.normal(size=4)
    X = rng.normal(size=(30, 3))
    assert svm_predict_many(hand_model(W, b), X).tolist() == svm_predict_many(hand_model(W, b + c), X).tolist()


def test_hinge_objective_by_hand():
    W = np.array([[1.0, 0.0]])
    b = np.array([0.0])
    X = np.array([[2.0, 0.0], [0.5, 0.0]])
    Y = np.array([[1.0], [1.0]])
    # hinge: 0 and 0.5 -> mean 0.25; reg 0.5 * 0.1 * 1
    assert hinge_objective(W, b, X, Y, 0.1)[0] == pytest.approx(0.3, abs=1e-15)


def test_svm_json_round_trip():
    X, y = separable_toy(5)
    m = svm_train(X, y, epochs=2)
    back = LinearSvmModel.from_json(json.loads(m.dumps()))
    assert svm_predict_many(back, X).tolist() == svm_predict_many(m, X).tolist()


def test_svm_params_validation():
    with pytest.raises(ValueError):
        SvmParams(lam=0)
    with pytest.raises(ValueError):
        SvmParams(epochs=0)
