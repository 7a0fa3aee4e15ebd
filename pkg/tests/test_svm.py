import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import random_pd_kernel, svm_dual_bruteforce
from qkemotion.errors import ConfigurationError, DigestMismatchError, ShapeError, TrainingError
from qkemotion.kernel import GramMatrix, gram_matrix
from qkemotion.svm import (
    SvmConfig,
    SvmModel,
    argmax_labels,
    decision_function,
    dual_objective,
    kkt_violation,
    load_model,
    predict,
    save_model,
    train,
)


def _random_instance(rng, n_min=2, n_max=8):
    n = int(rng.integers(n_min, n_max + 1))
    K = random_pd_kernel(rng, n)
    y = rng.choice([-1, 1], size=n)
    y[0], y[1] = 1, -1
    C = float(rng.choice([0.1, 1.0, 10.0]))
    return K, y, C


def test_identity_kernel_analytic_case():
    model = train(np.eye(2), [1, -1], SvmConfig(c=10))
    np.testing.assert_allclose(model.alphas, [1, 1], atol=1e-6)
    assert model.bias == pytest.approx(0.0, abs=1e-6)


def test_duplicated_point_with_opposite_labels_pins_alphas_at_c():
    K = np.ones((2, 2))
    model = train(K, [1, -1], SvmConfig(c=0.5))
    np.testing.assert_allclose(model.alphas, [0.5, 0.5], atol=1e-12)


def test_decision_function_examples():
    model = train(np.eye(2), [1, -1], SvmConfig(c=10))
    f = decision_function(model, np.array([[1.0, 0.0], [0.0, 0.0]]))
    assert f[0] == pytest.approx(1.0, abs=1e-6)
    assert f[1] == model.bias


def test_predict_sign_and_tie_rule():
    model = SvmModel(alphas=np.array([1.0, 1.0]), labels=np.array([1, -1]), bias=0.0)
    # f = (+2.3, -0.1, 0)
    cross = np.array([[2.3, 0.0], [0.0, 0.1], [0.5, 0.5]])
    np.testing.assert_array_equal(predict(model, cross), [1, -1, 1])


def test_separable_set_is_fit_exactly():
    rng = np.random.default_rng(0)
    X = np.vstack([rng.normal(-1.5, 0.3, size=(10, 8)), rng.normal(1.5, 0.3, size=(10, 8))])
    y = np.repeat([-1, 1], 10)
    g = gram_matrix(X)
    model = train(g, y, SvmConfig(c=100))
    assert np.array_equal(predict(model, gram_matrix(X, X, kind="test-train")), y)


def test_free_support_vectors_sit_on_the_margin():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(40, 8))
    y = np.where(X[:, 0] + 0.3 * X[:, 1] > 0, 1, -1)
    g = gram_matrix(X)
    model = train(g, y)
    f = decision_function(model, g.values)
    free = (model.alphas > 1e-9) & (model.alphas < model.config.c - 1e-9)
    assert free.any()
    assert np.all(np.sign(f[free]) == y[free])
    np.testing.assert_allclose(y[free] * f[free], 1.0, atol=1e-4)


def test_matches_bruteforce_dual_oracle():
    rng = np.random.default_rng(2)
    for _ in range(40):
        K, y, C = _random_instance(rng)
        best, _ = svm_dual_bruteforce(K, y, C)
        model = train(K, y, SvmConfig(c=C))
        got = dual_objective(model.alphas, K, y)
        assert abs(got - best) <= 1e-4 * max(1.0, abs(best))
        assert kkt_violation(model, K) <= 1e-4


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_constraints_and_kkt_hold(seed):
    rng = np.random.default_rng(seed)
    K, y, C = _random_instance(rng, n_max=30)
    model = train(K, y, SvmConfig(c=C))
    assert model.converged
    assert np.all(model.alphas >= 0) and np.all(model.alphas <= C)
    assert abs(model.alphas @ y) <= 1e-6
    assert kkt_violation(model, K) <= 1e-4


def test_permutation_equivariance():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(30, 8))
    Xt = rng.normal(size=(10, 8))
    y = np.where(X[:, 2] > 0, 1, -1)
    perm = rng.permutation(30)
    m1 = train(gram_matrix(X).values, y)
    m2 = train(gram_matrix(X[perm]).values, y[perm])
    # both solve the same strictly concave problem up to tolerance
    np.testing.assert_allclose(m2.alphas, m1.alphas[perm], atol=5e-3)
    p1 = predict(m1, gram_matrix(Xt, X).values)
    p2 = predict(m2, gram_matrix(Xt, X[perm]).values)
    np.testing.assert_array_equal(p1, p2)


def test_label_flip_negates_decision_function():
    rng = np.random.default_rng(4)
    X = rng.normal(size=(25, 8))
    y = np.where(X[:, 0] > 0, 1, -1)
    K = gram_matrix(X).values
    cross = gram_matrix(rng.normal(size=(7, 8)), X).values
    f = decision_function(train(K, y), cross)
    g = decision_function(train(K, -y), cross)
    np.testing.assert_allclose(g, -f, atol=1e-9)


def test_repeated_training_is_bitwise_identical():
    rng = np.random.default_rng(5)
    K, y, C = _random_instance(rng, n_min=20, n_max=20)
    a, b = train(K, y, SvmConfig(c=C)), train(K, y, SvmConfig(c=C))
    assert a.alphas.tobytes() == b.alphas.tobytes() and a.bias == b.bias


def test_training_errors():
    with pytest.raises(TrainingError):
        train(np.eye(3), [1, 1, 1])
    with pytest.raises(ShapeError):
        train(np.eye(3), [1, -1])
    with pytest.raises(ShapeError):
        train(np.ones((2, 3)), [1, -1])
    with pytest.raises(ConfigurationError):
        train(np.eye(2), [1, 0])
    with pytest.raises(ShapeError):
        train(GramMatrix(np.ones((2, 2)), kind="test-train"), [1, -1])


@pytest.mark.parametrize("kwargs", [{"c": 0}, {"c": -1}, {"tolerance": 0}, {"kernel_kind": "poly"}])
def test_invalid_config(kwargs):
    with pytest.raises(ConfigurationError):
        SvmConfig(**kwargs)


def test_cross_gram_shape_and_digest_checks():
    rng = np.random.default_rng(6)
    A, B, other = rng.normal(size=(6, 8)), rng.normal(size=(3, 8)), rng.normal(size=(6, 8))
    y = np.array([1, -1, 1, -1, 1, -1])
    model = train(gram_matrix(A), y)
    decision_function(model, gram_matrix(B, A, kind="test-train"))
    with pytest.raises(DigestMismatchError):
        decision_function(model, gram_matrix(B, other, kind="test-train"))
    with pytest.raises(ShapeError):
        decision_function(model, np.zeros((3, 5)))


def test_model_round_trip(tmp_path):
    rng = np.random.default_rng(7)
    A = rng.normal(size=(8, 8))
    model = train(gram_matrix(A), [1, -1] * 4)
    back = load_model(save_model(model, tmp_path / "m.json"))
    assert back.alphas.tobytes() == model.alphas.tobytes()
    assert back.bias == model.bias and back.train_gram_ref == model.train_gram_ref
    cross = gram_matrix(rng.normal(size=(4, 8)), A, kind="test-train")
    np.testing.assert_array_equal(decision_function(back, cross), decision_function(model, cross))


def test_argmax_labels_ties_go_to_first_class():
    out = argmax_labels({"Positive": [0.5, 1.0], "Negative": [0.5, 2.0], "Neutral": [0.1, -1]})
    assert list(out) == ["Positive", "Negative"]
