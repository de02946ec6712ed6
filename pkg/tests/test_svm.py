import numpy as np
import pytest

from certicd.svm import LinearModel, SeparabilityError, SolverConfig, SolverDiagnostics, decision_value, train_hard_svm

from oracles import max_margin_brute_force, random_separable_instance


def test_symmetric_two_points():
    m = train_hard_svm([[-1.0], [1.0]], [-1, 1])
    assert m.w[0] == pytest.approx(1.0, abs=1e-9)
    assert m.b == pytest.approx(0.0, abs=1e-9)
    assert m.diagnostics.margin == pytest.approx(1.0, abs=1e-9)


def test_shifted_two_points():
    m = train_hard_svm([[0.0], [2.0]], [-1, 1])
    assert m.w[0] == pytest.approx(1.0, abs=1e-9)
    assert m.b == pytest.approx(-1.0, abs=1e-9)


def test_identical_points_are_not_separable():
    with pytest.raises(SeparabilityError) as info:
        train_hard_svm([[0.0], [0.0]], [-1, 1])
    assert info.value.index in (0, 1)


def test_overlapping_classes_are_not_separable():
    # the multipliers grow by about one per update, so a small box bound keeps this quick
    X = [[0.0], [1.0], [2.0], [3.0]]
    with pytest.raises(SeparabilityError, match="box bound"):
        train_hard_svm(X, [-1, 1, -1, 1], SolverConfig(C=1e3))
    with pytest.raises(SeparabilityError):
        train_hard_svm(X, [-1, 1, -1, 1], SolverConfig(C=1e3, fit_intercept=False))


@pytest.mark.parametrize("X, y", [([[0.0], [1.0]], [1, 1]), ([[0.0]], [1]),
                                  ([[0.0], [1.0]], [0, 1]), ([[np.nan], [1.0]], [-1, 1]),
                                  ([[0.0], [1.0]], [-1, 1, 1])])
def test_input_errors(X, y):
    with pytest.raises(ValueError):
        train_hard_svm(X, y)


def test_decision_value_and_tie_rule():
    diag = SolverDiagnostics(0, 0.0, 0.0, 1.0, 2)
    m = LinearModel(w=np.array([1.0]), b=-1.0, diagnostics=diag)
    assert decision_value(m, [1.0]) == 0.0
    assert m.predict(np.array([[1.0]]))[0] == 1
    m0 = LinearModel(w=np.array([1.0]), b=0.0, diagnostics=diag)
    assert decision_value(m0, [-0.5]) == -0.5
    assert m0.predict(np.array([[-0.5]]))[0] == -1
    with pytest.raises(ValueError):
        m.decision_value([1.0, 2.0])


def test_support_vectors_sit_on_the_margin():
    rng = np.random.default_rng(3)
    X, y = random_separable_instance(rng, max_points=12, max_dim=3)
    model = train_hard_svm(X, y)
    values = y * model.decision_value(X)
    assert values.min() >= 1 - 1e-6
    assert np.sum(np.abs(values - 1) <= 1e-5) >= 2


@pytest.mark.parametrize("seed", range(40))
def test_matches_brute_force_margin(seed):
    rng = np.random.default_rng(seed)
    X, y = random_separable_instance(rng)
    model = train_hard_svm(X, y)
    oracle, _, _ = max_margin_brute_force(X, y)
    assert model.diagnostics.margin == pytest.approx(oracle, rel=1e-4)
    assert model.diagnostics.kkt_gap <= 1e-6
    assert model.diagnostics.max_violation <= 1e-6


@pytest.mark.parametrize("seed", range(20))
def test_homogeneous_matches_brute_force(seed):
    rng = np.random.default_rng(1000 + seed)
    X, y = random_separable_instance(rng)
    # lift into one more dimension so a bias-free separator exists
    X = np.column_stack([X, np.ones(len(X))])
    model = train_hard_svm(X, y, SolverConfig(fit_intercept=False))
    oracle, _, _ = max_margin_brute_force(X, y, fit_intercept=False)
    assert model.b == 0.0
    assert model.diagnostics.margin == pytest.approx(oracle, rel=1e-4)


@pytest.mark.parametrize("c", [0.1, 3.0, 25.0])
def test_scaling_features(c):
    rng = np.random.default_rng(11)
    X, y = random_separable_instance(rng, max_points=10, max_dim=3)
    base = train_hard_svm(X, y)
    scaled = train_hard_svm(c * X, y)
    np.testing.assert_allclose(scaled.w, base.w / c, rtol=1e-4, atol=1e-6 / c)
    assert scaled.b == pytest.approx(base.b, rel=1e-4, abs=1e-6)
    probe = rng.uniform(-2, 2, size=(200, X.shape[1]))
    keep = np.abs(base.decision_value(probe)) > 1e-3
    np.testing.assert_array_equal(base.predict(probe[keep]), scaled.predict(c * probe[keep]))


def test_deterministic_bitwise():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(300, 6))
    X = X[np.abs(X[:, 0]) > 0.2]
    y = np.where(X[:, 0] > 0, 1, -1)
    a = train_hard_svm(X, y)
    b = train_hard_svm(X.copy(), y.copy())
    assert a.w.tobytes() == b.w.tobytes() and a.b == b.b


def test_iteration_cap_surfaces_as_separability_error():
    rng = np.random.default_rng(2)
    X, y = random_separable_instance(rng, max_points=12, max_dim=3)
    with pytest.raises(SeparabilityError):
        train_hard_svm(X, y, SolverConfig(max_iter=1))
