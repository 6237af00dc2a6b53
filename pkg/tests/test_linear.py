import numpy as np
import pytest

from cloudmpc.linear import (ContinuousLinearModel, DiscreteLinearModel,
                             step, zoh_discretize)


def series_expm(M, terms=30):
    """Independent oracle: plain truncated Taylor series, no scaling."""
    E = np.eye(M.shape[0])
    term = np.eye(M.shape[0])
    for k in range(1, terms + 1):
        term = term @ M / k
        E = E + term
    return E


def test_double_integrator_closed_form():
    h = 0.1
    model = zoh_discretize(ContinuousLinearModel(Ac=[[0, 1], [0, 0]], Bc=[[0], [1]]), h)
    assert np.allclose(model.A, [[1, h], [0, 1]], atol=1e-14)
    assert np.allclose(model.B.ravel(), [h * h / 2, h], atol=1e-14)


def test_zero_dynamics():
    b = np.array([[2.0], [-1.0], [0.5]])
    model = zoh_discretize(ContinuousLinearModel(Ac=np.zeros((3, 3)), Bc=b), 0.25)
    assert np.allclose(model.A, np.eye(3), atol=1e-15)
    assert np.allclose(model.B, b * 0.25, atol=1e-15)


def test_triple_integrator_against_series_oracle():
    Ac = np.array([[0, 1, 0], [0, 0, -7.0], [0, 0, 0]])
    Bc = np.array([[0.0], [0.0], [4.4]])
    dt = 0.05
    model = zoh_discretize(ContinuousLinearModel(Ac=Ac, Bc=Bc), dt)
    aug = np.zeros((4, 4))
    aug[:3, :3] = Ac
    aug[:3, 3:] = Bc
    E = series_expm(aug * dt)
    assert np.max(np.abs(model.A - E[:3, :3])) <= 1e-12
    assert np.max(np.abs(model.B - E[:3, 3:])) <= 1e-12


def test_step_examples(example_model):
    zero = step(example_model, [0, 0], [0])
    assert np.all(zero == 0)
    ident = DiscreteLinearModel(A=np.eye(2), B=np.zeros((2, 1)), dt=1.0)
    x = np.array([1.3, -2.2])
    assert np.allclose(step(ident, x, [5.0]), x, atol=0)
    # hand matrix-vector multiply for the example model
    nxt = step(example_model, [3.2, 0.15], [0.0])
    assert abs(nxt[0] - 3.33880) < 5e-6
    assert abs(nxt[1] - 0.035085) < 5e-7


def test_step_is_linear(example_model):
    rng = np.random.default_rng(7)
    for _ in range(20):
        x1, x2 = rng.normal(size=2), rng.normal(size=2)
        u1, u2 = rng.normal(size=1), rng.normal(size=1)
        lhs = step(example_model, x1 + x2, u1 + u2)
        rhs = step(example_model, x1, u1) + step(example_model, x2, u2)
        assert np.max(np.abs(lhs - rhs)) < 1e-12


def test_zoh_semigroup_property():
    rng = np.random.default_rng(3)
    for _ in range(10):
        Ac = rng.normal(size=(3, 3)) - 2.5 * np.eye(3)  # comfortably stable
        Bc = rng.normal(size=(3, 1))
        cm = ContinuousLinearModel(Ac=Ac, Bc=Bc)
        dt, n = 0.02, 5
        fine = zoh_discretize(cm, dt)
        coarse = zoh_discretize(cm, n * dt)
        x0 = rng.normal(size=3)
        u = rng.normal(size=1)
        xa = x0.copy()
        for _ in range(n):
            xa = step(fine, xa, u)
        xb = step(coarse, x0, u)
        assert np.max(np.abs(xa - xb)) < 1e-9


def test_dimension_and_value_errors():
    with pytest.raises(ValueError):
        ContinuousLinearModel(Ac=[[0, 1]], Bc=[[1]])
    with pytest.raises(ValueError):
        ContinuousLinearModel(Ac=[[np.nan, 0], [0, 0]], Bc=[[1], [1]])
    with pytest.raises(ValueError):
        DiscreteLinearModel(A=np.eye(2), B=np.zeros((3, 1)), dt=0.1)
    with pytest.raises(ValueError):
        DiscreteLinearModel(A=np.eye(2), B=np.zeros((2, 1)), dt=0.0)
    model = DiscreteLinearModel(A=np.eye(2), B=np.zeros((2, 1)), dt=0.1)
    with pytest.raises(ValueError):
        step(model, [1.0, 2.0, 3.0], [0.0])
    with pytest.raises(ValueError):
        step(model, [1.0, 2.0], [0.0, 1.0])
    cm = ContinuousLinearModel(Ac=np.zeros((2, 2)), Bc=np.ones((2, 1)))
    with pytest.raises(ValueError):
        zoh_discretize(cm, -0.1)
