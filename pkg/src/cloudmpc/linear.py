"""Discrete-time linear models, zero-order-hold discretization, one-step simulation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def _as_matrix(M, name: str) -> np.ndarray:
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{name} contains non-finite entries")
    return M


@dataclass(frozen=True)
class ContinuousLinearModel:
    """Continuous-time dynamics dx/dt = Ac x + Bc u."""

    Ac: np.ndarray
    Bc: np.ndarray

    def __post_init__(self):
        Ac = _as_matrix(self.Ac, "Ac")
        Bc = _as_matrix(self.Bc, "Bc")
        if Ac.shape[0] != Ac.shape[1]:
            raise ValueError(f"Ac must be square, got {Ac.shape}")
        if Bc.shape[0] != Ac.shape[0]:
            raise ValueError(f"Bc has {Bc.shape[0]} rows, expected {Ac.shape[0]}")
        object.__setattr__(self, "Ac", Ac)
        object.__setattr__(self, "Bc", Bc)

    @property
    def n(self) -> int:
        return self.Ac.shape[0]

    @property
    def m(self) -> int:
        return self.Bc.shape[1]


@dataclass(frozen=True)
class DiscreteLinearModel:
    """Discrete-time dynamics x[k+1] = A x[k] + B u[k] with sampling period dt."""

    A: np.ndarray
    B: np.ndarray
    dt: float

    def __post_init__(self):
        A = _as_matrix(self.A, "A")
        B = _as_matrix(self.B, "B")
        if A.shape[0] != A.shape[1]:
            raise ValueError(f"A must be square, got {A.shape}")
        if B.shape[0] != A.shape[0]:
            raise ValueError(f"B has {B.shape[0]} rows, expected {A.shape[0]}")
        if not (self.dt > 0):
            raise ValueError(f"dt must be positive, got {self.dt}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    def step(self, x, u) -> np.ndarray:
        return step(self, x, u)


def _expm_series(M: np.ndarray, rel_tol: float = 1e-16, max_terms: int = 60) -> np.ndarray:
    """Matrix exponential by scaling-and-squaring with a truncated Taylor series.

    The matrix is scaled by 2**-s so its 1-norm is below 0.5, the series is
    summed until terms fall below rel_tol relative to the running sum, and the
    result is squared s times.
    """
    norm = np.linalg.norm(M, 1)
    s = max(0, int(np.ceil(np.log2(norm / 0.5)))) if norm > 0.5 else 0
    Ms = M / (2.0 ** s)
    E = np.eye(M.shape[0])
    term = np.eye(M.shape[0])
    for k in range(1, max_terms + 1):
        term = term @ Ms / k
        E = E + term
        if np.linalg.norm(term, 1) <= rel_tol * np.linalg.norm(E, 1):
            break
    for _ in range(s):
        E = E @ E
    return E


def zoh_discretize(model: ContinuousLinearModel, dt: float) -> DiscreteLinearModel:
    """Zero-order-hold discretization of a continuous model at period dt.

    Computes the exponential of the augmented block matrix [[Ac, Bc], [0, 0]]
    scaled by dt; its top blocks are exactly A = exp(Ac dt) and
    B = integral_0^dt exp(Ac s) ds Bc.
    """
    if not (dt > 0):
        raise ValueError(f"dt must be positive, got {dt}")
    n, m = model.n, model.m
    aug = np.zeros((n + m, n + m))
    aug[:n, :n] = model.Ac
    aug[:n, n:] = model.Bc
    E = _expm_series(aug * dt)
    return DiscreteLinearModel(A=E[:n, :n], B=E[:n, n:], dt=dt)


def step(model: DiscreteLinearModel, x, u) -> np.ndarray:
    """One simulation step: A x + B u."""
    x = np.asarray(x, dtype=float).reshape(-1)
    u = np.asarray(u, dtype=float).reshape(-1)
    if x.shape[0] != model.n:
        raise ValueError(f"state has length {x.shape[0]}, expected {model.n}")
    if u.shape[0] != model.m:
        raise ValueError(f"input has length {u.shape[0]}, expected {model.m}")
    return model.A @ x + model.B @ u
