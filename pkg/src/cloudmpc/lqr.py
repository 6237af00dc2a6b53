"""Infinite-horizon discrete-time LQR: Riccati fixed point, gain, and control law.

Sign convention used throughout the package: the local control law is
u = K (sp - x), i.e. proportional feedback on the set-point error that yields
the stable closed loop A - B K.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class CostSpec:
    """Quadratic stage cost x'Qx + u'Ru."""

    Q: np.ndarray
    R: np.ndarray

    def __post_init__(self):
        Q = np.atleast_2d(np.asarray(self.Q, dtype=float))
        R = np.atleast_2d(np.asarray(self.R, dtype=float))
        if np.max(np.abs(Q - Q.T)) > 1e-12:
            raise ValueError("Q must be symmetric")
        if np.max(np.abs(R - R.T)) > 1e-12:
            raise ValueError("R must be symmetric")
        try:
            np.linalg.cholesky(R)
        except np.linalg.LinAlgError:
            raise ValueError("R must be positive definite") from None
        eig = np.linalg.eigvalsh(Q)
        if eig.min() < -1e-10 * max(1.0, eig.max()):
            raise ValueError("Q must be positive semidefinite")
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "R", R)


@dataclass(frozen=True)
class LqrSolution:
    """Riccati solution P (also used as terminal cost) and feedback gain K."""

    P: np.ndarray
    K: np.ndarray

    def closed_loop(self, A: np.ndarray, B: np.ndarray) -> np.ndarray:
        return A - B @ self.K


def riccati_residual(P: np.ndarray, A: np.ndarray, B: np.ndarray, Q: np.ndarray,
                     R: np.ndarray) -> float:
    """Max-norm residual of P = A'PA - A'PB (R + B'PB)^-1 B'PA + Q."""
    BtP = B.T @ P
    K = np.linalg.solve(R + BtP @ B, BtP @ A)
    return float(np.max(np.abs(A.T @ P @ A - A.T @ P @ B @ K + Q - P)))


def solve_dare(model, cost: CostSpec, tol: float = 1e-12,
               max_iter: int = 10_000) -> LqrSolution:
    """Solve the discrete algebraic Riccati equation by fixed-point iteration.

    Starts from P = Q and iterates the Riccati map, symmetrizing each step,
    until successive iterates agree to tol in max norm. Raises RuntimeError if
    the iteration does not converge within max_iter (system not stabilizable,
    or budget too small).
    """
    A, B = model.A, model.B
    Q, R = cost.Q, cost.R
    if Q.shape[0] != A.shape[0]:
        raise ValueError(f"Q is {Q.shape}, expected {A.shape}")
    if R.shape[0] != B.shape[1]:
        raise ValueError(f"R is {R.shape}, expected ({B.shape[1]}, {B.shape[1]})")
    P = Q.copy()
    for _ in range(max_iter):
        BtP = B.T @ P
        K = np.linalg.solve(R + BtP @ B, BtP @ A)
        P_next = A.T @ P @ A - A.T @ P @ B @ K + Q
        P_next = 0.5 * (P_next + P_next.T)
        if not np.all(np.isfinite(P_next)) or np.max(np.abs(P_next)) > 1e120:
            raise RuntimeError("Riccati iteration diverged: system not stabilizable")
        if np.max(np.abs(P_next - P)) <= tol:
            P = P_next
            break
        P = P_next
    else:
        raise RuntimeError(
            "Riccati iteration did not converge: system not stabilizable "
            f"or budget of {max_iter} iterations exceeded")
    BtP = B.T @ P
    K = np.linalg.solve(R + BtP @ B, BtP @ A)
    return LqrSolution(P=P, K=K)


def control_law(K: np.ndarray, sp, x) -> np.ndarray:
    """Local feedback u = K (sp - x)."""
    K = np.atleast_2d(np.asarray(K, dtype=float))
    sp = np.asarray(sp, dtype=float).reshape(-1)
    x = np.asarray(x, dtype=float).reshape(-1)
    if sp.shape != x.shape:
        raise ValueError(f"set-point shape {sp.shape} != state shape {x.shape}")
    if K.shape[1] != x.shape[0]:
        raise ValueError(f"gain has {K.shape[1]} columns, expected {x.shape[0]}")
    return K @ (sp - x)
