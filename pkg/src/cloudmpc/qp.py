"""Dense strictly convex QP solver: primal active-set method with a
deterministic iteration count.

minimize    0.5 z'H z + q'z
subject to  A_in z <= b_in
            A_eq z  = b_eq

Equalities are eliminated through a null-space basis before the active-set
loop. The iteration count reported in QpResult drives the simulator's modeled
execution time, so all tie-breaking is by lowest row index and results are
bit-reproducible for identical inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from cloudmpc.polytope import feasible_point

ITERATION_LIMIT = 500
_FEAS_TOL = 1e-9


@dataclass(frozen=True)
class QpProblem:
    H: np.ndarray
    q: np.ndarray
    A_in: np.ndarray | None = None
    b_in: np.ndarray | None = None
    A_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None

    def __post_init__(self):
        H = np.atleast_2d(np.asarray(self.H, dtype=float))
        q = np.asarray(self.q, dtype=float).reshape(-1)
        d = H.shape[0]
        if H.shape[1] != d or q.shape[0] != d:
            raise ValueError(f"H is {H.shape} and q has length {q.shape[0]}")
        if np.max(np.abs(H - H.T)) > 1e-10 * max(1.0, np.max(np.abs(H))):
            raise ValueError("Hessian must be symmetric")
        try:
            np.linalg.cholesky(H)
        except np.linalg.LinAlgError:
            raise ValueError("Hessian must be positive definite") from None
        object.__setattr__(self, "H", 0.5 * (H + H.T))
        object.__setattr__(self, "q", q)
        for name in ("A_in", "A_eq"):
            A = getattr(self, name)
            b = getattr(self, "b_in" if name == "A_in" else "b_eq")
            if A is None:
                if b is not None:
                    raise ValueError(f"{name} missing for given bounds")
                continue
            A = np.atleast_2d(np.asarray(A, dtype=float))
            b = np.asarray(b, dtype=float).reshape(-1)
            if A.shape[1] != d or A.shape[0] != b.shape[0]:
                raise ValueError(f"{name} is {A.shape}, bounds length {b.shape[0]}, d={d}")
            object.__setattr__(self, name, A)
            object.__setattr__(self, "b_in" if name == "A_in" else "b_eq", b)

    @property
    def dim(self) -> int:
        return self.H.shape[0]


@dataclass(frozen=True)
class QpResult:
    status: str  # "optimal" | "infeasible" | "iteration_limit"
    z: np.ndarray | None = None
    objective: float | None = None
    iterations: int = 1
    active_set: tuple[int, ...] = field(default_factory=tuple)


def _nullspace(A: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    _, s, vt = np.linalg.svd(A)
    rank = int(np.sum(s > tol * max(1.0, s[0] if s.size else 1.0)))
    return vt[rank:].T


def _kkt_solve(H: np.ndarray, g: np.ndarray, A_w: np.ndarray, r: np.ndarray):
    """Solve [H A'; A 0] [p; lam] = [-g; r] via the Schur complement."""
    if A_w.shape[0] == 0:
        return np.linalg.solve(H, -g), np.zeros(0)
    Hi_At = np.linalg.solve(H, A_w.T)
    Hi_g = np.linalg.solve(H, g)
    S = A_w @ Hi_At
    lam = np.linalg.solve(S, -(A_w @ Hi_g) - r)
    p = -Hi_g - Hi_At @ lam
    return p, lam


def _independent_rows(A: np.ndarray, rows: list[int]) -> list[int]:
    chosen: list[int] = []
    for r in rows:
        trial = A[chosen + [r]]
        if np.linalg.matrix_rank(trial) == len(chosen) + 1:
            chosen.append(r)
        if len(chosen) == A.shape[1]:
            break
    return chosen


def _active_set(H, q, A, b, z0, working: list[int], max_iter: int):
    """Primal active-set loop from feasible z0. Returns (status, z, working, iters)."""
    z = z0.copy()
    iters = 0
    while iters < max_iter:
        iters += 1
        g = H @ z + q
        A_w = A[working] if working else np.zeros((0, z.shape[0]))
        p, lam = _kkt_solve(H, g, A_w, np.zeros(len(working)))
        # a full working set pins z completely; otherwise tolerate the
        # numerical noise the saddle-point solve leaves in a zero step
        stationary = (len(working) == z.shape[0]
                      or np.max(np.abs(p)) <= 1e-9 * (1.0 + np.max(np.abs(z))))
        if stationary:
            if lam.size == 0 or lam.min() >= -1e-9:
                return "optimal", z, working, iters
            drop = int(np.argmin(lam))  # most negative; ties at lowest position
            working.pop(drop)
            continue
        # ratio test over constraints not in the working set
        mask = np.ones(A.shape[0], dtype=bool)
        mask[working] = False
        idx = np.flatnonzero(mask)
        denom = A[idx] @ p
        pos = denom > 1e-12
        alpha = 1.0
        blocker = -1
        if np.any(pos):
            slack = b[idx[pos]] - A[idx[pos]] @ z
            ratios = slack / denom[pos]
            ratios = np.maximum(ratios, 0.0)
            amin = ratios.min()
            if amin < 1.0:
                alpha = amin
                cand = idx[pos][ratios <= amin + 1e-12]
                blocker = int(cand.min())  # lowest row index among ties
        z = z + alpha * p
        if blocker >= 0:
            working.append(blocker)
            working.sort()
    return "iteration_limit", z, working, iters


def solve_qp(problem: QpProblem, warm_start: tuple[int, ...] | None = None,
             max_iter: int = ITERATION_LIMIT) -> QpResult:
    """Solve the QP; `warm_start` is an optional active-set guess (row indices
    into A_in) carried over from a previous, similar problem."""
    H, q = problem.H, problem.q
    d = problem.dim

    # eliminate equalities: z = z_p + Z y
    if problem.A_eq is not None and problem.A_eq.shape[0] > 0:
        z_p, *_ = np.linalg.lstsq(problem.A_eq, problem.b_eq, rcond=None)
        if np.max(np.abs(problem.A_eq @ z_p - problem.b_eq)) > 1e-8:
            return QpResult(status="infeasible", iterations=1)
        Z = _nullspace(problem.A_eq)
        if Z.shape[1] == 0:
            z = z_p
            if problem.A_in is not None and np.any(
                    problem.A_in @ z > problem.b_in + _FEAS_TOL):
                return QpResult(status="infeasible", iterations=1)
            return QpResult("optimal", z, float(0.5 * z @ H @ z + q @ z), 1, ())
    else:
        z_p = np.zeros(d)
        Z = np.eye(d)

    Hr = Z.T @ H @ Z
    qr = Z.T @ (q + H @ z_p)
    if problem.A_in is not None and problem.A_in.shape[0] > 0:
        Ar = problem.A_in @ Z
        br = problem.b_in - problem.A_in @ z_p
    else:
        Ar = np.zeros((0, Z.shape[1]))
        br = np.zeros(0)

    def finish(status, y, working, iters):
        if y is None:
            return QpResult(status=status, iterations=max(1, iters))
        z = z_p + Z @ y
        obj = float(0.5 * z @ H @ z + q @ z)
        return QpResult(status, z, obj, max(1, iters), tuple(working))

    # the unconstrained minimizer is optimal whenever it is feasible
    y_unc = np.linalg.solve(Hr, -qr)
    if Ar.shape[0] == 0 or np.all(Ar @ y_unc <= br + _FEAS_TOL):
        return finish("optimal", y_unc, [], 1)

    y0 = None
    working: list[int] = []
    if warm_start:
        rows = _independent_rows(Ar, [r for r in warm_start if 0 <= r < Ar.shape[0]])
        if rows:
            # minimizer subject to the warm rows held at equality
            y_try, _ = _kkt_solve(Hr, qr, Ar[rows], br[rows])
            if np.all(Ar @ y_try <= br + _FEAS_TOL):
                y0, working = y_try, rows
    if y0 is None:
        y0 = feasible_point(Ar, br)
        if y0 is None:
            return QpResult(status="infeasible", iterations=1)
        active = [int(i) for i in np.flatnonzero(Ar @ y0 >= br - 1e-8)]
        working = _independent_rows(Ar, active)

    status, y, working, iters = _active_set(Hr, qr, Ar, br, y0, working, max_iter)
    return finish(status, y if status != "iteration_limit" else None, working,
                  iters + 1)
