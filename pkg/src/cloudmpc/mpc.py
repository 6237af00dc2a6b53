"""Finite-horizon MPC condensed into a dense QP over the input sequence.

The prediction matrices, Hessian and constraint rows depend only on the
horizon, so they are assembled once per horizon and cached on the spec; each
solve only rebuilds the linear term and constraint bounds from the current
state error and set-point shift.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from cloudmpc.linear import DiscreteLinearModel
from cloudmpc.lqr import CostSpec, riccati_residual
from cloudmpc.polytope import Polytope
from cloudmpc.qp import QpProblem, solve_qp


@dataclass(frozen=True)
class ConstraintSet:
    """Per-step inequalities G [x; u] <= g and equalities H [x; u] = h."""

    G: np.ndarray
    g: np.ndarray
    H: np.ndarray | None = None
    h: np.ndarray | None = None

    def __post_init__(self):
        G = np.atleast_2d(np.asarray(self.G, dtype=float))
        g = np.asarray(self.g, dtype=float).reshape(-1)
        if G.shape[0] != g.shape[0]:
            raise ValueError(f"G has {G.shape[0]} rows, g has {g.shape[0]}")
        if not np.all(np.isfinite(g)):
            raise ValueError("constraint bounds must be finite")
        object.__setattr__(self, "G", G)
        object.__setattr__(self, "g", g)
        if self.H is not None:
            H = np.atleast_2d(np.asarray(self.H, dtype=float))
            h = np.asarray(self.h, dtype=float).reshape(-1)
            if H.shape[1] != G.shape[1] or H.shape[0] != h.shape[0]:
                raise ValueError("equality rows inconsistent with G columns")
            object.__setattr__(self, "H", H)
            object.__setattr__(self, "h", h)

    @classmethod
    def empty(cls, n: int, m: int) -> "ConstraintSet":
        return cls(G=np.zeros((0, n + m)), g=np.zeros(0))

    def split(self, n: int):
        return self.G[:, :n], self.G[:, n:]


@dataclass
class MpcSpec:
    """Everything needed to pose the horizon-N optimization from a state error."""

    model: DiscreteLinearModel
    cost: CostSpec
    terminal_cost: np.ndarray
    constraints: ConstraintSet
    terminal_set: Polytope | None
    horizon_set: tuple[int, ...]
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        P = np.atleast_2d(np.asarray(self.terminal_cost, dtype=float))
        if np.max(np.abs(P - P.T)) > 1e-9 * max(1.0, np.max(np.abs(P))):
            raise ValueError("terminal cost must be symmetric")
        res = riccati_residual(P, self.model.A, self.model.B, self.cost.Q, self.cost.R)
        if res > 1e-6:
            raise ValueError(f"terminal cost is not the Riccati solution (residual {res:.2e})")
        self.terminal_cost = P
        hs = tuple(int(N) for N in self.horizon_set)
        if not hs or any(b <= a for a, b in zip(hs, hs[1:])) or hs[0] < 1:
            raise ValueError("horizon_set must be a nonempty ascending list of positive ints")
        self.horizon_set = hs
        if self.constraints.G.shape[1] != self.model.n + self.model.m:
            raise ValueError("constraint rows must span n + m columns")
        if self.terminal_set is not None and self.terminal_set.dim != self.model.n:
            raise ValueError("terminal set dimension must match the model")

    def condensed(self, N: int) -> "_Condensed":
        if N not in self._cache:
            self._cache[N] = _Condensed(self, N)
        return self._cache[N]


class _Condensed:
    """Horizon-N prediction matrices and the x-independent QP blocks.

    With z = (u_0..u_{N-1}) and stacked states X = (x_1..x_N) = T x_err + S z:
      Hessian = 2 (S' Qbar S + Rbar),  Qbar = diag(Q..Q P),  Rbar = diag(R..R)
      linear  = 2 S' Qbar T x_err
      constant= x_err' (Q + T' Qbar T) x_err
    Stage rows apply at steps 0..N-1 (at step 0 only rows touching the input,
    the initial state being given), terminal-set rows at step N.
    """

    def __init__(self, spec: MpcSpec, N: int):
        model, cost = spec.model, spec.cost
        n, m = model.n, model.m
        A, B = model.A, model.B
        self.N, self.n, self.m = N, n, m

        Apow = [np.eye(n)]
        for _ in range(N):
            Apow.append(A @ Apow[-1])
        S = np.zeros((N * n, N * m))
        for i in range(1, N + 1):
            for j in range(i):
                S[(i - 1) * n:i * n, j * m:(j + 1) * m] = Apow[i - 1 - j] @ B
        T = np.vstack(Apow[1:])
        Qbar = np.zeros((N * n, N * n))
        for i in range(N - 1):
            Qbar[i * n:(i + 1) * n, i * n:(i + 1) * n] = cost.Q
        Qbar[(N - 1) * n:, (N - 1) * n:] = spec.terminal_cost
        Rbar = np.kron(np.eye(N), cost.R)

        H2 = 2.0 * (S.T @ Qbar @ S + Rbar)
        self.hessian = 0.5 * (H2 + H2.T)
        self.lin_map = 2.0 * S.T @ Qbar @ T          # q = lin_map @ x_err
        self.const_map = cost.Q + T.T @ Qbar @ T     # J0 = x_err' const_map x_err
        self.S, self.T, self.Apow = S, T, Apow

        Gx, Gu = spec.constraints.split(n)
        p = Gx.shape[0]
        rows_A, rows_bmap, self.g_steps = [], [], []
        if p:
            u_rows = np.flatnonzero(np.any(Gu != 0.0, axis=1))
            if u_rows.size:
                blk = np.zeros((u_rows.size, N * m))
                blk[:, :m] = Gu[u_rows]
                rows_A.append(blk)
                rows_bmap.append(Gx[u_rows] @ Apow[0])
                self.g_steps.append(u_rows)
            for i in range(1, N):
                blk = Gx @ S[(i - 1) * n:i * n]
                blk[:, i * m:(i + 1) * m] += Gu
                rows_A.append(blk)
                rows_bmap.append(Gx @ Apow[i])
                self.g_steps.append(np.arange(p))
        self.n_stage_rows = sum(len(ix) for ix in self.g_steps)
        if spec.terminal_set is not None:
            F, f = spec.terminal_set.F, spec.terminal_set.f
            rows_A.append(F @ S[(N - 1) * n:])
            rows_bmap.append(F @ Apow[N])
            self.terminal_f = f
        else:
            self.terminal_f = np.zeros(0)
        if rows_A:
            self.A_in = np.vstack(rows_A)
            self.b_map = np.vstack(rows_bmap)   # b = b_base(g) - b_map @ x_err
        else:
            self.A_in = None
            self.b_map = None

        Hx_eq = spec.constraints.H
        self.eq_blocks = None
        if Hx_eq is not None and Hx_eq.shape[0]:
            Hxx, Hxu = Hx_eq[:, :n], Hx_eq[:, n:]
            eq_A, eq_bmap, eq_steps = [], [], []
            u_rows = np.flatnonzero(np.any(Hxu != 0.0, axis=1))
            if u_rows.size:
                blk = np.zeros((u_rows.size, N * m))
                blk[:, :m] = Hxu[u_rows]
                eq_A.append(blk)
                eq_bmap.append(Hxx[u_rows] @ Apow[0])
                eq_steps.append(u_rows)
            for i in range(1, N):
                blk = Hxx @ S[(i - 1) * n:i * n]
                blk[:, i * m:(i + 1) * m] += Hxu
                eq_A.append(blk)
                eq_bmap.append(Hxx @ Apow[i])
                eq_steps.append(np.arange(Hx_eq.shape[0]))
            self.eq_blocks = (np.vstack(eq_A), np.vstack(eq_bmap), eq_steps)

    def bounds(self, g_shifted: np.ndarray, x_err: np.ndarray) -> np.ndarray | None:
        if self.A_in is None:
            return None
        base = np.concatenate(
            [g_shifted[ix] for ix in self.g_steps] + [self.terminal_f])
        return base - self.b_map @ x_err


@dataclass(frozen=True)
class MpcPlan:
    horizon: int
    inputs: np.ndarray | None
    feasible: bool
    iterations: int
    objective: float | None
    active_set: tuple[int, ...] = ()

    def first_input(self) -> np.ndarray:
        if not self.feasible:
            raise ValueError("infeasible plan has no inputs")
        return self.inputs[0]


def build_condensed_qp(spec: MpcSpec, N: int, x_err,
                       g_shifted: np.ndarray | None = None,
                       h_shifted: np.ndarray | None = None) -> QpProblem:
    """Dense QP over the stacked input sequence for horizon N.

    `g_shifted`/`h_shifted` replace the constraint bounds (used by mpc_solve
    for set-point shifting); by default the spec's own bounds apply.
    """
    if N not in spec.horizon_set:
        raise ValueError(f"horizon {N} not in the configured set {spec.horizon_set}")
    x_err = np.asarray(x_err, dtype=float).reshape(-1)
    if x_err.shape[0] != spec.model.n:
        raise ValueError(f"state error has length {x_err.shape[0]}, expected {spec.model.n}")
    c = spec.condensed(N)
    g = spec.constraints.g if g_shifted is None else g_shifted
    b_in = c.bounds(g, x_err)
    A_eq = b_eq = None
    if c.eq_blocks is not None:
        eq_A, eq_bmap, eq_steps = c.eq_blocks
        h = spec.constraints.h if h_shifted is None else h_shifted
        A_eq = eq_A
        b_eq = np.concatenate([h[ix] for ix in eq_steps]) - eq_bmap @ x_err
    return QpProblem(H=c.hessian, q=c.lin_map @ x_err, A_in=c.A_in, b_in=b_in,
                     A_eq=A_eq, b_eq=b_eq)


def mpc_solve(spec: MpcSpec, x, sp, N: int,
              warm_start: tuple[int, ...] | None = None) -> MpcPlan:
    """Solve the horizon-N problem for state x and set-point sp.

    Coordinates are shifted by the set-point: the QP runs on x_err = x - sp
    with stage bounds moved accordingly; infeasibility (or hitting the solver
    iteration limit) is reported as feasible=False, never raised.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    sp = np.asarray(sp, dtype=float).reshape(-1)
    x_err = x - sp
    n = spec.model.n
    Gx, _ = spec.constraints.split(n)
    g_shifted = spec.constraints.g - Gx @ sp if Gx.shape[0] else spec.constraints.g
    h_shifted = None
    if spec.constraints.H is not None:
        h_shifted = spec.constraints.h - spec.constraints.H[:, :n] @ sp
    problem = build_condensed_qp(spec, N, x_err, g_shifted, h_shifted)
    result = solve_qp(problem, warm_start=warm_start)
    if result.status != "optimal":
        return MpcPlan(horizon=N, inputs=None, feasible=False,
                       iterations=result.iterations, objective=None)
    c = spec.condensed(N)
    objective = float(result.objective + x_err @ c.const_map @ x_err)
    inputs = result.z.reshape(N, spec.model.m)
    return MpcPlan(horizon=N, inputs=inputs, feasible=True,
                   iterations=result.iterations, objective=objective,
                   active_set=result.active_set)


def replay_plan(model: DiscreteLinearModel, x0, plan: MpcPlan) -> np.ndarray:
    """Predicted state sequence x_0..x_N when applying the plan open loop."""
    x = np.asarray(x0, dtype=float).reshape(-1)
    states = [x]
    for u in plan.inputs:
        x = model.A @ x + model.B @ u
        states.append(x)
    return np.array(states)


def exec_time_model(gamma: int, N: int) -> float:
    """Modeled optimization wall time in seconds: 0.001 * gamma * N / 20."""
    if gamma < 0:
        raise ValueError("iteration count must be >= 0")
    if N < 1:
        raise ValueError("horizon must be >= 1")
    return 0.001 * gamma * N / 20.0
