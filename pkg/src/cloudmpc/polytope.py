"""Halfspace polytopes, a dense simplex LP, and maximal invariant set computation.

The LP solver is a two-phase tableau simplex with Bland's rule: entering
variable is the lowest index with positive reduced cost, leaving variable is
the lowest basis index among minimum-ratio rows. This guarantees termination
and makes every result deterministic, which the simulator relies on.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

REDUNDANCY_TOL = 1e-9


@dataclass(frozen=True)
class LpResult:
    status: str  # "optimal" | "unbounded" | "infeasible"
    value: float | None = None
    x: np.ndarray | None = None


def _pivot(T: np.ndarray, row: int, col: int) -> None:
    T[row] /= T[row, col]
    factors = T[:, col].copy()
    factors[row] = 0.0
    T -= np.outer(factors, T[row])


def _run_simplex(T: np.ndarray, basis: np.ndarray, obj: np.ndarray,
                 tol: float) -> str:
    """Maximize obj over the tableau in place. Returns 'optimal' or 'unbounded'."""
    nrows = T.shape[0]
    while True:
        r = obj - obj[basis] @ T[:, :-1]
        improving = np.flatnonzero(r > tol)
        if improving.size == 0:
            return "optimal"
        enter = int(improving[0])
        col = T[:, enter]
        rows = np.flatnonzero(col > tol)
        if rows.size == 0:
            return "unbounded"
        ratios = T[rows, -1] / col[rows]
        rmin = ratios.min()
        ties = rows[ratios <= rmin + tol * max(1.0, abs(rmin))]
        leave = int(ties[np.argmin(basis[ties])])
        _pivot(T, leave, enter)
        basis[leave] = enter


class _Tableau:
    """Phase-1 setup for {F x <= f} with x free (split into x+ - x-)."""

    def __init__(self, F: np.ndarray, f: np.ndarray):
        k, n = F.shape
        self.k, self.n = k, n
        neg = f < 0
        n_art = int(neg.sum())
        ncols = 2 * n + k + n_art
        T = np.zeros((k, ncols + 1))
        basis = np.zeros(k, dtype=int)
        art_cols = []
        a = 0
        for i in range(k):
            sgn = -1.0 if neg[i] else 1.0
            T[i, :n] = sgn * F[i]
            T[i, n:2 * n] = -sgn * F[i]
            T[i, 2 * n + i] = sgn
            T[i, -1] = sgn * f[i]
            if neg[i]:
                col = 2 * n + k + a
                T[i, col] = 1.0
                basis[i] = col
                art_cols.append(col)
                a += 1
            else:
                basis[i] = 2 * n + i
        self.T = T
        self.basis = basis
        self.art_cols = art_cols
        self.ncols = ncols

    def phase1(self, tol: float) -> bool:
        """Drive artificials to zero. Returns False if the system is infeasible."""
        if not self.art_cols:
            return True
        obj = np.zeros(self.ncols)
        obj[self.art_cols] = -1.0
        _run_simplex(self.T, self.basis, obj, tol)
        art_value = sum(self.T[i, -1] for i in range(self.k)
                        if self.basis[i] in self.art_cols)
        if art_value > 1e-7:
            return False
        # pivot out degenerate basic artificials; an all-zero row is redundant
        keep_rows = np.ones(self.k, dtype=bool)
        art_set = set(self.art_cols)
        for i in range(self.k):
            if self.basis[i] not in art_set:
                continue
            row = self.T[i, :2 * self.n + self.k]
            nz = np.flatnonzero(np.abs(row) > tol)
            if nz.size == 0:
                keep_rows[i] = False
            else:
                _pivot(self.T, i, int(nz[0]))
                self.basis[i] = int(nz[0])
        if not keep_rows.all():
            self.T = self.T[keep_rows]
            self.basis = self.basis[keep_rows]
            self.k = self.T.shape[0]
        # blank out artificial columns so phase 2 never re-enters them
        for c in self.art_cols:
            self.T[:, c] = 0.0
        return True

    def solution(self) -> np.ndarray:
        v = np.zeros(self.ncols)
        v[self.basis] = self.T[:, -1]
        return v[:self.n] - v[self.n:2 * self.n]


def simplex_max(c, F, f, tol: float = 1e-9) -> LpResult:
    """Maximize c.x over {x : F x <= f} with x unrestricted in sign."""
    F = np.atleast_2d(np.asarray(F, dtype=float))
    f = np.asarray(f, dtype=float).reshape(-1)
    c = np.asarray(c, dtype=float).reshape(-1)
    if F.shape[0] != f.shape[0] or F.shape[1] != c.shape[0]:
        raise ValueError(f"inconsistent LP dimensions: F {F.shape}, f {f.shape}, c {c.shape}")
    if F.shape[0] == 0:
        if np.any(np.abs(c) > tol):
            return LpResult("unbounded")
        return LpResult("optimal", 0.0, np.zeros(c.shape[0]))
    tab = _Tableau(F, f)
    if not tab.phase1(tol):
        return LpResult("infeasible")
    obj = np.zeros(tab.ncols)
    obj[:tab.n] = c
    obj[tab.n:2 * tab.n] = -c
    status = _run_simplex(tab.T, tab.basis, obj, tol)
    if status == "unbounded":
        return LpResult("unbounded")
    x = tab.solution()
    return LpResult("optimal", float(c @ x), x)


def feasible_point(F, f, tol: float = 1e-9) -> np.ndarray | None:
    """A point of {x : F x <= f}, or None if the system is infeasible."""
    F = np.atleast_2d(np.asarray(F, dtype=float))
    f = np.asarray(f, dtype=float).reshape(-1)
    if F.shape[0] == 0:
        return np.zeros(F.shape[1])
    tab = _Tableau(F, f)
    if not tab.phase1(tol):
        return None
    return tab.solution()


@dataclass(frozen=True)
class Polytope:
    """{x : F x <= f} with unit-norm rows (bounds rescaled to match)."""

    F: np.ndarray
    f: np.ndarray

    def __post_init__(self):
        F = np.atleast_2d(np.asarray(self.F, dtype=float))
        f = np.asarray(self.f, dtype=float).reshape(-1)
        if F.shape[0] != f.shape[0]:
            raise ValueError(f"row count mismatch: F has {F.shape[0]}, f has {f.shape[0]}")
        if not np.all(np.isfinite(F)) or not np.all(np.isfinite(f)):
            raise ValueError("polytope entries must be finite")
        norms = np.linalg.norm(F, axis=1)
        if F.shape[0] and norms.min() < 1e-14:
            raise ValueError("zero row in polytope")
        if F.shape[0]:
            F = F / norms[:, None]
            f = f / norms
        object.__setattr__(self, "F", F)
        object.__setattr__(self, "f", f)

    @classmethod
    def box(cls, lo, hi) -> "Polytope":
        lo = np.asarray(lo, dtype=float).reshape(-1)
        hi = np.asarray(hi, dtype=float).reshape(-1)
        n = lo.shape[0]
        eye = np.eye(n)
        return cls(np.vstack([eye, -eye]), np.concatenate([hi, -lo]))

    @property
    def dim(self) -> int:
        return self.F.shape[1]

    @property
    def nrows(self) -> int:
        return self.F.shape[0]

    def with_rows(self, F_new, f_new) -> "Polytope":
        return Polytope(np.vstack([self.F, np.atleast_2d(F_new)]),
                        np.concatenate([self.f, np.atleast_1d(f_new)]))


@dataclass(frozen=True)
class LpProblem:
    """Maximize objective.x over a polytope."""

    objective: np.ndarray
    region: Polytope

    def __post_init__(self):
        c = np.asarray(self.objective, dtype=float).reshape(-1)
        if c.shape[0] != self.region.dim:
            raise ValueError(f"objective has length {c.shape[0]}, region dim {self.region.dim}")
        object.__setattr__(self, "objective", c)


def contains(P: Polytope, x, tol: float = 0.0) -> bool:
    """True iff F x <= f + tol elementwise."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != P.dim:
        raise ValueError(f"point has length {x.shape[0]}, polytope dim {P.dim}")
    if tol < 0:
        raise ValueError("tol must be >= 0")
    return bool(np.all(P.F @ x <= P.f + tol))


def lp_max(problem: LpProblem) -> LpResult:
    return simplex_max(problem.objective, problem.region.F, problem.region.f)


def remove_redundant(P: Polytope, tol: float = REDUNDANCY_TOL) -> Polytope:
    """Minimal representation: drop every row whose removal does not enlarge the set.

    Rows are tested sequentially against the current working set, so duplicate
    rows collapse to a single representative.
    """
    if feasible_point(P.F, P.f) is None:
        raise ValueError("cannot reduce an empty polytope")
    keep = list(range(P.nrows))
    i = 0
    while i < len(keep):
        others = keep[:i] + keep[i + 1:]
        res = simplex_max(P.F[keep[i]], P.F[others], P.f[others])
        redundant = res.status == "optimal" and res.value <= P.f[keep[i]] + tol
        if redundant:
            keep.pop(i)
        else:
            i += 1
    return Polytope(P.F[keep], P.f[keep])


def spectral_radius(A: np.ndarray) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(A))))


def maximal_invariant_set(A_closed: np.ndarray, C: Polytope,
                          max_iter: int = 200) -> Polytope:
    """Largest set O inside C with A_closed O inside O, for stable A_closed.

    Pre-image iteration: starting from C, rows F A^t x <= f are appended for
    increasing t until every candidate row is already implied by the current
    set (all supports within REDUNDANCY_TOL). The result is returned in
    minimal representation.
    """
    A_closed = np.atleast_2d(np.asarray(A_closed, dtype=float))
    if spectral_radius(A_closed) >= 1.0:
        raise ValueError("closed-loop matrix is not strictly stable")
    if C.nrows == 0 or np.any(C.f <= 0):
        raise ValueError("constraint set must contain the origin strictly")
    Fw, fw = C.F.copy(), C.f.copy()
    At = np.eye(C.dim)
    for _ in range(max_iter):
        At = At @ A_closed
        cand_F = C.F @ At
        all_inside = True
        new_F, new_f = [], []
        for i in range(C.nrows):
            norm = np.linalg.norm(cand_F[i])
            if norm < 1e-14:
                continue
            res = simplex_max(cand_F[i], Fw, fw)
            if res.status == "optimal" and res.value <= C.f[i] + REDUNDANCY_TOL:
                continue
            all_inside = False
            new_F.append(cand_F[i] / norm)
            new_f.append(C.f[i] / norm)
        if all_inside:
            return remove_redundant(Polytope(Fw, fw))
        Fw = np.vstack([Fw, np.array(new_F)])
        fw = np.concatenate([fw, np.array(new_f)])
    raise RuntimeError(f"determinedness index exceeded ({max_iter} iterations)")


def vertices_2d(P: Polytope, tol: float = 1e-8) -> np.ndarray:
    """Vertices of a bounded 2-D polytope, ordered counterclockwise."""
    if P.dim != 2:
        raise ValueError(f"vertex enumeration requires dim 2, got {P.dim}")
    verts = []
    for i in range(P.nrows):
        for j in range(i + 1, P.nrows):
            M = np.vstack([P.F[i], P.F[j]])
            if abs(np.linalg.det(M)) < 1e-12:
                continue
            v = np.linalg.solve(M, np.array([P.f[i], P.f[j]]))
            if np.all(P.F @ v <= P.f + tol):
                verts.append(v)
    unique: list[np.ndarray] = []
    for v in verts:
        if not any(np.linalg.norm(v - u) < 10 * tol for u in unique):
            unique.append(v)
    if not unique:
        return np.zeros((0, 2))
    V = np.array(unique)
    center = V.mean(axis=0)
    angles = np.arctan2(V[:, 1] - center[1], V[:, 0] - center[0])
    return V[np.argsort(angles)]
