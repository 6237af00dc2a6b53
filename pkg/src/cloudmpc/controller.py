"""Device-side dual-mode controller.

Runs on a one-sample artificial delay: every cycle it applies an input chosen
from last cycle's remote plans (or a fallback), predicts the next state with
its nominal model, and fans out one optimization request per configured
horizon for the next cycle. Degradation on missing responses goes
assisted -> transition (open-loop buffer blended with the local gain)
-> local (set-point-limited state feedback); any fresh feasible response
switches straight back to assisted.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from cloudmpc.linear import DiscreteLinearModel
from cloudmpc.lqr import control_law
from cloudmpc.mpc import MpcPlan

ASSISTED = "assisted"
TRANSITION = "transition"
LOCAL = "local"


@dataclass(frozen=True)
class MpcRequest:
    id: str
    x_pred: np.ndarray
    sp: np.ndarray
    horizon: int
    issue_time: float
    deadline: float


@dataclass(frozen=True)
class MpcResponse:
    request_id: str
    horizon: int
    plan: MpcPlan
    completion_time: float


@dataclass(frozen=True)
class ControllerState:
    mode: str = LOCAL
    beta: float = 1.0
    buffer: tuple = ()            # open-loop tail u_1..u_{N-1} of the accepted plan
    buffer_sp: np.ndarray | None = None   # set-point that tail was computed for
    selection_policy: str = "shortest"
    last_used_horizon: int | None = None
    pending_sp: np.ndarray | None = None  # set-point carried by in-flight requests


@dataclass(frozen=True)
class CycleInfo:
    """What the step actually did, for tracing."""

    mode: str
    beta: float
    selected_horizon: int | None
    sp_effective: np.ndarray
    responses_seen: int


def select_response(responses, policy: str) -> MpcResponse | None:
    """Pick among feasible responses by horizon; None if nothing usable arrived."""
    if policy not in ("shortest", "longest"):
        raise ValueError(f"unknown selection policy {policy!r}")
    usable = [r for r in responses if r.plan.feasible]
    if not usable:
        return None
    sign = 1 if policy == "shortest" else -1
    return min(usable, key=lambda r: (sign * r.horizon, r.completion_time, r.request_id))


def blend(beta: float, u_local, u_remote) -> np.ndarray:
    """Convex combination beta * u_local + (1 - beta) * u_remote."""
    if not 0.0 <= beta <= 1.0:
        raise ValueError(f"beta must be in [0, 1], got {beta}")
    u_local = np.asarray(u_local, dtype=float)
    u_remote = np.asarray(u_remote, dtype=float)
    return beta * u_local + (1.0 - beta) * u_remote


def update_beta(state: ControllerState, fresh_response: bool,
                beta_min: float = 0.0, shift_rate: float = 0.5) -> float:
    """Advance the local-controller weight.

    A fresh feasible response resets to beta_min; an exhausted buffer forces
    pure local (1.0); otherwise the remote weight (1 - beta) shrinks by
    `shift_rate` per missed cycle (exponential approach to 1), so rate 0
    freezes the blend (pure open-loop replay) and rate 1 hands over at once.
    """
    if fresh_response:
        return beta_min
    if not state.buffer:
        return 1.0
    return 1.0 - (1.0 - state.beta) * (1.0 - shift_rate)


def local_setpoint_limit(sp, x, range_: float | None, pos_index: int = 0) -> np.ndarray:
    """Clamp the position component of sp to within range_ of the current position."""
    sp = np.asarray(sp, dtype=float).reshape(-1).copy()
    if range_ is None:
        return sp
    if range_ <= 0:
        raise ValueError(f"set-point range must be positive, got {range_}")
    x = np.asarray(x, dtype=float).reshape(-1)
    pos = x[pos_index]
    sp[pos_index] = min(max(sp[pos_index], pos - range_), pos + range_)
    return sp


@dataclass(frozen=True)
class AssistController:
    """Configuration of the dual-mode controller; the state is passed explicitly."""

    model: DiscreteLinearModel          # nominal model used for the one-step prediction
    gain: np.ndarray                    # local feedback gain
    horizon_set: tuple[int, ...]
    local_range: float | None = 0.4
    beta_min: float = 0.0
    beta_shift_rate: float = 0.5
    pos_index: int = 0

    def initial_state(self, policy: str = "shortest") -> ControllerState:
        return ControllerState(selection_policy=policy)

    def local_input(self, x, sp):
        sp_eff = local_setpoint_limit(sp, x, self.local_range, self.pos_index)
        return control_law(self.gain, sp_eff, x), sp_eff

    def controller_step(self, state: ControllerState, x, sp, responses,
                        clock: float):
        """One 20 Hz cycle: choose u_k, predict x_{k+1}, emit next requests.

        Returns (u, requests, new_state, info).
        """
        x = np.asarray(x, dtype=float).reshape(-1)
        sp = np.asarray(sp, dtype=float).reshape(-1)
        chosen = select_response(responses, state.selection_policy)

        if chosen is not None:
            u = chosen.plan.inputs[0]
            beta = update_beta(state, True, self.beta_min, self.beta_shift_rate)
            tail = tuple(np.array(ui) for ui in chosen.plan.inputs[1:])
            new_state = replace(
                state, mode=ASSISTED, beta=beta, buffer=tail,
                buffer_sp=state.pending_sp if state.pending_sp is not None else sp,
                last_used_horizon=chosen.horizon)
            info = CycleInfo(ASSISTED, beta, chosen.horizon, sp, len(responses))
        elif state.buffer and self._buffer_valid(state, sp):
            beta = update_beta(state, False, self.beta_min, self.beta_shift_rate)
            u_remote = state.buffer[0]
            u_local, sp_eff = self.local_input(x, sp)
            u = blend(beta, u_local, u_remote)
            tail = state.buffer[1:]
            if tail:
                new_state = replace(state, mode=TRANSITION, beta=beta, buffer=tail)
            else:
                new_state = replace(state, mode=LOCAL, beta=1.0, buffer=(),
                                    buffer_sp=None)
            info = CycleInfo(TRANSITION, beta, None, sp_eff, len(responses))
        else:
            u, sp_eff = self.local_input(x, sp)
            new_state = replace(state, mode=LOCAL, beta=1.0, buffer=(),
                                buffer_sp=None)
            info = CycleInfo(LOCAL, 1.0, None, sp_eff, len(responses))

        x_pred = self.model.A @ x + self.model.B @ np.atleast_1d(u)
        cycle = int(round(clock / self.model.dt))
        requests = tuple(
            MpcRequest(id=f"c{cycle}-h{N}", x_pred=x_pred, sp=sp, horizon=N,
                       issue_time=clock, deadline=clock + self.model.dt)
            for N in self.horizon_set)
        new_state = replace(new_state, pending_sp=sp)
        return np.atleast_1d(u), requests, new_state, info

    def _buffer_valid(self, state: ControllerState, sp) -> bool:
        """Open-loop replay is only trusted while the set-point stays near the
        one the plan was computed for."""
        if state.buffer_sp is None or self.local_range is None:
            return True
        drift = abs(sp[self.pos_index] - state.buffer_sp[self.pos_index])
        return drift <= self.local_range
