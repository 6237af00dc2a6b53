import numpy as np
import pytest

from cloudmpc.controller import (ASSISTED, LOCAL, TRANSITION, AssistController,
                                 ControllerState, MpcResponse, blend,
                                 local_setpoint_limit, select_response,
                                 update_beta)
from cloudmpc.lqr import control_law
from cloudmpc.mpc import MpcPlan


def make_plan(horizon, feasible=True, first=1.0):
    inputs = None
    if feasible:
        inputs = np.linspace(first, first + horizon - 1, horizon).reshape(-1, 1)
    return MpcPlan(horizon=horizon, inputs=inputs, feasible=feasible,
                   iterations=3, objective=1.0 if feasible else None)


def make_response(horizon, feasible=True, completion=0.01, first=1.0):
    return MpcResponse(request_id=f"r{horizon}", horizon=horizon,
                       plan=make_plan(horizon, feasible, first),
                       completion_time=completion)


class TestSelectResponse:
    def test_shortest(self):
        picked = select_response([make_response(8), make_response(13)], "shortest")
        assert picked.horizon == 8

    def test_longest(self):
        picked = select_response([make_response(8), make_response(13)], "longest")
        assert picked.horizon == 13

    def test_empty(self):
        assert select_response([], "shortest") is None

    def test_feasibility_filter_precedes_policy(self):
        responses = [make_response(5, feasible=False), make_response(10)]
        assert select_response(responses, "shortest").horizon == 10

    def test_all_infeasible(self):
        responses = [make_response(5, feasible=False),
                     make_response(9, feasible=False)]
        assert select_response(responses, "shortest") is None

    def test_unknown_policy(self):
        with pytest.raises(ValueError):
            select_response([make_response(8)], "median")


class TestBlend:
    def test_endpoints_and_midpoint(self):
        u_l, u_r = np.array([2.0]), np.array([0.0])
        assert blend(1.0, u_l, u_r)[0] == 2.0
        assert blend(0.0, u_l, u_r)[0] == 0.0
        assert blend(0.5, u_l, u_r)[0] == 1.0

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            blend(1.2, np.zeros(1), np.zeros(1))
        with pytest.raises(ValueError):
            blend(-0.1, np.zeros(1), np.zeros(1))


class TestUpdateBeta:
    def test_fresh_response_resets(self):
        state = ControllerState(beta=0.9, buffer=(np.zeros(1),))
        assert update_beta(state, True, beta_min=0.0) == 0.0
        assert update_beta(state, True, beta_min=0.2) == 0.2

    def test_geometric_approach_to_one(self):
        state = ControllerState(beta=0.0, buffer=(np.zeros(1),) * 5)
        values = []
        for _ in range(3):
            beta = update_beta(state, False, shift_rate=0.5)
            values.append(beta)
            state = ControllerState(beta=beta, buffer=state.buffer)
        assert values == [0.5, 0.75, 0.875]

    def test_exhausted_buffer_forces_local(self):
        state = ControllerState(beta=0.3, buffer=())
        assert update_beta(state, False) == 1.0

    def test_zero_rate_freezes(self):
        state = ControllerState(beta=0.0, buffer=(np.zeros(1),))
        assert update_beta(state, False, shift_rate=0.0) == 0.0


class TestLocalSetpointLimit:
    def test_upper_clamp(self):
        sp = local_setpoint_limit([0.52, 0.0], [0.0, 0.0], 0.4)
        assert sp[0] == pytest.approx(0.4)

    def test_within_range_unchanged(self):
        sp = local_setpoint_limit([0.3, 0.0], [0.0, 0.0], 0.4)
        assert sp[0] == pytest.approx(0.3)

    def test_lower_clamp(self):
        sp = local_setpoint_limit([-0.52, 0.0], [0.3, 0.0], 0.4)
        assert sp[0] == pytest.approx(-0.1)

    def test_none_disables(self):
        sp = local_setpoint_limit([7.0, 0.0], [0.0, 0.0], None)
        assert sp[0] == 7.0

    def test_invalid_range(self):
        with pytest.raises(ValueError):
            local_setpoint_limit([1.0], [0.0], 0.0)


@pytest.fixture
def controller(example_model, example_lqr):
    return AssistController(model=example_model, gain=example_lqr.K,
                            horizon_set=(5, 8, 10, 13), local_range=0.4)


class TestControllerStep:
    def test_assisted_applies_first_input_exactly(self, controller):
        state = controller.initial_state()
        x = np.array([0.5, 0.0])
        responses = [make_response(8, first=3.25)]
        u, requests, state, info = controller.controller_step(
            state, x, np.zeros(2), responses, 0.0)
        assert u[0] == 3.25
        assert info.mode == ASSISTED
        assert state.mode == ASSISTED
        assert state.beta == 0.0
        assert state.last_used_horizon == 8
        assert len(state.buffer) == 7
        assert len(requests) == 4
        assert all(r.deadline == pytest.approx(r.issue_time + 0.05)
                   for r in requests)

    def test_requests_predict_one_step_ahead(self, controller, example_model):
        state = controller.initial_state()
        x = np.array([0.5, 0.0])
        u, requests, _, _ = controller.controller_step(
            state, x, np.zeros(2), [make_response(5, first=-1.0)], 0.0)
        expected = example_model.A @ x + example_model.B @ u
        for r in requests:
            assert np.allclose(r.x_pred, expected, atol=0)

    def test_transition_blends_buffer_and_local(self, controller, example_lqr):
        state = controller.initial_state()
        x = np.array([0.5, 0.0])
        _, _, state, _ = controller.controller_step(
            state, x, np.zeros(2), [make_response(8, first=2.0)], 0.0)
        buffered_next = state.buffer[0].copy()
        u, _, state, info = controller.controller_step(
            state, x, np.zeros(2), [], 0.05)
        assert info.mode == TRANSITION
        assert info.beta == 0.5
        u_local = control_law(example_lqr.K, info.sp_effective, x)
        assert np.allclose(u, 0.5 * u_local + 0.5 * buffered_next, atol=1e-12)
        assert len(state.buffer) == 6

    def test_open_loop_replay_with_frozen_beta(self, example_model, example_lqr):
        controller = AssistController(model=example_model, gain=example_lqr.K,
                                      horizon_set=(8,), local_range=None,
                                      beta_min=0.0, beta_shift_rate=0.0)
        state = controller.initial_state()
        x = np.array([0.5, 0.0])
        plan = make_plan(8, first=4.0)
        _, _, state, _ = controller.controller_step(
            state, x, np.zeros(2), [make_response(8, first=4.0)], 0.0)
        for i in range(1, 8):
            u, _, state, info = controller.controller_step(
                state, x, np.zeros(2), [], i * 0.05)
            assert u[0] == plan.inputs[i][0]   # verbatim replay
        # exhausted buffer: transition has handed over
        assert state.mode == LOCAL
        assert state.beta == 1.0
        u, _, state, info = controller.controller_step(
            state, x, np.zeros(2), [], 8 * 0.05)
        assert info.mode == LOCAL

    def test_buffer_never_rereads(self, controller):
        state = controller.initial_state()
        x = np.array([0.5, 0.0])
        _, _, state, _ = controller.controller_step(
            state, x, np.zeros(2), [make_response(5, first=1.0)], 0.0)
        seen = []
        t = 0.05
        while state.buffer:
            u, _, state, _ = controller.controller_step(state, x, np.zeros(2), [], t)
            seen.append(round(float(u[0]), 9))
            t += 0.05
        assert len(seen) == len(set(seen)) == 4  # horizon 5 leaves 4 tail inputs

    def test_local_path_uses_clamped_setpoint(self, controller, example_lqr):
        state = controller.initial_state()
        x = np.array([0.0, 0.0])
        sp = np.array([0.52, 0.0])
        u, _, state, info = controller.controller_step(state, x, sp, [], 0.0)
        assert info.mode == LOCAL
        assert state.beta == 1.0
        assert info.sp_effective[0] == pytest.approx(0.4)
        expected = control_law(example_lqr.K, [0.4, 0.0], x)
        assert np.allclose(u, expected, atol=0)

    def test_recovery_is_instantaneous(self, controller):
        state = controller.initial_state()
        x = np.array([0.5, 0.0])
        _, _, state, _ = controller.controller_step(
            state, x, np.zeros(2), [make_response(8)], 0.0)
        _, _, state, info = controller.controller_step(
            state, x, np.zeros(2), [], 0.05)
        assert info.mode == TRANSITION
        _, _, state, info = controller.controller_step(
            state, x, np.zeros(2), [make_response(13)], 0.10)
        assert info.mode == ASSISTED
        assert state.last_used_horizon == 13

    def test_setpoint_jump_invalidates_buffer(self, controller):
        state = controller.initial_state()
        x = np.array([0.5, 0.0])
        _, _, state, _ = controller.controller_step(
            state, x, np.zeros(2), [make_response(8)], 0.0)
        # set-point moves beyond the local range: drop straight to local
        sp = np.array([1.5, 0.0])
        _, _, state, info = controller.controller_step(state, x, sp, [], 0.05)
        assert info.mode == LOCAL
        assert state.buffer == ()

    def test_beta_monotone_between_misses(self, controller):
        state = controller.initial_state()
        x = np.array([0.5, 0.0])
        _, _, state, _ = controller.controller_step(
            state, x, np.zeros(2), [make_response(13)], 0.0)
        betas = []
        for i in range(1, 9):
            _, _, state, info = controller.controller_step(
                state, x, np.zeros(2), [], i * 0.05)
            betas.append(info.beta)
        assert all(b2 >= b1 for b1, b2 in zip(betas, betas[1:]))
