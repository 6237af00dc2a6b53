"""Built-in scenario configurations.

`second_order_example` is a flat two-state regulator (start at (3.2, 0.15),
box constraints, terminal set shaped by the local controller's trusted input
range of 1.75) that exercises every controller mode in a handful of cycles.
`ball_and_beam` is the evaluation plant: a triple-integrator chain discretized
at 20 Hz with hard position limits at the beam ends. The ball-and-beam gains
and physical constants are engineering defaults; every value can be
overridden through the scenario file.
"""

from __future__ import annotations

from cloudmpc.scenario import ScenarioConfig, load_config

SECOND_ORDER_A = [[0.9752, 1.4544], [-0.0327, 0.9315]]
SECOND_ORDER_B = [[0.0248], [0.0327]]
SECOND_ORDER_A_MISMATCHED = [[0.95, 1.4544], [-0.0327, 0.9315]]

BALL_AND_BEAM_ACCEL_PER_RAD = 7.0    # m/s^2 of ball acceleration per rad of beam angle
BALL_AND_BEAM_RAD_PER_VS = 4.4       # rad/s of beam angle per volt
BEAM_LIMIT = 0.55
ANGLE_LIMIT = 0.785
VOLT_LIMIT = 10.0


def second_order_example(**overrides) -> ScenarioConfig:
    """Regulator example: drive (3.2, 0.15) to the origin inside a flat box."""
    data = {
        "name": "second-order-example",
        "dt": 0.05,
        "duration": 3.0,
        "seed": 0,
        "initial_state": [3.2, 0.15],
        "controller_model": {"kind": "discrete", "A": SECOND_ORDER_A,
                              "B": SECOND_ORDER_B},
        "cost": {"Q": [[10.0, 0.0], [0.0, 10.0]], "R": [[1.0]]},
        "constraints": {
            "state_rows": [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]],
            "state_bounds": [5.0, 0.2, 5.0, 0.2],
        },
        "terminal_set": {"enabled": True, "input_limit": 1.75},
        "horizons": [5, 8, 10, 13],
        "nodes": [{"name": "cloud"}],
        "setpoint_profile": [[0.0, 0.0]],
        "local_setpoint_range": None,
    }
    data.update(overrides)
    return load_config(data)


def ball_and_beam(**overrides) -> ScenarioConfig:
    """Ball-and-beam tracking scenario: +-0.52 set-point steps over 12 s."""
    kv, kp = BALL_AND_BEAM_ACCEL_PER_RAD, BALL_AND_BEAM_RAD_PER_VS
    data = {
        "name": "ball-and-beam",
        "dt": 0.05,
        "duration": 12.0,
        "seed": 0,
        "controller_model": {
            "kind": "continuous",
            "Ac": [[0.0, 1.0, 0.0], [0.0, 0.0, -kv], [0.0, 0.0, 0.0]],
            "Bc": [[0.0], [0.0], [kp]],
        },
        "cost": {"Q": [[100.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 0.0]],
                 "R": [[1.0]]},
        "constraints": {
            "state_rows": [[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0],
                           [0.0, 0.0, 1.0], [0.0, 0.0, -1.0]],
            "state_bounds": [BEAM_LIMIT, BEAM_LIMIT, ANGLE_LIMIT, ANGLE_LIMIT],
            "input_limit": VOLT_LIMIT,
        },
        "horizons": list(range(6, 23)),
        "selection_policy": "shortest",
        "nodes": [{"name": "cloud"}],
        "setpoint_profile": [[0.0, 0.0], [1.0, 0.52], [4.0, -0.52], [9.0, 0.52]],
        "local_setpoint_range": 0.4,
    }
    data.update(overrides)
    return load_config(data)


def scenario_lqr_full_range(**overrides) -> ScenarioConfig:
    """Pure local control, unlimited set-point steps (overshoots the beam ends)."""
    overrides.setdefault("name", "bb-lqr-full-range")
    overrides.setdefault("nodes", [])
    overrides.setdefault("local_setpoint_range", None)
    return ball_and_beam(**overrides)


def scenario_lqr_limited(**overrides) -> ScenarioConfig:
    """Pure local control with the 0.4 m set-point clamp."""
    overrides.setdefault("name", "bb-lqr-limited")
    overrides.setdefault("nodes", [])
    return ball_and_beam(**overrides)


def scenario_assisted_ideal(**overrides) -> ScenarioConfig:
    """Assisted controller on an ideal (zero-delay) cloud node."""
    overrides.setdefault("name", "bb-assisted-ideal")
    return ball_and_beam(**overrides)


def scenario_connection_loss(**overrides) -> ScenarioConfig:
    """Assisted controller with a 1.8 s connectivity loss from t = 3.2 s."""
    overrides.setdefault("name", "bb-connection-loss")
    overrides.setdefault("connectivity_loss", [[3.2, 5.0]])
    return ball_and_beam(**overrides)


def latency_distribution_a() -> dict:
    return {"kind": "lognormal_offset", "mu": 0.8, "sigma": 0.8, "offset_ms": 38.0}


def latency_distribution_b() -> dict:
    return {"kind": "lognormal_offset", "mu": 4.0, "sigma": 0.5, "offset_ms": 14.0}


def scenario_latency_a(**overrides) -> ScenarioConfig:
    overrides.setdefault("name", "bb-latency-a")
    overrides.setdefault("nodes", [{"name": "cloud",
                                    "latency": latency_distribution_a()}])
    return ball_and_beam(**overrides)


def scenario_latency_b(**overrides) -> ScenarioConfig:
    overrides.setdefault("name", "bb-latency-b")
    overrides.setdefault("nodes", [{"name": "cloud",
                                    "latency": latency_distribution_b()}])
    return ball_and_beam(**overrides)


def scenario_latency_b_with_edge(**overrides) -> ScenarioConfig:
    """Distribution-B cloud plus a fixed 40 ms edge node."""
    overrides.setdefault("name", "bb-latency-b-edge")
    overrides.setdefault("nodes", [{"name": "cloud",
                                    "latency": latency_distribution_b()},
                                   {"name": "edge", "role": "edge",
                                    "latency": {"kind": "fixed", "offset_ms": 40.0}}])
    return ball_and_beam(**overrides)
