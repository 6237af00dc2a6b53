"""End-to-end scenario execution, trace/metrics computation, CSV/JSON emission.

run_scenario advances three clocks in lock step once per sampling period: the
plant (its own truth model), the controller (one-sample-delay state machine),
and the network (request dispatch with modeled latency and execution time).
Everything is a pure function of the scenario and its seed; the emitted files
are byte-reproducible.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from cloudmpc.controller import ASSISTED, MpcRequest
from cloudmpc.netsim import (CLOUD, EDGE, DropRecord, LatencyStreams, dispatch,
                             edge_policy)
from cloudmpc.scenario import Scenario, ScenarioConfig, build

TRACE_COLUMNS_FIXED = ["mode", "beta", "selected_horizon", "responses",
                       "dropped_late", "dropped_disconnected", "setpoint",
                       "setpoint_effective"]


@dataclass(frozen=True)
class TraceRow:
    cycle: int
    t: float
    state: np.ndarray
    input: np.ndarray
    mode: str
    beta: float
    selected_horizon: int | None
    responses: int
    dropped_late: int
    dropped_disconnected: int
    setpoint: float
    setpoint_effective: float


@dataclass(frozen=True)
class Metrics:
    cycles: int
    closed_loop_fraction: float
    horizon_usage: dict[str, float]
    unassisted_fraction: float
    violation_count: int
    violation_max: float
    iae_position: float
    issued: int
    delivered: int
    dropped_late: int
    dropped_disconnected: int

    def to_dict(self) -> dict:
        return {
            "cycles": self.cycles,
            "closed_loop_fraction": self.closed_loop_fraction,
            "horizon_usage": dict(sorted(self.horizon_usage.items())),
            "unassisted_fraction": self.unassisted_fraction,
            "violation_count": self.violation_count,
            "violation_max": self.violation_max,
            "iae_position": self.iae_position,
            "requests": {
                "issued": self.issued,
                "delivered": self.delivered,
                "dropped_late": self.dropped_late,
                "dropped_disconnected": self.dropped_disconnected,
            },
        }


@dataclass
class RunResult:
    scenario: Scenario
    rows: list[TraceRow]
    drops: list[DropRecord]
    metrics: Metrics

    def trace_csv(self) -> str:
        return render_trace_csv(self.scenario, self.rows)

    def drops_csv(self) -> str:
        return render_drops_csv(self.drops)

    def metrics_json(self) -> str:
        return json.dumps(self.metrics.to_dict(), indent=2, sort_keys=True) + "\n"


def run_scenario(source: Scenario | ScenarioConfig, seed: int | None = None) -> RunResult:
    """Simulate the scenario; deterministic for a fixed seed."""
    scenario = source if isinstance(source, Scenario) else build(source)
    cfg = scenario.config
    seed = cfg.seed if seed is None else seed
    dt = cfg.dt
    streams = LatencyStreams(seed)

    cloud_nodes = [(node, i) for i, node in enumerate(scenario.nodes)
                   if node.role == CLOUD]
    edge_nodes = [(node, i) for i, node in enumerate(scenario.nodes)
                  if node.role == EDGE]

    controller = scenario.controller
    state = controller.initial_state(cfg.selection_policy)
    x = scenario.initial_state()
    pending = []          # responses available to the next cycle
    pending_drops = []    # drops charged to the next cycle's row
    rows: list[TraceRow] = []
    all_drops: list[DropRecord] = []

    for k in range(scenario.n_cycles):
        t = k * dt
        sp = scenario.setpoint(t)
        responses = pending
        late = sum(1 for d in pending_drops if d.reason == "late")
        disc = sum(1 for d in pending_drops if d.reason == "disconnected")

        u, requests, state, info = controller.controller_step(
            state, x, sp, responses, t)

        # the final cycle issues nothing: there is no later cycle to serve
        placements = []
        if cloud_nodes and k + 1 < scenario.n_cycles:
            for i, req in enumerate(requests):
                node, node_index = cloud_nodes[i % len(cloud_nodes)]
                placements.append((req, node, node_index))
        if edge_nodes and k + 1 < scenario.n_cycles:
            horizon = edge_policy(state.last_used_horizon,
                                  info.mode == ASSISTED, controller.horizon_set)
            node, node_index = edge_nodes[0]
            extra = MpcRequest(id=f"c{k}-h{horizon}-edge", x_pred=requests[0].x_pred,
                               sp=sp, horizon=horizon, issue_time=t,
                               deadline=t + dt)
            placements.append((extra, node, node_index))

        pending, pending_drops = dispatch(placements, scenario.mpc_spec,
                                          streams, k, scenario.connectivity)
        all_drops.extend(pending_drops)

        rows.append(TraceRow(
            cycle=k, t=t, state=x.copy(), input=np.atleast_1d(u).copy(),
            mode=info.mode, beta=info.beta,
            selected_horizon=info.selected_horizon,
            responses=len(responses), dropped_late=late,
            dropped_disconnected=disc, setpoint=float(sp[0]),
            setpoint_effective=float(info.sp_effective[0])))

        x = scenario.plant_model.step(x, u)

    metrics = compute_metrics(scenario, rows, all_drops)
    return RunResult(scenario=scenario, rows=rows, drops=all_drops, metrics=metrics)


def compute_metrics(scenario: Scenario, rows: list[TraceRow],
                    drops: list[DropRecord]) -> Metrics:
    """Aggregate a finished trace into the summary metrics."""
    cfg = scenario.config
    n = len(rows)
    assisted = [r for r in rows if r.mode == ASSISTED]
    usage: dict[str, float] = {}
    for lo, hi in cfg.horizon_buckets:
        label = f"{lo}-{hi}"
        count = sum(1 for r in assisted
                    if r.selected_horizon is not None and lo <= r.selected_horizon <= hi)
        usage[label] = count / n if n else 0.0

    violation_count = 0
    violation_max = 0.0
    if scenario.state_rows.shape[0]:
        for r in rows:
            excess = scenario.state_rows @ r.state - scenario.state_bounds
            worst = float(excess.max())
            if worst > 1e-9:
                violation_count += 1
                violation_max = max(violation_max, worst)

    iae = float(sum(abs(r.setpoint - r.state[0]) for r in rows) * cfg.dt)
    delivered = sum(r.responses for r in rows)
    late = sum(1 for d in drops if d.reason == "late")
    disc = sum(1 for d in drops if d.reason == "disconnected")
    # in-flight responses at the end of the run were never consumed by a row
    return Metrics(
        cycles=n,
        closed_loop_fraction=len(assisted) / n if n else 0.0,
        horizon_usage=usage,
        unassisted_fraction=1.0 - (len(assisted) / n if n else 0.0),
        violation_count=violation_count,
        violation_max=violation_max,
        iae_position=iae,
        issued=delivered + late + disc,
        delivered=delivered,
        dropped_late=late,
        dropped_disconnected=disc,
    )


def _fmt(value: float) -> str:
    return f"{value:.9g}"


def render_trace_csv(scenario: Scenario, rows: list[TraceRow]) -> str:
    n = scenario.controller_model.n
    m = scenario.controller_model.m
    header = (["t"] + [f"x{i + 1}" for i in range(n)] + [f"u{j + 1}" for j in range(m)]
              + TRACE_COLUMNS_FIXED)
    lines = [",".join(header)]
    for r in rows:
        cells = [_fmt(r.t)]
        cells += [_fmt(v) for v in r.state]
        cells += [_fmt(v) for v in r.input]
        cells += [r.mode, _fmt(r.beta),
                  "" if r.selected_horizon is None else str(r.selected_horizon),
                  str(r.responses), str(r.dropped_late), str(r.dropped_disconnected),
                  _fmt(r.setpoint), _fmt(r.setpoint_effective)]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def render_drops_csv(drops: list[DropRecord]) -> str:
    lines = ["cycle,t_issue,horizon,node,reason,completion_time"]
    for d in drops:
        lines.append(",".join([str(d.cycle), _fmt(d.t_issue), str(d.horizon),
                               d.node, d.reason, _fmt(d.completion_time)]))
    return "\n".join(lines) + "\n"


def render_terminal_set_csv(scenario: Scenario) -> str:
    """Polytope rows, and enumerated vertices for 2-D sets."""
    from cloudmpc.polytope import vertices_2d

    terminal = scenario.terminal_set
    if terminal is None:
        raise ValueError("scenario has no terminal set (terminal_set.enabled=false)")
    n = terminal.dim
    lines = ["kind," + ",".join(f"c{i + 1}" for i in range(n)) + ",bound"]
    for row, bound in zip(terminal.F, terminal.f):
        lines.append("row," + ",".join(_fmt(v) for v in row) + "," + _fmt(bound))
    if n == 2:
        for v in vertices_2d(terminal):
            lines.append("vertex," + ",".join(_fmt(c) for c in v) + ",")
    return "\n".join(lines) + "\n"


def sweep(config: ScenarioConfig, n_seeds: int) -> dict:
    """Run seeds seed..seed+n_seeds-1 and aggregate scalar metrics (mean/std)."""
    if n_seeds < 1:
        raise ValueError("n_seeds must be >= 1")
    scenario = build(config)
    per_seed = []
    for offset in range(n_seeds):
        result = run_scenario(scenario, seed=config.seed + offset)
        per_seed.append(result.metrics.to_dict())

    scalars = ["closed_loop_fraction", "unassisted_fraction", "violation_count",
               "violation_max", "iae_position"]
    aggregate: dict[str, dict] = {"mean": {}, "std": {}}
    for key in scalars:
        values = np.array([m[key] for m in per_seed], dtype=float)
        aggregate["mean"][key] = float(values.mean())
        aggregate["std"][key] = float(values.std())
    for label in per_seed[0]["horizon_usage"]:
        values = np.array([m["horizon_usage"][label] for m in per_seed])
        aggregate["mean"][f"horizon_usage.{label}"] = float(values.mean())
        aggregate["std"][f"horizon_usage.{label}"] = float(values.std())
    drop_fraction = np.array(
        [m["requests"]["dropped_late"] / max(1, m["requests"]["issued"])
         for m in per_seed])
    aggregate["mean"]["drop_fraction_late"] = float(drop_fraction.mean())
    aggregate["std"]["drop_fraction_late"] = float(drop_fraction.std())
    return {"seeds": n_seeds, "base_seed": config.seed,
            "per_seed": per_seed, "aggregate": aggregate}
