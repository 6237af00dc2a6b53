"""Seeded simulation of the cloud/edge request path.

Each request is solved at its node, charged the modeled execution time plus a
latency draw, and delivered only if it beats the controller deadline while
connectivity holds. Latency streams are keyed by (seed, cycle, horizon, node)
through counter-based generators, so changing the placement of one request
never perturbs the draws of any other.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from cloudmpc.controller import MpcResponse
from cloudmpc.mpc import MpcSpec, exec_time_model, mpc_solve

CLOUD = "cloud"
EDGE = "edge"

EDGE_DEFAULT_DELAY_MS = 40.0


@dataclass(frozen=True)
class LatencyModel:
    kind: str                 # "lognormal_offset" | "fixed"
    mu: float = 0.0           # log-space mean, in log-milliseconds
    sigma: float = 0.0        # log-space standard deviation
    offset_ms: float = 0.0

    def __post_init__(self):
        if self.kind not in ("lognormal_offset", "fixed"):
            raise ValueError(f"unknown latency kind {self.kind!r}")
        if self.sigma < 0 or self.offset_ms < 0:
            raise ValueError("sigma and offset must be nonnegative")

    @classmethod
    def fixed(cls, offset_ms: float) -> "LatencyModel":
        return cls(kind="fixed", offset_ms=offset_ms)


def sample_latency(model: LatencyModel, rng: np.random.Generator) -> float:
    """One network delay draw in seconds."""
    if model.kind == "fixed":
        return model.offset_ms / 1000.0
    draw_ms = model.offset_ms + float(np.exp(rng.normal(model.mu, model.sigma)))
    return draw_ms / 1000.0


@dataclass(frozen=True)
class NodeModel:
    name: str
    latency: LatencyModel = field(
        default_factory=lambda: LatencyModel.fixed(0.0))
    role: str = CLOUD
    capacity: int | None = None      # concurrent solves per cycle; None = unbounded

    def __post_init__(self):
        if self.role not in (CLOUD, EDGE):
            raise ValueError(f"unknown node role {self.role!r}")
        if self.capacity is not None and self.capacity < 1:
            raise ValueError("node capacity must be >= 1")

    @classmethod
    def edge(cls, name: str = "edge",
             delay_ms: float = EDGE_DEFAULT_DELAY_MS) -> "NodeModel":
        return cls(name=name, latency=LatencyModel.fixed(delay_ms), role=EDGE)


@dataclass(frozen=True)
class ConnectivitySchedule:
    """Loss windows [start, end) in seconds, applying to cloud-role nodes."""

    windows: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        prev_end = -np.inf
        for start, end in self.windows:
            if end <= start:
                raise ValueError(f"empty loss window ({start}, {end})")
            if start < prev_end:
                raise ValueError("loss windows must be ordered and non-overlapping")
            prev_end = end

    def is_connected(self, t: float) -> bool:
        return not any(start <= t < end for start, end in self.windows)


class LatencyStreams:
    """Independent, reproducible generator per (cycle, horizon, node)."""

    def __init__(self, seed: int):
        if seed < 0:
            raise ValueError("seed must be nonnegative")
        self.seed = int(seed)

    def stream(self, cycle: int, horizon: int, node_index: int) -> np.random.Generator:
        ss = np.random.SeedSequence([self.seed, cycle, horizon, node_index])
        return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class DropRecord:
    cycle: int
    t_issue: float
    horizon: int
    node: str
    reason: str              # "late" | "disconnected"
    completion_time: float


def dispatch(placements, spec: MpcSpec, streams: LatencyStreams, cycle: int,
             connectivity: ConnectivitySchedule):
    """Run every placed request; split results into deliveries and drops.

    `placements` is a sequence of (request, node, node_index). Requests on a
    capacity-limited node queue behind each other (earliest free slot, in
    placement order); everyone else runs concurrently. A cloud response is
    dropped as disconnected when the link is down at issue or at would-be
    completion; anything past the deadline is dropped as late.
    """
    responses: list[MpcResponse] = []
    drops: list[DropRecord] = []
    slots: dict[int, list[float]] = {}
    for request, node, node_index in placements:
        plan = mpc_solve(spec, request.x_pred, request.sp, request.horizon)
        rng = streams.stream(cycle, request.horizon, node_index)
        delay = sample_latency(node.latency, rng)
        exec_time = exec_time_model(plan.iterations, request.horizon)
        start = request.issue_time
        if node.capacity is not None:
            node_slots = slots.setdefault(node_index,
                                          [request.issue_time] * node.capacity)
            free = min(range(node.capacity), key=lambda i: node_slots[i])
            start = max(start, node_slots[free])
            node_slots[free] = start + exec_time
        completion = start + delay + exec_time
        if node.role == CLOUD and not (connectivity.is_connected(request.issue_time)
                                       and connectivity.is_connected(completion)):
            drops.append(DropRecord(cycle, request.issue_time, request.horizon,
                                    node.name, "disconnected", completion))
        elif completion > request.deadline + 1e-12:
            drops.append(DropRecord(cycle, request.issue_time, request.horizon,
                                    node.name, "late", completion))
        else:
            responses.append(MpcResponse(request_id=request.id,
                                         horizon=request.horizon, plan=plan,
                                         completion_time=completion))
    return responses, drops


def edge_policy(last_used_horizon: int | None, had_usable_response: bool,
                horizon_set) -> int:
    """Horizon to place at the edge this cycle.

    Normally the latest horizon used; after a cycle without a usable response
    (or before any was ever used) the largest configured horizon, to maximize
    the chance of restoring closed-loop operation.
    """
    if had_usable_response and last_used_horizon is not None:
        return int(last_used_horizon)
    return int(max(horizon_set))
