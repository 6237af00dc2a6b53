"""Scenario configuration: JSON schema, validation, and runtime assembly.

A scenario file is a single JSON object mirroring ScenarioConfig; unknown keys
are rejected. `build()` turns a validated config into the runtime objects
(models, LQR solution, terminal set, MPC spec, controller, nodes), raising
ConfigError with the offending key path on any inconsistency that the field
validators cannot see.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from cloudmpc.controller import AssistController
from cloudmpc.linear import ContinuousLinearModel, DiscreteLinearModel, zoh_discretize
from cloudmpc.lqr import CostSpec, LqrSolution, solve_dare
from cloudmpc.mpc import ConstraintSet, MpcSpec
from cloudmpc.netsim import (EDGE_DEFAULT_DELAY_MS, ConnectivitySchedule,
                             LatencyModel, NodeModel)
from cloudmpc.polytope import Polytope, maximal_invariant_set


class ConfigError(ValueError):
    """Invalid scenario configuration; `key` names the offending entry."""

    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"{key}: {message}")


class LatencyConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")
    kind: Literal["fixed", "lognormal_offset"] = "fixed"
    mu: float = 0.0
    sigma: float = Field(default=0.0, ge=0.0)
    offset_ms: float = Field(default=0.0, ge=0.0)

    def build(self) -> LatencyModel:
        return LatencyModel(kind=self.kind, mu=self.mu, sigma=self.sigma,
                            offset_ms=self.offset_ms)


class NodeConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")
    name: str
    role: Literal["cloud", "edge"] = "cloud"
    latency: Optional[LatencyConfig] = None
    capacity: Optional[int] = Field(default=None, ge=1)

    def build(self) -> NodeModel:
        if self.latency is not None:
            lat = self.latency.build()
        elif self.role == "edge":
            lat = LatencyModel.fixed(EDGE_DEFAULT_DELAY_MS)
        else:
            lat = LatencyModel.fixed(0.0)
        return NodeModel(name=self.name, latency=lat, role=self.role,
                         capacity=self.capacity)


class ModelConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")
    kind: Literal["discrete", "continuous"]
    A: Optional[list[list[float]]] = None
    B: Optional[list[list[float]]] = None
    Ac: Optional[list[list[float]]] = None
    Bc: Optional[list[list[float]]] = None

    @model_validator(mode="after")
    def _check_fields(self):
        if self.kind == "discrete" and (self.A is None or self.B is None):
            raise ValueError("discrete model requires A and B")
        if self.kind == "continuous" and (self.Ac is None or self.Bc is None):
            raise ValueError("continuous model requires Ac and Bc")
        return self

    def build(self, dt: float, key: str) -> DiscreteLinearModel:
        try:
            if self.kind == "discrete":
                return DiscreteLinearModel(A=self.A, B=self.B, dt=dt)
            return zoh_discretize(ContinuousLinearModel(Ac=self.Ac, Bc=self.Bc), dt)
        except ValueError as exc:
            raise ConfigError(key, str(exc)) from exc


class CostConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")
    Q: list[list[float]]
    R: list[list[float]]

    def build(self, key: str) -> CostSpec:
        try:
            return CostSpec(Q=self.Q, R=self.R)
        except ValueError as exc:
            raise ConfigError(key, str(exc)) from exc


class ConstraintsConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")
    state_rows: list[list[float]] = Field(default_factory=list)
    state_bounds: list[float] = Field(default_factory=list)
    input_limit: Optional[float] = Field(default=None, gt=0.0)

    @model_validator(mode="after")
    def _check_rows(self):
        if len(self.state_rows) != len(self.state_bounds):
            raise ValueError("state_rows and state_bounds must have equal length")
        return self


class TerminalSetConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")
    enabled: bool = True
    input_limit: Optional[float] = Field(default=None, gt=0.0)
    max_iter: int = Field(default=200, ge=1)


class BetaConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")
    beta_min: float = Field(default=0.0, ge=0.0, le=1.0)
    shift_rate: float = Field(default=0.5, ge=0.0, le=1.0)


DEFAULT_HORIZONS = list(range(6, 23))
DEFAULT_BUCKETS = [[6, 10], [11, 15], [16, 22]]


class ScenarioConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")
    name: str = "scenario"
    dt: float = Field(default=0.05, gt=0.0)
    duration: float = Field(gt=0.0)
    seed: int = Field(default=0, ge=0)
    initial_state: Optional[list[float]] = None
    controller_model: ModelConfig
    plant_model: Optional[ModelConfig] = None
    cost: CostConfig
    constraints: ConstraintsConfig = Field(default_factory=ConstraintsConfig)
    terminal_set: TerminalSetConfig = Field(default_factory=TerminalSetConfig)
    horizons: list[int] = Field(default_factory=lambda: list(DEFAULT_HORIZONS))
    selection_policy: Literal["shortest", "longest"] = "shortest"
    nodes: list[NodeConfig] = Field(default_factory=list)
    connectivity_loss: list[list[float]] = Field(default_factory=list)
    setpoint_profile: list[list[float]] = Field(default_factory=lambda: [[0.0, 0.0]])
    local_setpoint_range: Optional[float] = Field(default=0.4, gt=0.0)
    beta: BetaConfig = Field(default_factory=BetaConfig)
    horizon_buckets: list[list[int]] = Field(default_factory=lambda: [list(b) for b in DEFAULT_BUCKETS])

    @model_validator(mode="after")
    def _check(self):
        hs = self.horizons
        if not hs or any(b <= a for a, b in zip(hs, hs[1:])) or hs[0] < 1:
            raise ValueError("horizons: must be nonempty, ascending, positive")
        times = [row[0] for row in self.setpoint_profile]
        if any(len(row) != 2 for row in self.setpoint_profile):
            raise ValueError("setpoint_profile: each entry must be [time, value]")
        if not times or times[0] > 0.0:
            raise ValueError("setpoint_profile: must start at time 0")
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("setpoint_profile: times must be strictly ascending")
        for w in self.connectivity_loss:
            if len(w) != 2 or w[1] <= w[0]:
                raise ValueError("connectivity_loss: windows must be [start, end] with end > start")
        for lo, hi in zip(self.connectivity_loss, self.connectivity_loss[1:]):
            if hi[0] < lo[1]:
                raise ValueError("connectivity_loss: windows must be ordered and non-overlapping")
        if sum(1 for nc in self.nodes if nc.role == "edge") > 1:
            raise ValueError("nodes: at most one edge node is supported")
        names = [nc.name for nc in self.nodes]
        if len(set(names)) != len(names):
            raise ValueError("nodes: names must be unique")
        for b in self.horizon_buckets:
            if len(b) != 2 or b[1] < b[0]:
                raise ValueError("horizon_buckets: each bucket is [lo, hi] with hi >= lo")
        return self


@dataclass
class Scenario:
    """Validated, fully assembled runtime scenario."""

    config: ScenarioConfig
    controller_model: DiscreteLinearModel
    plant_model: DiscreteLinearModel
    cost: CostSpec
    lqr: LqrSolution
    mpc_spec: MpcSpec
    controller: AssistController
    nodes: list[NodeModel]
    connectivity: ConnectivitySchedule
    state_rows: np.ndarray
    state_bounds: np.ndarray

    @property
    def dt(self) -> float:
        return self.config.dt

    @property
    def n_cycles(self) -> int:
        return int(round(self.config.duration / self.config.dt))

    @property
    def terminal_set(self) -> Polytope | None:
        return self.mpc_spec.terminal_set

    def setpoint(self, t: float) -> np.ndarray:
        pos = self.config.setpoint_profile[0][1]
        for time, value in self.config.setpoint_profile:
            if time <= t + 1e-12:
                pos = value
            else:
                break
        sp = np.zeros(self.controller_model.n)
        sp[0] = pos
        return sp

    def initial_state(self) -> np.ndarray:
        if self.config.initial_state is None:
            return np.zeros(self.controller_model.n)
        return np.asarray(self.config.initial_state, dtype=float)


def _stage_constraints(cfg: ScenarioConfig, n: int, m: int) -> ConstraintSet:
    rows, bounds = [], []
    for row, bound in zip(cfg.constraints.state_rows, cfg.constraints.state_bounds):
        if len(row) != n:
            raise ConfigError("constraints.state_rows",
                              f"row has {len(row)} entries, state dimension is {n}")
        rows.append(list(row) + [0.0] * m)
        bounds.append(bound)
    if cfg.constraints.input_limit is not None:
        for j in range(m):
            ej = [0.0] * n + [1.0 if i == j else 0.0 for i in range(m)]
            rows.append(ej)
            bounds.append(cfg.constraints.input_limit)
            rows.append([-v for v in ej])
            bounds.append(cfg.constraints.input_limit)
    if not rows:
        return ConstraintSet.empty(n, m)
    return ConstraintSet(G=np.array(rows), g=np.array(bounds))


def _terminal_region(cfg: ScenarioConfig, K: np.ndarray, n: int) -> Polytope:
    """Constraint region for the invariant-set computation: state rows plus the
    input bound mapped through the local law u = -K x_err."""
    F = [list(row) for row in cfg.constraints.state_rows]
    f = list(cfg.constraints.state_bounds)
    limit = cfg.terminal_set.input_limit
    if limit is None:
        limit = cfg.constraints.input_limit
    if limit is not None:
        for j in range(K.shape[0]):
            F.append(list(K[j]))
            f.append(limit)
            F.append(list(-K[j]))
            f.append(limit)
    if not F:
        raise ConfigError("terminal_set",
                          "cannot compute a terminal set without state rows or an input limit")
    try:
        return Polytope(np.array(F), np.array(f))
    except ValueError as exc:
        raise ConfigError("constraints.state_rows", str(exc)) from exc


def build(cfg: ScenarioConfig) -> Scenario:
    """Assemble the runtime scenario, raising ConfigError on inconsistencies."""
    controller_model = cfg.controller_model.build(cfg.dt, "controller_model")
    if cfg.plant_model is not None:
        plant_model = cfg.plant_model.build(cfg.dt, "plant_model")
        if plant_model.n != controller_model.n or plant_model.m != controller_model.m:
            raise ConfigError("plant_model", "dimensions differ from controller_model")
    else:
        plant_model = controller_model
    n, m = controller_model.n, controller_model.m
    cost = cfg.cost.build("cost")
    if cost.Q.shape[0] != n:
        raise ConfigError("cost.Q", f"is {cost.Q.shape}, state dimension is {n}")
    if cost.R.shape[0] != m:
        raise ConfigError("cost.R", f"is {cost.R.shape}, input dimension is {m}")
    if cfg.initial_state is not None and len(cfg.initial_state) != n:
        raise ConfigError("initial_state", f"has length {len(cfg.initial_state)}, expected {n}")

    try:
        lqr = solve_dare(controller_model, cost)
    except RuntimeError as exc:
        raise ConfigError("cost", str(exc)) from exc

    constraints = _stage_constraints(cfg, n, m)
    terminal = None
    if cfg.terminal_set.enabled:
        region = _terminal_region(cfg, lqr.K, n)
        try:
            terminal = maximal_invariant_set(
                lqr.closed_loop(controller_model.A, controller_model.B),
                region, max_iter=cfg.terminal_set.max_iter)
        except (RuntimeError, ValueError) as exc:
            raise ConfigError("terminal_set", str(exc)) from exc

    mpc_spec = MpcSpec(model=controller_model, cost=cost, terminal_cost=lqr.P,
                       constraints=constraints, terminal_set=terminal,
                       horizon_set=tuple(cfg.horizons))
    controller = AssistController(
        model=controller_model, gain=lqr.K, horizon_set=tuple(cfg.horizons),
        local_range=cfg.local_setpoint_range, beta_min=cfg.beta.beta_min,
        beta_shift_rate=cfg.beta.shift_rate)
    nodes = [nc.build() for nc in cfg.nodes]
    connectivity = ConnectivitySchedule(
        windows=tuple((float(a), float(b)) for a, b in cfg.connectivity_loss))
    state_rows = (np.array(cfg.constraints.state_rows, dtype=float)
                  if cfg.constraints.state_rows else np.zeros((0, n)))
    return Scenario(config=cfg, controller_model=controller_model,
                    plant_model=plant_model, cost=cost, lqr=lqr,
                    mpc_spec=mpc_spec, controller=controller, nodes=nodes,
                    connectivity=connectivity, state_rows=state_rows,
                    state_bounds=np.array(cfg.constraints.state_bounds, dtype=float))


def load_config(data) -> ScenarioConfig:
    """Validate a dict (or JSON text) into a ScenarioConfig.

    Raises ConfigError naming the offending key path.
    """
    if isinstance(data, (str, bytes)):
        try:
            data = json.loads(data)
        except json.JSONDecodeError as exc:
            raise ConfigError("<file>", f"invalid JSON: {exc}") from exc
    try:
        return ScenarioConfig.model_validate(data)
    except ValidationError as exc:
        first = exc.errors()[0]
        key = ".".join(str(p) for p in first["loc"]) or "<root>"
        raise ConfigError(key, first["msg"]) from exc


def load_scenario_file(path) -> Scenario:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    return build(load_config(text))
