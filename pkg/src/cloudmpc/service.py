"""HTTP service wrapping the simulator: scenarios in, traces/metrics out.

The CLI talks to this app (in-process by default, over the network with
--server); anything else that can POST JSON can drive the simulator the same
way.
"""

from __future__ import annotations

from typing import Optional

import numpy as np
from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

import cloudmpc
from cloudmpc.harness import render_terminal_set_csv, run_scenario, sweep
from cloudmpc.polytope import vertices_2d
from cloudmpc.scenario import ConfigError, ScenarioConfig, build

app = FastAPI(title="cloudmpc", version=cloudmpc.__version__)


class RunRequest(BaseModel):
    scenario: ScenarioConfig
    seed: Optional[int] = Field(default=None, ge=0)


class RunResponse(BaseModel):
    name: str
    seed: int
    trace_csv: str
    drops_csv: str
    metrics: dict


class LqrResponse(BaseModel):
    riccati_solution: list[list[float]]
    gain: list[list[float]]
    closed_loop_eigenvalue_magnitudes: list[float]


class TerminalSetResponse(BaseModel):
    rows: list[list[float]]
    bounds: list[float]
    vertices: list[list[float]]
    csv: str


class SweepRequest(BaseModel):
    scenario: ScenarioConfig
    seeds: int = Field(ge=1)


class ScenarioRequest(BaseModel):
    scenario: ScenarioConfig


def _build(config: ScenarioConfig):
    try:
        return build(config)
    except ConfigError as exc:
        raise HTTPException(
            status_code=422,
            detail={"key": exc.key, "message": str(exc)}) from exc


@app.get("/health")
def health():
    return {"status": "ok", "version": cloudmpc.__version__}


@app.post("/run", response_model=RunResponse)
def run_endpoint(request: RunRequest) -> RunResponse:
    scenario = _build(request.scenario)
    seed = request.scenario.seed if request.seed is None else request.seed
    result = run_scenario(scenario, seed=seed)
    return RunResponse(name=request.scenario.name, seed=seed,
                       trace_csv=result.trace_csv(),
                       drops_csv=result.drops_csv(),
                       metrics=result.metrics.to_dict())


@app.post("/lqr", response_model=LqrResponse)
def lqr_endpoint(request: ScenarioRequest) -> LqrResponse:
    scenario = _build(request.scenario)
    closed = scenario.lqr.closed_loop(scenario.controller_model.A,
                                      scenario.controller_model.B)
    mags = sorted(float(v) for v in np.abs(np.linalg.eigvals(closed)))
    return LqrResponse(riccati_solution=scenario.lqr.P.tolist(),
                       gain=scenario.lqr.K.tolist(),
                       closed_loop_eigenvalue_magnitudes=mags)


@app.post("/terminal-set", response_model=TerminalSetResponse)
def terminal_set_endpoint(request: ScenarioRequest) -> TerminalSetResponse:
    scenario = _build(request.scenario)
    if scenario.terminal_set is None:
        raise HTTPException(status_code=422, detail={
            "key": "terminal_set.enabled",
            "message": "terminal set computation is disabled for this scenario"})
    terminal = scenario.terminal_set
    verts = vertices_2d(terminal).tolist() if terminal.dim == 2 else []
    return TerminalSetResponse(rows=terminal.F.tolist(),
                               bounds=terminal.f.tolist(),
                               vertices=verts,
                               csv=render_terminal_set_csv(scenario))


@app.post("/sweep")
def sweep_endpoint(request: SweepRequest) -> dict:
    _build(request.scenario)  # fail fast with a structured config error
    return sweep(request.scenario, request.seeds)
