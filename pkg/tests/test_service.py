import numpy as np
import pytest
from fastapi.testclient import TestClient

from cloudmpc.service import app
from cloudmpc.presets import ball_and_beam, second_order_example

from conftest import EXAMPLE_GAIN, TERMINAL_POLYGON


@pytest.fixture(scope="module")
def client():
    return TestClient(app)


@pytest.fixture(scope="module")
def example_payload():
    return second_order_example(duration=1.0, horizons=[8]).model_dump(mode="json")


def test_health(client):
    data = client.get("/health").json()
    assert data["status"] == "ok"


def test_run_endpoint(client, example_payload):
    resp = client.post("/run", json={"scenario": example_payload})
    assert resp.status_code == 200
    data = resp.json()
    assert data["trace_csv"].startswith("t,x1,x2,u1,mode")
    assert data["drops_csv"].startswith("cycle,")
    assert 0.0 <= data["metrics"]["closed_loop_fraction"] <= 1.0
    assert data["seed"] == example_payload["seed"]


def test_run_seed_override(client, example_payload):
    resp = client.post("/run", json={"scenario": example_payload, "seed": 7})
    assert resp.json()["seed"] == 7


def test_run_rejects_unknown_key(client, example_payload):
    bad = dict(example_payload)
    bad["latency_budget"] = 1
    resp = client.post("/run", json={"scenario": bad})
    assert resp.status_code == 422
    assert "latency_budget" in resp.text


def test_run_rejects_inconsistent_config(client, example_payload):
    bad = dict(example_payload)
    bad["cost"] = {"Q": [[1.0]], "R": [[1.0]]}
    resp = client.post("/run", json={"scenario": bad})
    assert resp.status_code == 422
    assert "cost.Q" in resp.json()["detail"]["key"]


def test_lqr_endpoint(client, example_payload):
    resp = client.post("/lqr", json={"scenario": example_payload})
    assert resp.status_code == 200
    data = resp.json()
    gain = np.array(data["gain"])
    assert np.max(np.abs(gain[0] - EXAMPLE_GAIN)) < 1e-3
    assert all(0 < m < 1 for m in data["closed_loop_eigenvalue_magnitudes"])


def test_terminal_set_endpoint(client, example_payload):
    resp = client.post("/terminal-set", json={"scenario": example_payload})
    assert resp.status_code == 200
    data = resp.json()
    verts = np.array(data["vertices"])
    assert verts.shape == (8, 2)
    for target in TERMINAL_POLYGON:
        assert np.min(np.max(np.abs(verts - target), axis=1)) < 1e-2
    assert "vertex," in data["csv"]


def test_terminal_set_disabled_is_config_error(client, example_payload):
    cfg = dict(example_payload)
    cfg["terminal_set"] = {"enabled": False}
    resp = client.post("/terminal-set", json={"scenario": cfg})
    assert resp.status_code == 422


def test_sweep_endpoint(client):
    cfg = ball_and_beam(duration=1.0).model_dump(mode="json")
    resp = client.post("/sweep", json={"scenario": cfg, "seeds": 2})
    assert resp.status_code == 200
    data = resp.json()
    assert data["seeds"] == 2
    assert "closed_loop_fraction" in data["aggregate"]["mean"]


def test_sweep_requires_positive_seeds(client, example_payload):
    resp = client.post("/sweep", json={"scenario": example_payload, "seeds": 0})
    assert resp.status_code == 422
