import math

import numpy as np
import pytest
from fastapi.testclient import TestClient
from numpy.testing import assert_allclose

from app.api.routes import john as john_route
from app.core.errors import NotConverged
from app.main import app

client = TestClient(app)


def test_health():
    r = client.get("/health")
    assert r.status_code == 200
    assert r.json()["status"] == "ok"


def test_john(square):
    r = client.post("/api/john", json={"body": square})
    assert r.status_code == 200
    data = r.json()
    assert data["radius"] == pytest.approx(1.0, abs=1e-6)
    assert data["certificates"]["inside"]["pass"]


def test_bl_exact(disk):
    r = client.post("/api/bl", json={"body": disk, "method": "exact"})
    assert r.status_code == 200
    assert_allclose(r.json()["metric"], np.eye(2), atol=1e-9)
    assert r.json()["provenance"] == "exact"


def test_bl_sample_budget(disk):
    r = client.post("/api/bl", json={"body": disk, "method": "montecarlo", "samples": 10})
    assert r.status_code == 400
    assert "SampleBudgetTooSmall" in r.json()["detail"]


def test_dist(disk):
    r = client.post("/api/dist", json={"domain": disk, "metric": "hilbert", "p": [0, 0], "q": [0.5, 0]})
    assert r.status_code == 200
    assert r.json()["distance"] == pytest.approx(0.5 * math.log(3.0))


def test_dist_outside(disk):
    r = client.post("/api/dist", json={"domain": disk, "p": [0, 0], "q": [2, 0]})
    assert r.status_code == 400


def test_unbounded_polytope_is_a_client_error():
    strip = {"type": "polytope_h", "A": [[1, 0], [0, 1], [-1, 0]], "b": [1, 1, 1]}
    r = client.post("/api/john", json={"body": strip})
    assert r.status_code == 400
    assert r.json()["detail"].startswith("InvalidBody")


def test_norm(disk):
    r = client.post("/api/dist/norm", json={"domain": disk, "x": [0.5, 0], "xi": [1, 0]})
    assert r.status_code == 200
    assert r.json()["norm"] == pytest.approx(2.0)


def test_pathlen(disk):
    r = client.post("/api/pathlen", json={"domain": disk, "path": {"points": [[0, 0], [0.5, 0]]}})
    assert r.status_code == 200
    assert r.json()["length"] == pytest.approx(math.log(2.0), abs=1e-6)


def test_pathlen_needs_one_source(disk):
    r = client.post("/api/pathlen", json={"path": {"points": [[0, 0], [0.5, 0]]}})
    assert r.status_code == 400


def test_schema_error_is_rejected():
    r = client.post("/api/bl", json={"body": {"type": "hexagon"}})
    assert r.status_code == 422


def test_numerical_error_maps_to_422(monkeypatch, square):
    def boom(*a, **k):
        raise NotConverged("no convergence")

    monkeypatch.setattr(john_route, "john_report", boom)
    r = client.post("/api/john", json={"body": square})
    assert r.status_code == 422
