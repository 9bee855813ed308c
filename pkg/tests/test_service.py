import math

import pytest
from fastapi.testclient import TestClient

from alignlab.service import create_app


@pytest.fixture(scope="module")
def client():
    with TestClient(create_app()) as c:
        yield c


def test_health(client):
    res = client.get("/v1/health")
    assert res.status_code == 200
    body = res.json()
    assert body["status"] == "ok"


def test_score_endpoint(client):
    res = client.post("/v1/score", json={"x": "1101", "y": "1011"})
    assert res.status_code == 200
    body = res.json()
    assert body["rows"][0]["name"] == "score"
    assert body["rows"][0]["value"] == 3.0
    assert body["flags"] == []
    assert body["manifest"]["command"] == "score"


def test_score_with_scheme(client):
    scheme = {"alphabet_size": 2, "score": [[0, 1], [1, 0]], "gap_price": "-1/2"}
    res = client.post("/v1/score", json={"x": "0", "y": "1", "scheme": scheme})
    assert res.status_code == 200
    assert res.json()["rows"][0]["value"] == 1.0


def test_bounds_endpoint(client):
    res = client.post("/v1/bounds", json={"p": 0.5, "eps0": 0.2, "r_list": [2.0]})
    assert res.status_code == 200
    values = {row["name"]: row["value"] for row in res.json()["rows"]}
    assert values["C(2)"] == pytest.approx(1 + math.log(2), abs=1e-12)
    assert values["D(2)"] == pytest.approx(2.0)


def test_moments_endpoint(client):
    res = client.post(
        "/v1/simulate-moments",
        json={"n": 20, "p": 0.5, "reps": 300, "seed": 4, "r_list": [2.0]},
    )
    assert res.status_code == 200
    body = res.json()
    names = [row["name"] for row in body["rows"]]
    assert "mean_score" in names and "central_abs_moment(2)" in names
    assert body["manifest"]["config"]["seed"] == 4


def test_transform_endpoint_flags(client):
    res = client.post(
        "/v1/transform", json={"n": 50, "p": 0.1, "reps": 200, "seed": 42}
    )
    assert res.status_code == 200
    assert "eps0-not-found" in res.json()["flags"]


def test_semantic_validation_maps_to_400(client):
    res = client.post(
        "/v1/simulate-moments", json={"n": 20, "p": 1.5, "reps": 100}
    )
    assert res.status_code == 400
    assert "p must lie" in res.json()["detail"]


def test_type_validation_maps_to_422(client):
    res = client.post("/v1/simulate-moments", json={"n": "twenty"})
    assert res.status_code == 422


def test_ell_profile_endpoint(client):
    res = client.post(
        "/v1/ell-profile",
        json={"n": 10, "reps": 200, "seed": 2, "u_lo": 8, "u_hi": 12},
    )
    assert res.status_code == 200
    names = [row["name"] for row in res.json()["rows"]]
    assert "ell(8)" in names
    assert "slope(8->9)" in names
