import json

from fastapi.testclient import TestClient

from swapmech import __version__
from swapmech.service import app

client = TestClient(app)

MEMBRANE = {
    "units": "angular",
    "params": {
        "Omega": 1.0e6, "g1": 1.0e6, "g2": 1.0e6,
        "delta": 1.0e7, "Delta1": 9999999.0, "Delta2": 9999999.0,
        "gprime": 5.65e-5, "n": 2, "omega_m": 841946.86722, "mass": 4.0e-11,
    },
    "s_max": 0,
}


def test_health():
    r = client.get("/v1/health")
    assert r.status_code == 200
    assert r.json() == {"status": "ok", "version": __version__}


def test_gate_time_endpoint():
    r = client.post("/v1/gate-time", json={
        "units": "angular", "n": 2, "lambda_prime": 20.0, "s_max": 0,
    })
    assert r.status_code == 200
    body = r.json()
    assert body["subcommand"] == "gate-time"
    assert body["artifact_kind"] == "csv"
    t = float(body["artifact"].splitlines()[1].split(",")[1])
    assert abs(t - 7.87e-2) < 1e-3


def test_feasibility_endpoint():
    r = client.post("/v1/feasibility", json=MEMBRANE)
    assert r.status_code == 200
    doc = json.loads(r.json()["artifact"])
    assert abs(doc["lambda_prime"] - 2.684) / 2.684 < 0.01


def test_config_error_maps_to_422_config_kind():
    r = client.post("/v1/gate-time", json={
        "units": "angular", "n": 2, "lambda_prime": 20.0, "bogus": 7,
    })
    assert r.status_code == 422
    assert r.json()["detail"]["kind"] == "config"
    assert "bogus" in r.json()["detail"]["message"]


def test_numerical_error_maps_to_422_numerical_kind():
    r = client.post("/v1/gate-time", json={
        "units": "angular", "n": 1, "lambda_prime": 1.0,
    })
    assert r.status_code == 422
    assert r.json()["detail"]["kind"] == "numerical"


def test_strict_query_parameter():
    payload = {"units": "angular", "n": 2, "lambda_prime": 20.0, "bogus": 7}
    r = client.post("/v1/gate-time", json=payload, params={"strict": "false"})
    assert r.status_code == 200


def test_degenerate_xi_is_config_kind():
    bad = json.loads(json.dumps(MEMBRANE))
    bad["params"]["Delta1"] = bad["params"]["Delta2"] = 1.0e7  # xi = 0
    r = client.post("/v1/feasibility", json=bad)
    assert r.status_code == 422
    assert r.json()["detail"]["kind"] == "config"
    assert "xi" in r.json()["detail"]["message"]


def test_compare_endpoint_inline():
    sim = client.post("/v1/simulate-effective", json={
        "units": "angular", "n": 2, "lambda_prime": 2.0,
        "tau_span": [0.0, 1.0],
        "integrator": {"steps_per_fastest_period": 200, "sample_stride": 10},
    })
    csv = sim.json()["artifact"]
    r = client.post("/v1/compare", json={
        "units": "angular", "csv_a": csv, "csv_b": csv,
    })
    assert r.status_code == 200
    doc = json.loads(r.json()["artifact"])
    assert doc["max_population_deviation"] == 0.0
