"""HTTP service: endpoints, payload round-trips, error envelopes."""

import numpy as np
import pytest
from fastapi.testclient import TestClient

from softscatter import __version__, build_sphere_quadrature, spherical_harmonic
from softscatter.service.app import create_app
from softscatter.service.schemas import FieldPayload, PatternPayload

BALL = {"kind": "ball", "radius": 1.0}


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app(), raise_server_exceptions=False)


def _field_payload(resolution, value, role="potential_q"):
    from softscatter.grids import BallDomain, build_domain_grid

    grid = build_domain_grid(BallDomain(center=(0.0, 0.0, 0.0), radius=1.0), resolution)
    vals = np.full(grid.n_cells, complex(value))
    return {
        "role": role,
        "domain": BALL,
        "resolution": resolution,
        "re": vals.real.tolist(),
        "im": vals.imag.tolist(),
    }


def _target_payload(order):
    quad = build_sphere_quadrature(order)
    vals = spherical_harmonic(0, 0, quad.nodes).astype(complex)
    return {
        "k": 1.0,
        "alpha": [0.0, 0.0, 1.0],
        "order": order,
        "re": vals.real.tolist(),
        "im": vals.imag.tolist(),
    }


def test_healthz(client):
    resp = client.get("/healthz")
    assert resp.status_code == 200
    body = resp.json()
    assert body["status"] == "ok"
    assert body["version"] == __version__


def test_forward_endpoint_reports_pattern(client):
    config = {"domain": BALL, "resolution": 8, "quadrature_order": 6}
    resp = client.post("/api/forward",
                       json={"config": config, "q": _field_payload(8, 0.5)})
    assert resp.status_code == 200
    body = resp.json()
    quad = build_sphere_quadrature(6)
    assert len(body["pattern"]["re"]) == quad.n_nodes
    assert body["report"]["optical_theorem"]["applicable"] is True
    assert body["report"]["optical_theorem"]["defect_rel"] < 1e-3
    assert body["report"]["born_relative_diff"] > 0
    assert body["report"]["config"]["resolution"] == 8


def test_forward_grid_mismatch_is_client_error(client):
    config = {"domain": BALL, "resolution": 10, "quadrature_order": 6}
    resp = client.post("/api/forward",
                       json={"config": config, "q": _field_payload(8, 0.5)})
    assert resp.status_code == 422
    detail = resp.json()["detail"]
    assert detail["error_class"] == "ConfigurationError"
    assert "resolution" in detail["message"] or "grid" in detail["message"]


def test_design_endpoint_returns_artifacts(client):
    config = {
        "domain": BALL, "resolution": 8, "quadrature_order": 6,
        "eps_targets": {"eps1": 0.05, "eps2": 1e-3, "eps": 0.06},
    }
    resp = client.post("/api/design",
                       json={"config": config, "target": _target_payload(6)})
    assert resp.status_code == 200
    body = resp.json()
    assert body["h"]["role"] == "density_h"
    assert body["q"]["role"] == "potential_q"
    assert body["density"] is None  # no particle params configured
    report = body["report"]
    assert report["final_error"] <= report["bound"] + report["consistency_gap"] + 1e-12
    assert report["within_eps"] is True


def test_design_with_particles_returns_density(client):
    config = {
        "domain": BALL, "resolution": 8, "quadrature_order": 6,
        "eps_targets": {"eps1": 0.05, "eps2": 1e-3, "eps": 0.06},
        "particles": {"C0": 0.01},
    }
    # a negative-real target would not be realizable; Y00 target synthesizes
    # an h with nonconstant phase, so realizability depends on the recovered
    # q.  Use a tiny-amplitude target: q stays near zero but may dip negative,
    # so accept either a clean density or a structured realizability error.
    resp = client.post("/api/design",
                       json={"config": config, "target": _target_payload(6)})
    if resp.status_code == 200:
        body = resp.json()
        assert body["density"] is not None
        assert all(v >= 0 for v in body["density"]["values"])
        assert body["density"]["capacitance_re"] > 0
    else:
        assert resp.status_code == 409
        assert resp.json()["detail"]["error_class"] == "RealizabilityError"


def test_simulate_endpoint_runs_ensembles(client):
    config = {
        "domain": BALL, "resolution": 8, "quadrature_order": 6,
        "M_list": [0, 40], "seeds": [0, 1],
    }
    resp = client.post("/api/simulate",
                       json={"config": config, "q": _field_payload(8, 1.0)})
    assert resp.status_code == 200
    body = resp.json()
    assert [(r["M"], r["seed"]) for r in body["runs"]] == [(0, 0), (0, 1), (40, 0), (40, 1)]
    m40 = body["runs"][2]
    assert len(m40["ensemble"]["positions"]) > 0
    assert m40["ensemble"]["meta"] == {"M": 40, "seed": 0}
    assert body["reference"] is not None
    report = body["report"]
    assert report["monotone_in_M"] in (True, False)
    assert "40" in report["medians"]
    assert report["records"][2]["M"] == 40


def test_simulate_requires_exactly_one_input(client):
    config = {"domain": BALL, "resolution": 8, "quadrature_order": 6,
              "M_list": [10], "seeds": [0]}
    resp = client.post("/api/simulate", json={"config": config})
    assert resp.status_code == 422
    both = client.post("/api/simulate", json={
        "config": config,
        "q": _field_payload(8, 1.0),
        "density": {
            "domain": BALL, "resolution": 8,
            "values": [0.0] * len(_field_payload(8, 1.0)["re"]),
            "capacitance_re": 1.0,
        },
    })
    assert both.status_code == 422


def test_simulate_negative_potential_rejected(client):
    config = {"domain": BALL, "resolution": 8, "quadrature_order": 6,
              "M_list": [10], "seeds": [0]}
    resp = client.post("/api/simulate",
                       json={"config": config, "q": _field_payload(8, -1.0)})
    assert resp.status_code in (409, 422)
    assert "error_class" in resp.json()["detail"]


def test_simulate_infeasible_density_maps_packing_error(client):
    # Pick a uniform potential level big enough that hard cores of the M=10
    # cloud would overfill the ball, yet small enough to keep ka in bounds:
    # ka needs x <= 0.4 pi M/(kV); packing needs x^3 > 0.3*384 pi^2 M^2/(1000 V^2).
    from softscatter.grids import BallDomain, build_domain_grid

    grid = build_domain_grid(BallDomain(center=(0.0, 0.0, 0.0), radius=1.0), 8)
    volume = float(np.sum(grid.cell_weights))
    m = 10
    ka_cap = 0.4 * np.pi * m / volume
    packing_floor = (0.3 * 384 * np.pi**2 * m**2 / (1000 * volume**2)) ** (1 / 3)
    assert packing_floor < ka_cap, "test geometry must leave a feasible window"
    level = np.sqrt(packing_floor * ka_cap)  # geometric midpoint of the window
    config = {"domain": BALL, "resolution": 8, "quadrature_order": 6,
              "M_list": [m], "seeds": [0]}
    resp = client.post("/api/simulate",
                       json={"config": config, "q": _field_payload(8, level)})
    assert resp.status_code == 409
    detail = resp.json()["detail"]
    assert detail["error_class"] == "PackingError"
    assert detail["max_feasible_density"] > 0


def test_malformed_request_is_422(client):
    resp = client.post("/api/forward", json={"config": {"domain": BALL},
                                             "q": {"role": "potential_q"}})
    assert resp.status_code == 422


def test_validate_endpoint_reports_battery(client):
    config = {"domain": BALL, "resolution": 8, "quadrature_order": 6}
    resp = client.post("/api/validate", json={"config": config})
    assert resp.status_code == 200
    report = resp.json()["report"]
    assert report["all_passed"] is True
    names = [c["name"] for c in report["checks"]]
    assert "optical_theorem" in names
    assert "reciprocity" in names
    assert len(names) >= 20


def test_payload_roundtrip_preserves_field(ball_grid_10):
    from conftest import gaussian_bump

    f = gaussian_bump(ball_grid_10, 1.0).with_values(
        gaussian_bump(ball_grid_10, 1.0).values * (1 + 2j))
    payload = FieldPayload.from_field(f)
    back = payload.to_field()
    assert np.allclose(back.values, f.values, atol=0, rtol=1e-15)
    assert back.grid.n_cells == f.grid.n_cells


def test_pattern_payload_rejects_wrong_length():
    quad = build_sphere_quadrature(4)
    payload = PatternPayload(k=1.0, alpha=(0.0, 0.0, 1.0), order=6,
                             re=[0.0] * quad.n_nodes, im=[0.0] * quad.n_nodes)
    from softscatter import ConfigurationError

    with pytest.raises(ConfigurationError):
        payload.to_pattern()
