import base64

import pytest
from fastapi.testclient import TestClient

from stylegan_lens.discriminator import Discriminator
from stylegan_lens.generator import Generator, GeneratorConfig
from stylegan_lens.imaging import decode_png
from stylegan_lens.service import build_state, create_app


@pytest.fixture(scope="module")
def state():
    cfg = GeneratorConfig(latent_size=16, n_layers=2, blocks=2, max_res=16, base_channels=16)
    models = {"G": Generator(cfg, seed=1), "D": Discriminator(cfg, seed=2)}
    return build_state(models=models, allow_inplace=False, fixed_seed=0)


@pytest.fixture()
def client(state):
    return TestClient(create_app(state), raise_server_exceptions=False)


def test_info_reports_fresh_model(client, state):
    body = client.get("/api/info").json()
    assert body["latent_size"] == 16
    assert body["blocks"] == 2
    assert body["max_res"] == 16
    assert body["nonzero_weights"] == body["total_weights"] > 0


def test_generate_returns_decodable_pngs(client):
    resp = client.post("/api/generate", json={"seed": 5, "count": 4})
    assert resp.status_code == 200
    images = resp.json()["images"]
    assert len(images) == 4
    pixels = decode_png(base64.b64decode(images[0]))
    assert pixels.shape == (16, 16, 3)


def test_generate_is_deterministic_over_requests(client):
    a = client.post("/api/generate", json={"seed": 9, "count": 2}).json()["images"]
    b = client.post("/api/generate", json={"seed": 9, "count": 2}).json()["images"]
    assert a == b


def test_generate_count_bound(client):
    assert client.post("/api/generate", json={"count": 65}).status_code == 400
    assert client.post("/api/generate", json={"count": 0}).status_code == 400


def test_generate_psi_bound(client):
    resp = client.post("/api/generate", json={"count": 2, "truncation_psi": 1.5})
    assert resp.status_code == 400


def test_malformed_body_is_400(client):
    assert client.post("/api/generate", json={"count": "many"}).status_code == 400


def test_perturb_empty_deltas_identity(client):
    resp = client.post("/api/perturb", json={"seed": 3, "count": 4, "deltas": []})
    assert resp.status_code == 200
    body = resp.json()
    assert body["original"] == body["modified"]
    assert body["distances"] == [0.0, 0.0, 0.0, 0.0]


def test_perturb_dim3_changes_images(client):
    resp = client.post("/api/perturb", json={
        "seed": 3, "count": 4, "deltas": [{"dim": 3, "delta": 10.0}],
    })
    assert resp.status_code == 200
    body = resp.json()
    assert len(body["original"]) == len(body["modified"]) == 4
    assert max(body["distances"]) > 0


def test_perturb_validation_bounds(client):
    resp = client.post("/api/perturb", json={"deltas": [{"dim": 99, "delta": 1.0}]})
    assert resp.status_code == 400
    resp = client.post("/api/perturb", json={"deltas": [{"dim": 1, "delta": 50.0}]})
    assert resp.status_code == 400
    resp = client.post("/api/perturb", json={
        "deltas": [{"dim": 1, "delta": 50.0}], "unbounded": True})
    assert resp.status_code == 200


def test_prune_copy_mode_reports_counts(client, state):
    total = client.get("/api/info").json()["total_weights"]
    resp = client.post("/api/prune", json={"threshold": 0.5})
    assert resp.status_code == 200
    body = resp.json()
    assert body["total_weights"] == total
    assert 0 < body["nonzero_weights"] < total
    assert 0.0 < body["mean_d_score"] < 1.0
    # pristine weights are untouched: re-pruning at 0 restores the full count
    resp = client.post("/api/prune", json={"threshold": 0.0})
    assert resp.json()["nonzero_weights"] == total


def test_prune_threshold_validation(client):
    assert client.post("/api/prune", json={"threshold": -1.0}).status_code == 400


def test_prune_in_place_requires_serve_flag(client):
    resp = client.post("/api/prune", json={"threshold": 0.1, "in_place": True})
    assert resp.status_code == 400


def test_prune_conflict_gives_409(client, state):
    state.mutation.acquire()
    try:
        resp = client.post("/api/prune", json={"threshold": 0.1})
        assert resp.status_code == 409
    finally:
        state.mutation.release()
    assert client.post("/api/prune", json={"threshold": 0.0}).status_code == 200


def test_generate_reflects_pruned_snapshot(client, state):
    before = client.post("/api/generate", json={"seed": 11, "count": 2}).json()["images"]
    client.post("/api/prune", json={"threshold": 0.8})
    after = client.post("/api/generate", json={"seed": 11, "count": 2}).json()["images"]
    assert before != after
    client.post("/api/prune", json={"threshold": 0.0})
    restored = client.post("/api/generate", json={"seed": 11, "count": 2}).json()["images"]
    assert restored == before


def test_unknown_route_is_404(client):
    assert client.get("/api/nope").status_code == 404


def test_static_ui_bundle_is_served(tmp_path):
    (tmp_path / "index.html").write_text("<html><body>lens ui</body></html>")
    cfg = GeneratorConfig(latent_size=16, n_layers=1, blocks=2, max_res=16, base_channels=8)
    models = {"G": Generator(cfg, seed=0), "D": Discriminator(cfg, seed=1)}
    state = build_state(models=models, ui_dir=str(tmp_path))
    ui_client = TestClient(create_app(state))
    resp = ui_client.get("/")
    assert resp.status_code == 200
    assert "lens ui" in resp.text
    # API routes still take precedence over the static mount
    assert ui_client.get("/api/info").status_code == 200
