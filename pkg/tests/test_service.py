"""HTTP API tests driven through an in-process client: auth, CRUD routes,
bulk-replace semantics, jobs, masks, exports, and error mapping."""

import base64
import io
import time
import zipfile

import pytest
from fastapi.testclient import TestClient

from labelkit.providers import MockProvider
from labelkit.service import ServiceConfig, SessionManager, create_app
from labelkit.store import Store
from labelkit.synth import generate_scenes

from conftest import png_bytes


SEED = 11


@pytest.fixture()
def harness(tmp_path):
    truth = generate_scenes(tmp_path / "scenes", seed=SEED, image_count=10)
    config = ServiceConfig(data_dir=tmp_path / "data", session_ttl_seconds=600)
    store = Store(config.data_dir)
    app = create_app(
        config,
        store=store,
        provider_factory=lambda class_names: MockProvider(
            truth, seed=SEED, known_classes=tuple(class_names)
        ),
    )
    with TestClient(app, raise_server_exceptions=False) as client:
        yield client, store, tmp_path, truth
    store.close()


def login(client, username="admin", password="admin"):
    response = client.post(
        "/api/login", json={"username": username, "password": password}
    )
    assert response.status_code == 200
    return {"Authorization": f"Bearer {response.json()['token']}"}


def make_project(client, headers, **overrides):
    payload = {"name": "demo", "mode": "detection", "classes": ["cat", "dog"]}
    payload.update(overrides)
    response = client.post("/api/projects", json=payload, headers=headers)
    assert response.status_code == 201, response.text
    return response.json()


def ingest_scenes(client, headers, project_id, tmp_path):
    response = client.post(
        f"/api/projects/{project_id}/images",
        json={"folder": str(tmp_path / "scenes")},
        headers=headers,
    )
    assert response.status_code == 201, response.text
    return response.json()["items"]


def poll_job(client, headers, job_id, timeout=15.0):
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        body = client.get(f"/api/jobs/{job_id}", headers=headers).json()
        if body["state"] in ("done", "failed"):
            return body
        time.sleep(0.02)
    raise AssertionError(f"job {job_id} did not finish in {timeout}s: {body}")


class TestAuth:
    def test_health_needs_no_token(self, harness):
        client, *_ = harness
        assert client.get("/health").json() == {"status": "ok"}

    def test_api_requires_token(self, harness):
        client, *_ = harness
        assert client.get("/api/projects").status_code == 401
        bad = {"Authorization": "Bearer nonsense"}
        assert client.get("/api/projects", headers=bad).status_code == 401

    def test_bad_credentials(self, harness):
        client, *_ = harness
        response = client.post(
            "/api/login", json={"username": "admin", "password": "wrong"}
        )
        assert response.status_code == 401

    def test_default_account_works(self, harness):
        client, *_ = harness
        headers = login(client)
        assert client.get("/api/projects", headers=headers).status_code == 200

    def test_registration_disabled_by_default(self, harness):
        client, *_ = harness
        headers = login(client)
        response = client.post(
            "/api/register",
            json={"username": "eve", "password": "pw"},
            headers=headers,
        )
        assert response.status_code == 403

    def test_session_expiry(self):
        clock = [0.0]
        manager = SessionManager(ttl_seconds=10, clock=lambda: clock[0])
        session = manager.create("admin")
        assert manager.resolve(session.token) is not None
        clock[0] = 11.0
        assert manager.resolve(session.token) is None

    def test_tokens_are_long_and_unique(self):
        manager = SessionManager(ttl_seconds=10)
        tokens = {manager.create("admin").token for _ in range(50)}
        assert len(tokens) == 50
        # url-safe base64 of 32 bytes: 43 chars, far beyond 128 bits
        assert all(len(t) >= 43 for t in tokens)


class TestProjects:
    def test_create_and_list(self, harness):
        client, *_ = harness
        headers = login(client)
        body = make_project(client, headers)
        assert body["mode"] == "detection"
        assert [c["name"] for c in body["classes"]] == ["cat", "dog"]
        listing = client.get("/api/projects", headers=headers).json()
        assert listing["total"] == 1
        assert listing["items"][0]["name"] == "demo"

    def test_duplicate_name_conflicts(self, harness):
        client, *_ = harness
        headers = login(client)
        make_project(client, headers)
        response = client.post(
            "/api/projects",
            json={"name": "demo", "mode": "detection", "classes": ["cat"]},
            headers=headers,
        )
        assert response.status_code == 409

    def test_validation_failures_are_422(self, harness):
        client, *_ = harness
        headers = login(client)
        response = client.post(
            "/api/projects",
            json={"name": "x", "mode": "hologram", "classes": ["cat"]},
            headers=headers,
        )
        assert response.status_code == 422
        response = client.post(
            "/api/projects", json={"name": "x"}, headers=headers
        )
        assert response.status_code == 422

    def test_missing_project_404(self, harness):
        client, *_ = harness
        headers = login(client)
        assert client.get("/api/projects/99", headers=headers).status_code == 404
        assert (
            client.get("/api/projects/99/stats", headers=headers).status_code == 404
        )


class TestImages:
    def test_folder_ingest(self, harness):
        client, _, tmp_path, _ = harness
        headers = login(client)
        project = make_project(client, headers)
        items = ingest_scenes(client, headers, project["id"], tmp_path)
        assert len(items) == 10
        assert all(item["status"] == "unannotated" for item in items)

    def test_multipart_upload(self, harness):
        client, *_ = harness
        headers = login(client)
        project = make_project(client, headers)
        response = client.post(
            f"/api/projects/{project['id']}/images",
            files=[("files", ("shot.png", io.BytesIO(png_bytes(40, 30)), "image/png"))],
            headers=headers,
        )
        assert response.status_code == 201, response.text
        items = response.json()["items"]
        assert len(items) == 1
        assert (items[0]["width"], items[0]["height"]) == (40, 30)

    def test_base64_upload_and_bad_payload(self, harness):
        client, *_ = harness
        headers = login(client)
        project = make_project(client, headers)
        response = client.post(
            f"/api/projects/{project['id']}/images",
            json={
                "files": [
                    {
                        "name": "ok.png",
                        "data_base64": base64.b64encode(png_bytes(20, 20)).decode(),
                    },
                    {"name": "bad.png", "data_base64": "@@not base64@@"},
                ]
            },
            headers=headers,
        )
        assert response.status_code == 201
        body = response.json()
        assert len(body["items"]) == 1
        assert body["skipped"][0]["name"] == "bad.png"

    def test_pagination_window_and_clamp(self, harness):
        client, _, tmp_path, _ = harness
        headers = login(client)
        project = make_project(client, headers)
        ingest_scenes(client, headers, project["id"], tmp_path)
        page = client.get(
            f"/api/projects/{project['id']}/images",
            params={"limit": 3, "offset": 8},
            headers=headers,
        ).json()
        assert len(page["items"]) == 2
        assert page["total"] == 10
        clamped = client.get(
            f"/api/projects/{project['id']}/images",
            params={"limit": 99999},
            headers=headers,
        ).json()
        assert clamped["limit"] == 500

    def test_image_file_served(self, harness):
        client, _, tmp_path, _ = harness
        headers = login(client)
        project = make_project(client, headers)
        items = ingest_scenes(client, headers, project["id"], tmp_path)
        response = client.get(f"/api/images/{items[0]['id']}/file", headers=headers)
        assert response.status_code == 200
        assert response.headers["content-type"] == "image/png"
        assert response.content[:8] == b"\x89PNG\r\n\x1a\n"


class TestAnnotations:
    def setup_image(self, client, headers, tmp_path):
        project = make_project(client, headers)
        items = ingest_scenes(client, headers, project["id"], tmp_path)
        cat_id = project["classes"][0]["id"]
        return project, items[0], cat_id

    def put_items(self, client, headers, image_id, revision, items):
        return client.put(
            f"/api/images/{image_id}/annotations",
            json={"revision": revision, "items": items},
            headers=headers,
        )

    def test_put_then_get(self, harness):
        client, _, tmp_path, _ = harness
        headers = login(client)
        project, image, cat_id = self.setup_image(client, headers, tmp_path)
        response = self.put_items(
            client, headers, image["id"], 0,
            [{"class_id": cat_id, "kind": "bbox", "coords": [5, 5, 20, 20]}],
        )
        assert response.status_code == 200, response.text
        body = response.json()
        assert body["image"]["status"] == "annotated"
        assert body["image"]["revision"] == 1
        fetched = client.get(
            f"/api/images/{image['id']}/annotations", headers=headers
        ).json()
        assert len(fetched["items"]) == 1
        stored = fetched["items"][0]
        assert stored["coords"] == [5.0, 5.0, 20.0, 20.0]
        assert stored["source"] == "manual" and stored["state"] == "accepted"

    def test_put_replaces_wholesale(self, harness):
        client, _, tmp_path, _ = harness
        headers = login(client)
        project, image, cat_id = self.setup_image(client, headers, tmp_path)
        self.put_items(
            client, headers, image["id"], 0,
            [
                {"class_id": cat_id, "kind": "bbox", "coords": [5, 5, 20, 20]},
                {"class_id": cat_id, "kind": "bbox", "coords": [30, 30, 40, 40]},
            ],
        )
        response = self.put_items(
            client, headers, image["id"], 1,
            [{"class_id": cat_id, "kind": "bbox", "coords": [1, 1, 9, 9]}],
        )
        assert response.status_code == 200
        assert len(response.json()["items"]) == 1

    def test_stale_revision_409(self, harness):
        client, _, tmp_path, _ = harness
        headers = login(client)
        project, image, cat_id = self.setup_image(client, headers, tmp_path)
        self.put_items(
            client, headers, image["id"], 0,
            [{"class_id": cat_id, "kind": "bbox", "coords": [5, 5, 20, 20]}],
        )
        response = self.put_items(
            client, headers, image["id"], 0,
            [{"class_id": cat_id, "kind": "bbox", "coords": [1, 1, 9, 9]}],
        )
        assert response.status_code == 409

    def test_invalid_item_writes_nothing(self, harness):
        client, _, tmp_path, _ = harness
        headers = login(client)
        project, image, cat_id = self.setup_image(client, headers, tmp_path)
        response = self.put_items(
            client, headers, image["id"], 0,
            [
                {"class_id": cat_id, "kind": "bbox", "coords": [5, 5, 20, 20]},
                {"class_id": cat_id, "kind": "bbox", "coords": [5, 5, 20, 99999]},
            ],
        )
        assert response.status_code == 422
        fetched = client.get(
            f"/api/images/{image['id']}/annotations", headers=headers
        ).json()
        assert fetched["items"] == []
        assert fetched["image"]["revision"] == 0

    def test_wrong_kind_rejected(self, harness):
        client, _, tmp_path, _ = harness
        headers = login(client)
        project, image, cat_id = self.setup_image(client, headers, tmp_path)
        response = self.put_items(
            client, headers, image["id"], 0,
            [{"class_id": cat_id, "kind": "polygon",
              "coords": [1, 1, 9, 1, 5, 9]}],
        )
        assert response.status_code == 422

    def test_delete_clears(self, harness):
        client, _, tmp_path, _ = harness
        headers = login(client)
        project, image, cat_id = self.setup_image(client, headers, tmp_path)
        self.put_items(
            client, headers, image["id"], 0,
            [{"class_id": cat_id, "kind": "bbox", "coords": [5, 5, 20, 20]}],
        )
        response = client.delete(
            f"/api/images/{image['id']}/annotations", headers=headers
        )
        assert response.status_code == 200
        assert response.json()["deleted"] == 1
        assert response.json()["image"]["status"] == "unannotated"

    def test_unknown_image_404(self, harness):
        client, *_ = harness
        headers = login(client)
        assert (
            client.get("/api/images/424242/annotations", headers=headers).status_code
            == 404
        )


class TestMask:
    def test_box_seed_returns_polygon(self, harness):
        client, _, tmp_path, _ = harness
        headers = login(client)
        project = make_project(client, headers)
        items = ingest_scenes(client, headers, project["id"], tmp_path)
        response = client.post(
            f"/api/images/{items[0]['id']}/mask",
            json={"box": [10, 10, 30, 30]},
            headers=headers,
        )
        assert response.status_code == 200, response.text
        body = response.json()
        assert body["pixel_count"] == 400
        assert len(body["polygons"]) == 1
        xs = body["polygons"][0][0::2]
        ys = body["polygons"][0][1::2]
        assert min(xs) >= 9 and max(xs) <= 30
        assert min(ys) >= 9 and max(ys) <= 30

    def test_point_seed_returns_disk_polygon(self, harness):
        client, _, tmp_path, _ = harness
        headers = login(client)
        project = make_project(client, headers)
        items = ingest_scenes(client, headers, project["id"], tmp_path)
        response = client.post(
            f"/api/images/{items[0]['id']}/mask",
            json={"point": [50, 40]},
            headers=headers,
        )
        assert response.status_code == 200
        assert response.json()["pixel_count"] == 29

    def test_requires_exactly_one_seed(self, harness):
        client, _, tmp_path, _ = harness
        headers = login(client)
        project = make_project(client, headers)
        items = ingest_scenes(client, headers, project["id"], tmp_path)
        url = f"/api/images/{items[0]['id']}/mask"
        assert client.post(url, json={}, headers=headers).status_code == 422
        assert (
            client.post(
                url,
                json={"box": [1, 1, 5, 5], "point": [3, 3]},
                headers=headers,
            ).status_code
            == 422
        )


class TestJobs:
    def test_preannotate_to_done(self, harness):
        client, store, tmp_path, truth = harness
        headers = login(client)
        planted = sorted({obj.label for objs in truth.values() for obj in objs})
        project = make_project(client, headers, classes=planted)
        ingest_scenes(client, headers, project["id"], tmp_path)
        response = client.post(
            f"/api/projects/{project['id']}/preannotate", headers=headers
        )
        assert response.status_code == 202
        job = poll_job(client, headers, response.json()["job"]["id"])
        assert job["state"] == "done"
        assert job["report"]["processed"] == 10
        assert job["report"]["failures"] == 0
        assert job["progress"] == {"processed": 10, "total": 10}

        stats = client.get(
            f"/api/projects/{project['id']}/stats", headers=headers
        ).json()
        assert stats["completion"]["pending_review"] == 1.0
        assert sum(stats["completion"].values()) == pytest.approx(1.0)

    def test_unknown_job_404(self, harness):
        client, *_ = harness
        headers = login(client)
        assert client.get("/api/jobs/feedbeef", headers=headers).status_code == 404

    def test_concurrent_preannotate_409(self, tmp_path):
        truth = generate_scenes(tmp_path / "scenes", seed=3, image_count=6)

        class SlowMock(MockProvider):
            def detect(self, image, class_names, threshold):
                time.sleep(0.15)
                return super().detect(image, class_names, threshold)

        config = ServiceConfig(data_dir=tmp_path / "data")
        store = Store(config.data_dir)
        app = create_app(
            config,
            store=store,
            provider_factory=lambda names: SlowMock(
                truth, seed=3, known_classes=tuple(names)
            ),
        )
        with TestClient(app) as client:
            headers = login(client)
            project = make_project(client, headers)
            ingest_scenes(client, headers, project["id"], tmp_path)
            first = client.post(
                f"/api/projects/{project['id']}/preannotate", headers=headers
            )
            assert first.status_code == 202
            second = client.post(
                f"/api/projects/{project['id']}/preannotate", headers=headers
            )
            assert second.status_code == 409
            done = poll_job(client, headers, first.json()["job"]["id"])
            assert done["state"] == "done"
            third = client.post(
                f"/api/projects/{project['id']}/preannotate", headers=headers
            )
            assert third.status_code == 202
            poll_job(client, headers, third.json()["job"]["id"])
        store.close()


class TestExportImport:
    def seed_annotations(self, client, headers, tmp_path):
        project = make_project(client, headers)
        items = ingest_scenes(client, headers, project["id"], tmp_path)
        cat_id = project["classes"][0]["id"]
        client.put(
            f"/api/images/{items[0]['id']}/annotations",
            json={
                "revision": 0,
                "items": [
                    {"class_id": cat_id, "kind": "bbox", "coords": [5, 5, 20, 20]}
                ],
            },
            headers=headers,
        )
        return project, items

    def test_export_job_with_download(self, harness):
        client, _, tmp_path, _ = harness
        headers = login(client)
        project, _ = self.seed_annotations(client, headers, tmp_path)
        response = client.post(
            f"/api/projects/{project['id']}/export",
            params={"format": "coco"},
            headers=headers,
        )
        assert response.status_code == 202
        job = poll_job(client, headers, response.json()["job"]["id"])
        assert job["state"] == "done"
        assert job["report"]["diagnostics"] == []
        url = job["report"]["download_url"]
        download = client.get(url, headers=headers)
        assert download.status_code == 200
        archive = zipfile.ZipFile(io.BytesIO(download.content))
        assert "annotations.json" in archive.namelist()

    def test_unsupported_pair_is_immediate_422(self, harness):
        client, _, tmp_path, _ = harness
        headers = login(client)
        project = make_project(
            client, headers, name="segs", mode="segmentation", classes=["cat"]
        )
        response = client.post(
            f"/api/projects/{project['id']}/export",
            params={"format": "voc"},
            headers=headers,
        )
        assert response.status_code == 422

    def test_import_job(self, harness):
        client, _, tmp_path, _ = harness
        headers = login(client)
        project, items = self.seed_annotations(client, headers, tmp_path)
        stem = items[1]["name"].rsplit(".", 1)[0]
        files = {
            "data.yaml": "names:\n  0: walrus\n",
            f"{stem}.txt": "0 0.5 0.5 0.2 0.2\n",
        }
        response = client.post(
            f"/api/projects/{project['id']}/import",
            json={"format": "yolo", "files": files},
            headers=headers,
        )
        assert response.status_code == 202
        job = poll_job(client, headers, response.json()["job"]["id"])
        assert job["state"] == "done"
        assert job["report"]["imported"] == 1
        assert job["report"]["created_classes"] == ["walrus"]
        fetched = client.get(
            f"/api/images/{items[1]['id']}/annotations", headers=headers
        ).json()
        assert len(fetched["items"]) == 1
