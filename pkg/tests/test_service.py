import json
import time

import pytest
from fastapi.testclient import TestClient

import navlab.service.jobs as jobs_module
from navlab.mapgen import MapGenParams, generate_map, grid_to_payload
from navlab.robots import get_robot
from navlab.scenario import generate_random_task, scenario_to_dict
from navlab.service.api import create_app

TINY_HP = {
    "task_mode": "random",
    "total_timesteps": 0,
    "eval_frequency": 1000,
    "learning_rate": 3e-4,
    "batch_size": 32,
    "n_steps": 256,
    "seed": 1,
}


@pytest.fixture()
def app(tmp_path):
    app = create_app(tmp_path / "data", workers=2)
    yield app
    app.state.jobs.stop()


@pytest.fixture()
def client(app):
    return TestClient(app)


def register(client, name="alice", password="password123"):
    r = client.post("/auth/register", json={"username": name, "password": password})
    assert r.status_code == 200, r.text
    token = r.json()["token"]
    return {"Authorization": f"Bearer {token}"}


def small_map_payload():
    grid = generate_map(MapGenParams(kind="outdoor", width=6, height=6, obstacle_count=0, seed=3))
    return grid_to_payload(grid)


def make_map(client, auth, name="m", visibility="private"):
    r = client.post(
        "/docs/maps",
        json={"name": name, "visibility": visibility, "payload": small_map_payload()},
        headers=auth,
    )
    assert r.status_code == 201, r.text
    return r.json()


def make_network(client, auth, robot_id="turtlebot3", hidden=16):
    robot = get_robot(robot_id)
    modules = [
        {"type": "linear", "in_features": robot.obs_dim, "out_features": hidden},
        {"type": "relu"},
        {"type": "linear", "in_features": hidden, "out_features": robot.action_dim},
    ]
    r = client.post(
        "/docs/networks",
        json={"name": "net", "visibility": "private",
              "payload": {"robot_id": robot_id, "modules": modules}},
        headers=auth,
    )
    assert r.status_code == 201, r.text
    return r.json()


def wait_for(client, auth, job_id, statuses=("finished", "failed", "cancelled"), timeout=120):
    deadline = time.time() + timeout
    while time.time() < deadline:
        job = client.get(f"/jobs/{job_id}", headers=auth).json()
        if job["status"] in statuses:
            return job
        time.sleep(0.1)
    raise AssertionError(f"job {job_id} did not reach {statuses}")


class TestAuth:
    def test_register_login_me(self, client):
        auth = register(client)
        me = client.get("/me", headers=auth).json()
        assert me["username"] == "alice"
        r = client.post("/auth/login", json={"username": "alice", "password": "password123"})
        assert r.status_code == 200
        auth2 = {"Authorization": f"Bearer {r.json()['token']}"}
        assert client.get("/me", headers=auth2).json()["id"] == me["id"]

    def test_wrong_password(self, client):
        register(client)
        r = client.post("/auth/login", json={"username": "alice", "password": "wrong password"})
        assert r.status_code == 401

    def test_duplicate_username(self, client):
        register(client)
        r = client.post("/auth/register", json={"username": "alice", "password": "password456"})
        assert r.status_code == 409

    def test_short_password_rejected(self, client):
        r = client.post("/auth/register", json={"username": "bob", "password": "short"})
        assert r.status_code == 422

    def test_endpoints_require_token(self, client):
        assert client.get("/robots").status_code == 401
        assert client.get("/docs/maps").status_code == 401
        assert client.get("/me", headers={"Authorization": "Bearer bogus"}).status_code == 401


class TestRobots:
    def test_ten_presets_with_dims(self, client):
        auth = register(client)
        robots = client.get("/robots", headers=auth).json()
        assert len(robots) == 10
        tb3 = next(r for r in robots if r["id"] == "turtlebot3")
        assert tb3["obs_dim"] == tb3["lidar"]["beams"] + 2


class TestDocuments:
    def test_create_get_round_trip(self, client):
        auth = register(client)
        doc = make_map(client, auth)
        got = client.get(f"/docs/maps/{doc['id']}", headers=auth).json()
        assert got["payload"] == doc["payload"]

    def test_visibility_rules(self, client):
        alice = register(client, "alice")
        bob = register(client, "bob")
        private = make_map(client, alice, name="priv", visibility="private")
        public = make_map(client, alice, name="pub", visibility="public")
        # bob sees only the public one in lists
        names = [d["name"] for d in client.get("/docs/maps", headers=bob).json()]
        assert "pub" in names and "priv" not in names
        # foreign private reads as 404, not 403
        assert client.get(f"/docs/maps/{private['id']}", headers=bob).status_code == 404
        assert client.get(f"/docs/maps/{public['id']}", headers=bob).status_code == 200
        # bob can never mutate alice's docs
        r = client.put(f"/docs/maps/{public['id']}", json={"name": "x"}, headers=bob)
        assert r.status_code == 403
        assert client.delete(f"/docs/maps/{public['id']}", headers=bob).status_code == 403

    def test_schema_violation_has_field_paths(self, client):
        auth = register(client)
        r = client.post(
            "/docs/maps",
            json={"name": "bad", "visibility": "private", "payload": {"width": 4}},
            headers=auth,
        )
        assert r.status_code == 422
        fields = [d["field"] for d in r.json()["details"]]
        assert "height" in fields

    def test_network_rejected_with_module_index(self, client):
        auth = register(client)
        robot = get_robot("turtlebot3")
        modules = [
            {"type": "linear", "in_features": robot.obs_dim + 1, "out_features": 8},
            {"type": "relu"},
            {"type": "linear", "in_features": 8, "out_features": robot.action_dim},
        ]
        r = client.post(
            "/docs/networks",
            json={"name": "bad net", "visibility": "private",
                  "payload": {"robot_id": "turtlebot3", "modules": modules}},
            headers=auth,
        )
        assert r.status_code == 422
        assert r.json()["details"][0]["field"] == "modules[0]"

    def test_scenario_validated_against_map(self, client):
        auth = register(client)
        map_doc = make_map(client, auth)
        payload = {
            "map_id": map_doc["id"],
            "robot_start": {"x": 2.0, "y": 2.0, "theta": 0.0},
            "robot_goal": [4.0, 4.0],
            "obstacles": [],
        }
        r = client.post(
            "/docs/scenarios",
            json={"name": "s", "visibility": "private", "payload": payload},
            headers=auth,
        )
        assert r.status_code == 201, r.text
        # waypoint inside the border wall
        bad = dict(payload, obstacles=[
            {"kind": "pedestrian", "speed": 1.0, "start": [2.0, 3.0], "waypoints": [[0.01, 0.01]]}
        ])
        r = client.post(
            "/docs/scenarios",
            json={"name": "bad", "visibility": "private", "payload": bad},
            headers=auth,
        )
        assert r.status_code == 422
        assert any("waypoints[0]" in d["field"] for d in r.json()["details"])

    def test_update_and_delete(self, client):
        auth = register(client)
        doc = make_map(client, auth)
        r = client.put(f"/docs/maps/{doc['id']}", json={"visibility": "public"}, headers=auth)
        assert r.json()["visibility"] == "public"
        assert client.delete(f"/docs/maps/{doc['id']}", headers=auth).status_code == 200
        assert client.get(f"/docs/maps/{doc['id']}", headers=auth).status_code == 404

    def test_generate_endpoint_stores_map(self, client):
        auth = register(client)
        r = client.post(
            "/docs/maps/generate",
            json={"name": "gen", "visibility": "private",
                  "params": {"kind": "indoor", "width": 8, "height": 8, "room_count": 3, "seed": 5}},
            headers=auth,
        )
        assert r.status_code == 201, r.text
        doc = r.json()
        assert doc["payload"]["width"] > 0
        assert client.get(f"/docs/maps/{doc['id']}", headers=auth).status_code == 200

    def test_generate_preview_without_store(self, client):
        auth = register(client)
        r = client.post(
            "/docs/maps/generate",
            json={"store": False, "params": {"kind": "outdoor", "width": 6, "height": 6, "seed": 1}},
            headers=auth,
        )
        assert r.status_code == 201
        assert r.json()["id"] is None
        assert client.get("/docs/maps", headers=auth).json() == []

    def test_generate_rejects_out_of_bounds_params(self, client):
        auth = register(client)
        r = client.post(
            "/docs/maps/generate",
            json={"params": {"kind": "outdoor", "width": 2, "height": 6, "seed": 1}},
            headers=auth,
        )
        assert r.status_code == 422


def submit_tiny_evaluation(client, auth, episodes=2, **overrides):
    map_doc = make_map(client, auth)
    cfg = {
        "robot_id": "turtlebot3",
        "planner": {"type": "dwa"},
        "map_id": map_doc["id"],
        "n_obstacles": 0,
        "episodes": episodes,
        "seed": 7,
    }
    cfg.update(overrides)
    r = client.post("/jobs/evaluations", json={"name": "eval", "config": cfg}, headers=auth)
    assert r.status_code == 201, r.text
    return r.json()


class TestJobs:
    def test_evaluation_lifecycle_and_artifacts(self, client):
        auth = register(client)
        job = submit_tiny_evaluation(client, auth)
        assert job["status"] == "queued"
        done = wait_for(client, auth, job["id"])
        assert done["status"] == "finished", done
        assert {"episodes.csv", "trajectory.csv", "plot_data.json"} <= set(done["artifacts"])
        csv_text = client.get(f"/jobs/{job['id']}/artifacts/episodes.csv", headers=auth).text
        assert csv_text.startswith("episode,success,")
        plot = client.get(f"/jobs/{job['id']}/artifacts/plot_data.json", headers=auth).json()
        assert "dwa" in plot["planners"]

    def test_log_polling_reconstructs_full_log(self, app, client):
        auth = register(client)
        job = submit_tiny_evaluation(client, auth, episodes=3)
        wait_for(client, auth, job["id"])
        # poll in small chunks from offset 0 and compare with the file
        collected = ""
        offset = 0
        while True:
            r = client.get(f"/jobs/{job['id']}/logs", params={"offset": offset}, headers=auth).json()
            if not r["chunk"]:
                break
            collected += r["chunk"]
            offset = r["next_offset"]
        direct = app.state.store.job_log_path(job["id"]).read_text()
        assert collected == direct
        assert "event=finished" in collected

    def test_offset_beyond_end(self, client):
        auth = register(client)
        job = submit_tiny_evaluation(client, auth)
        wait_for(client, auth, job["id"])
        r = client.get(f"/jobs/{job['id']}/logs", params={"offset": 10**9}, headers=auth).json()
        assert r == {"chunk": "", "next_offset": 10**9}

    def test_cancel_queued_job(self, app, client):
        # stop workers so the job stays queued
        app.state.jobs.stop()
        auth = register(client)
        job = submit_tiny_evaluation(client, auth)
        r = client.post(f"/jobs/{job['id']}/cancel", headers=auth)
        assert r.json()["status"] == "cancelled"
        log = client.get(f"/jobs/{job['id']}/logs", headers=auth).json()
        assert log["chunk"] == ""  # never ran

    def test_worker_crash_marks_failed(self, client, monkeypatch):
        def boom(store, job, sink, should_stop):
            raise RuntimeError("induced crash")

        monkeypatch.setattr(jobs_module, "run_evaluation_job", boom)
        auth = register(client)
        job = submit_tiny_evaluation(client, auth)
        done = wait_for(client, auth, job["id"])
        assert done["status"] == "failed"
        assert "induced crash" in done["error"]
        log = client.get(f"/jobs/{job['id']}/logs", headers=auth).json()["chunk"]
        assert "event=error" in log
        # service still serves requests
        assert client.get("/robots", headers=auth).status_code == 200

    def test_jobs_are_private(self, client):
        alice = register(client, "alice")
        bob = register(client, "bob")
        job = submit_tiny_evaluation(client, alice)
        assert client.get(f"/jobs/{job['id']}", headers=bob).status_code == 404
        assert client.get("/jobs", headers=bob).json() == []

    def test_evaluation_on_foreign_public_scenario_allowed(self, client):
        alice = register(client, "alice")
        bob = register(client, "bob")
        map_doc = make_map(client, alice, visibility="public")
        grid = generate_map(MapGenParams(kind="outdoor", width=6, height=6, obstacle_count=0, seed=3))
        scenario = generate_random_task(grid, 0.15, 0, seed=5)
        payload = {k: v for k, v in scenario_to_dict(scenario).items()
                   if k in ("map_id", "robot_start", "robot_goal", "obstacles")}
        payload["map_id"] = map_doc["id"]
        r = client.post(
            "/docs/scenarios",
            json={"name": "shared", "visibility": "public", "payload": payload},
            headers=alice,
        )
        assert r.status_code == 201, r.text
        scenario_id = r.json()["id"]
        cfg = {
            "robot_id": "turtlebot3",
            "planner": {"type": "dwa"},
            "scenario_id": scenario_id,
            "episodes": 1,
        }
        r = client.post("/jobs/evaluations", json={"name": "b", "config": cfg}, headers=bob)
        assert r.status_code == 201, r.text
        done = wait_for(client, bob, r.json()["id"])
        assert done["status"] == "finished"

    def test_evaluation_with_unfinished_training_model_rejected(self, app, client):
        app.state.jobs.stop()  # keep the training queued
        auth = register(client)
        map_doc = make_map(client, auth)
        net_doc = make_network(client, auth)
        hp = client.post(
            "/docs/hyperparams",
            json={"name": "hp", "visibility": "private", "payload": TINY_HP},
            headers=auth,
        ).json()
        rw = client.post(
            "/docs/rewards", json={"name": "rw", "visibility": "private", "payload": {}}, headers=auth
        ).json()
        r = client.post(
            "/jobs/trainings",
            json={
                "name": "t",
                "config": {
                    "map_id": map_doc["id"],
                    "robot_id": "turtlebot3",
                    "network_id": net_doc["id"],
                    "hyperparams_id": hp["id"],
                    "rewards_id": rw["id"],
                },
            },
            headers=auth,
        )
        assert r.status_code == 201, r.text
        training_id = r.json()["id"]
        cfg = {
            "robot_id": "turtlebot3",
            "planner": {"type": "model", "job_id": training_id},
            "map_id": map_doc["id"],
            "episodes": 1,
        }
        r = client.post("/jobs/evaluations", json={"name": "e", "config": cfg}, headers=auth)
        assert r.status_code == 422
        assert any("not finished" in d["reason"] for d in r.json()["details"])

    def test_training_rejects_mismatched_network(self, client):
        auth = register(client)
        map_doc = make_map(client, auth)
        net_doc = make_network(client, auth, robot_id="turtlebot3")
        hp = client.post(
            "/docs/hyperparams",
            json={"name": "hp", "visibility": "private", "payload": TINY_HP},
            headers=auth,
        ).json()
        rw = client.post(
            "/docs/rewards", json={"name": "rw", "visibility": "private", "payload": {}}, headers=auth
        ).json()
        r = client.post(
            "/jobs/trainings",
            json={
                "name": "t",
                "config": {
                    "map_id": map_doc["id"],
                    "robot_id": "ridgeback",  # omni: needs action_dim 3, net outputs 2
                    "network_id": net_doc["id"],
                    "hyperparams_id": hp["id"],
                    "rewards_id": rw["id"],
                },
            },
            headers=auth,
        )
        assert r.status_code == 422
        assert "modules[" in r.json()["details"][0]["field"]

    def test_delete_referenced_doc_refused(self, app, client):
        app.state.jobs.stop()  # keep the job queued
        auth = register(client)
        job = submit_tiny_evaluation(client, auth)
        map_id = job["config"]["map_id"]
        r = client.delete(f"/docs/maps/{map_id}", headers=auth)
        assert r.status_code == 409

    def test_tiny_training_produces_model(self, client):
        auth = register(client)
        map_doc = make_map(client, auth)
        net_doc = make_network(client, auth)
        hp = client.post(
            "/docs/hyperparams",
            json={"name": "hp", "visibility": "private", "payload": TINY_HP},
            headers=auth,
        ).json()
        rw = client.post(
            "/docs/rewards", json={"name": "rw", "visibility": "private", "payload": {}}, headers=auth
        ).json()
        r = client.post(
            "/jobs/trainings",
            json={
                "name": "tiny",
                "config": {
                    "map_id": map_doc["id"],
                    "robot_id": "turtlebot3",
                    "network_id": net_doc["id"],
                    "hyperparams_id": hp["id"],
                    "rewards_id": rw["id"],
                },
            },
            headers=auth,
        )
        assert r.status_code == 201, r.text
        done = wait_for(client, auth, r.json()["id"])
        assert done["status"] == "finished", done
        assert "best_model.bin" in done["artifacts"]
        blob = client.get(f"/jobs/{done['id']}/artifacts/best_model.bin", headers=auth).content
        assert blob.startswith(b"NAVMODEL")
