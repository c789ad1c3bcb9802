"""REST surface over the store and job manager.

JSON bodies, bearer-token auth, error shape {"error": ..., "details": [...]}.
Foreign private documents answer 404 rather than 403 so their existence does
not leak. Validation failures answer 422 with per-field detail entries.
"""

from __future__ import annotations

import json
from dataclasses import asdict

from fastapi import Depends, FastAPI, Request, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from ..mapgen import MapGenParams, generate_map, grid_to_payload, payload_to_grid, validate_map_payload
from ..network import validate_architecture
from ..robots import builtin_robots, get_robot
from ..scenario import scenario_from_dict, validate_scenario, validate_scenario_payload
from ..training import (
    hyperparams_from_payload,
    validate_hyperparams_payload,
    validate_rewards_payload,
)
from ..validation import Violation
from .jobs import JobManager
from .store import DOC_KINDS, Conflict, DocumentStore, FileStore, NotFound, new_id, now_stamp


class ApiError(Exception):
    def __init__(self, status: int, error: str, details: list | None = None):
        self.status = status
        self.error = error
        self.details = details or []


def _violation_details(violations: list[Violation]) -> list[dict]:
    return [{"field": v.field, "reason": v.reason} for v in violations]


def _unprocessable(violations: list[Violation]) -> ApiError:
    return ApiError(422, "validation failed", _violation_details(violations))


def create_app(
    data_dir,
    workers: int = 2,
    start_workers: bool = True,
    store: DocumentStore | None = None,
    ui_dir=None,
) -> FastAPI:
    store = store or FileStore(data_dir)
    manager = JobManager(store, workers=workers)
    if start_workers:
        manager.start()

    app = FastAPI(title="navlab", version="0.1.0")
    app.state.store = store
    app.state.jobs = manager
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    if ui_dir is not None:
        from pathlib import Path

        from fastapi.staticfiles import StaticFiles

        ui_path = Path(ui_dir)
        if (ui_path / "index.html").exists():
            app.mount("/ui", StaticFiles(directory=ui_path, html=True), name="ui")

    @app.exception_handler(ApiError)
    async def _api_error(request: Request, exc: ApiError):
        return JSONResponse(
            status_code=exc.status, content={"error": exc.error, "details": exc.details}
        )

    @app.exception_handler(NotFound)
    async def _not_found(request: Request, exc: NotFound):
        return JSONResponse(status_code=404, content={"error": "not found", "details": []})

    from fastapi.exceptions import RequestValidationError

    @app.exception_handler(RequestValidationError)
    async def _request_validation(request: Request, exc: RequestValidationError):
        details = [
            {"field": ".".join(str(p) for p in err.get("loc", [])), "reason": err.get("msg", "")}
            for err in exc.errors()
        ]
        return JSONResponse(status_code=422, content={"error": "validation failed", "details": details})

    async def current_user(request: Request) -> dict:
        header = request.headers.get("authorization", "")
        if not header.lower().startswith("bearer "):
            raise ApiError(401, "missing bearer token")
        user = store.resolve_token(header[7:].strip())
        if user is None:
            raise ApiError(401, "invalid token")
        return user

    async def read_body(request: Request) -> dict:
        try:
            body = await request.json()
        except json.JSONDecodeError:
            raise ApiError(400, "body must be valid JSON")
        if not isinstance(body, dict):
            raise ApiError(400, "body must be a JSON object")
        return body

    # -- auth -----------------------------------------------------------------

    @app.post("/auth/register")
    async def register(request: Request):
        body = await read_body(request)
        username = body.get("username", "")
        password = body.get("password", "")
        violations = []
        if not isinstance(username, str) or not username:
            violations.append(Violation("username", "must be non-empty"))
        if not isinstance(password, str) or len(password) < 8:
            violations.append(Violation("password", "must be at least 8 characters"))
        if violations:
            raise _unprocessable(violations)
        try:
            user = store.create_user(username, password)
        except Conflict:
            raise ApiError(409, "username already taken")
        return {"token": store.create_session(user["id"])}

    @app.post("/auth/login")
    async def login(request: Request):
        from .store import verify_password

        body = await read_body(request)
        user = store.find_user(str(body.get("username", "")))
        if user is None or not verify_password(
            str(body.get("password", "")), user["salt"], user["password_hash"]
        ):
            raise ApiError(401, "bad credentials")
        return {"token": store.create_session(user["id"])}

    @app.get("/me")
    async def me(user: dict = Depends(current_user)):
        return {"id": user["id"], "username": user["username"], "created_at": user["created_at"]}

    # -- robots -----------------------------------------------------------------

    @app.get("/robots")
    async def robots(user: dict = Depends(current_user)):
        out = []
        for r in builtin_robots():
            d = asdict(r)
            d["action_dim"] = r.action_dim
            d["obs_dim"] = r.obs_dim
            out.append(d)
        return out

    # -- documents ----------------------------------------------------------------

    def _check_kind(kind: str):
        if kind not in DOC_KINDS:
            raise ApiError(404, f"unknown document kind {kind!r}")

    def _validate_payload(kind: str, payload):
        if kind == "maps":
            violations = validate_map_payload(payload)
        elif kind == "scenarios":
            violations = validate_scenario_payload(payload)
            if not violations:
                try:
                    map_doc = store.get_document("maps", payload["map_id"])
                except NotFound:
                    violations = [Violation("map_id", "unknown map")]
                else:
                    grid = payload_to_grid(map_doc["payload"])
                    violations = validate_scenario(scenario_from_dict(payload), grid)
        elif kind == "networks":
            if not isinstance(payload, dict):
                violations = [Violation("payload", "must be an object")]
            else:
                try:
                    robot = get_robot(str(payload.get("robot_id", "")))
                except KeyError:
                    violations = [Violation("robot_id", "unknown robot")]
                else:
                    violations = validate_architecture(payload.get("modules", []), robot)
        elif kind == "hyperparams":
            violations = validate_hyperparams_payload(payload)
        else:
            violations = validate_rewards_payload(payload)
        if violations:
            raise _unprocessable(violations)

    def _readable(doc: dict, user: dict) -> bool:
        return doc["owner"] == user["id"] or doc["visibility"] == "public"

    def _get_readable_doc(kind: str, doc_id: str, user: dict) -> dict:
        _check_kind(kind)
        try:
            doc = store.get_document(kind, doc_id)
        except NotFound:
            raise ApiError(404, "not found")
        if not _readable(doc, user):
            raise ApiError(404, "not found")  # avoid existence leak
        return doc

    @app.get("/docs/{kind}")
    async def list_docs(kind: str, user: dict = Depends(current_user)):
        _check_kind(kind)
        return [d for d in store.list_documents(kind) if _readable(d, user)]

    @app.post("/docs/{kind}", status_code=201)
    async def create_doc(kind: str, request: Request, user: dict = Depends(current_user)):
        _check_kind(kind)
        body = await read_body(request)
        name = body.get("name", "")
        visibility = body.get("visibility", "private")
        if not isinstance(name, str) or not name:
            raise _unprocessable([Violation("name", "must be non-empty")])
        if visibility not in ("public", "private"):
            raise _unprocessable([Violation("visibility", "must be 'public' or 'private'")])
        payload = body.get("payload")
        _validate_payload(kind, payload)
        doc = {
            "id": new_id(),
            "kind": kind,
            "name": name,
            "owner": user["id"],
            "visibility": visibility,
            "created_at": now_stamp(),
            "payload": payload,
        }
        return store.put_document(doc)

    @app.get("/docs/{kind}/{doc_id}")
    async def get_doc(kind: str, doc_id: str, user: dict = Depends(current_user)):
        return _get_readable_doc(kind, doc_id, user)

    @app.put("/docs/{kind}/{doc_id}")
    async def update_doc(kind: str, doc_id: str, request: Request, user: dict = Depends(current_user)):
        doc = _get_readable_doc(kind, doc_id, user)
        if doc["owner"] != user["id"]:
            raise ApiError(403, "only the owner can modify a document")
        body = await read_body(request)
        if "name" in body:
            if not isinstance(body["name"], str) or not body["name"]:
                raise _unprocessable([Violation("name", "must be non-empty")])
            doc["name"] = body["name"]
        if "visibility" in body:
            if body["visibility"] not in ("public", "private"):
                raise _unprocessable([Violation("visibility", "must be 'public' or 'private'")])
            doc["visibility"] = body["visibility"]
        if "payload" in body:
            _validate_payload(kind, body["payload"])
            doc["payload"] = body["payload"]
        return store.put_document(doc)

    def _referencing_jobs(doc_id: str) -> list[str]:
        active = []
        for job in store.list_jobs():
            if job["status"] in ("queued", "running") and doc_id in json.dumps(job["config"]):
                active.append(job["id"])
        return active

    @app.delete("/docs/{kind}/{doc_id}")
    async def delete_doc(kind: str, doc_id: str, user: dict = Depends(current_user)):
        doc = _get_readable_doc(kind, doc_id, user)
        if doc["owner"] != user["id"]:
            raise ApiError(403, "only the owner can delete a document")
        refs = _referencing_jobs(doc_id)
        if refs:
            raise ApiError(409, "document is referenced by active jobs", [{"jobs": refs}])
        store.delete_document(kind, doc_id)
        return {"deleted": doc_id}

    @app.post("/docs/maps/generate", status_code=201)
    async def generate_map_doc(request: Request, user: dict = Depends(current_user)):
        body = await read_body(request)
        raw = body.get("params", {})
        if not isinstance(raw, dict):
            raise _unprocessable([Violation("params", "must be an object")])
        try:
            params = MapGenParams(**{k: raw[k] for k in raw if k in MapGenParams.__dataclass_fields__})
        except TypeError as exc:
            raise _unprocessable([Violation("params", str(exc))])
        violations = params.validate()
        if violations:
            raise _unprocessable(violations)
        try:
            grid = generate_map(params)
        except ValueError as exc:
            raise _unprocessable([Violation("params", str(exc))])
        payload = grid_to_payload(grid)
        payload["generator_params"] = raw
        if body.get("store", True):
            name = body.get("name") or f"{params.kind} map (seed {params.seed})"
            doc = {
                "id": new_id(),
                "kind": "maps",
                "name": name,
                "owner": user["id"],
                "visibility": body.get("visibility", "private"),
                "created_at": now_stamp(),
                "payload": payload,
            }
            return store.put_document(doc)
        return {"id": None, "kind": "maps", "payload": payload}

    # -- jobs ------------------------------------------------------------------

    def _job_view(job: dict) -> dict:
        view = dict(job)
        artifact_dir = store.job_artifact_dir(job["id"])
        view["artifacts"] = sorted(p.name for p in artifact_dir.iterdir() if p.is_file())
        return view

    def _require_doc_ref(kind: str, doc_id, user: dict, field: str) -> dict:
        if not isinstance(doc_id, str) or not doc_id:
            raise _unprocessable([Violation(field, "missing reference")])
        _check_kind(kind)
        try:
            doc = store.get_document(kind, doc_id)
        except NotFound:
            raise ApiError(404, f"{field}: not found")
        if not _readable(doc, user):
            raise ApiError(404, f"{field}: not found")
        return doc

    def _submit_job(kind: str, name: str, config: dict, user: dict) -> dict:
        job = {
            "id": new_id(),
            "kind": kind,
            "name": name,
            "owner": user["id"],
            "status": "queued",
            "config": config,
            "created_at": now_stamp(),
            "error": None,
        }
        store.put_job(job)
        manager.submit(job["id"], user["id"])
        return _job_view(job)

    @app.post("/jobs/trainings", status_code=201)
    async def start_training(request: Request, user: dict = Depends(current_user)):
        body = await read_body(request)
        cfg = body.get("config", body)
        name = body.get("name", "training")
        map_doc = _require_doc_ref("maps", cfg.get("map_id"), user, "map_id")
        try:
            robot = get_robot(str(cfg.get("robot_id", "")))
        except KeyError:
            raise ApiError(404, "robot_id: not found")
        network_doc = _require_doc_ref("networks", cfg.get("network_id"), user, "network_id")
        hyper_doc = _require_doc_ref("hyperparams", cfg.get("hyperparams_id"), user, "hyperparams_id")
        _require_doc_ref("rewards", cfg.get("rewards_id"), user, "rewards_id")
        violations = validate_architecture(network_doc["payload"]["modules"], robot)
        hp = hyperparams_from_payload(hyper_doc["payload"])
        if hp.task_mode == "scenario":
            if not cfg.get("scenario_id"):
                violations.append(Violation("scenario_id", "required for scenario task mode"))
            else:
                _require_doc_ref("scenarios", cfg["scenario_id"], user, "scenario_id")
        if violations:
            raise _unprocessable(violations)
        config = {
            "map_id": cfg["map_id"],
            "robot_id": cfg["robot_id"],
            "network_id": cfg["network_id"],
            "hyperparams_id": cfg["hyperparams_id"],
            "rewards_id": cfg["rewards_id"],
            "scenario_id": cfg.get("scenario_id"),
        }
        return _submit_job("training", name, config, user)

    @app.post("/jobs/evaluations", status_code=201)
    async def start_evaluation(request: Request, user: dict = Depends(current_user)):
        body = await read_body(request)
        cfg = body.get("config", body)
        name = body.get("name", "evaluation")
        violations: list[Violation] = []
        try:
            get_robot(str(cfg.get("robot_id", "")))
        except KeyError:
            raise ApiError(404, "robot_id: not found")
        episodes = cfg.get("episodes")
        if not isinstance(episodes, int) or episodes < 1:
            violations.append(Violation("episodes", "must be a positive integer"))
        planner = cfg.get("planner")
        if not isinstance(planner, dict) or planner.get("type") not in ("dwa", "model"):
            violations.append(Violation("planner.type", "must be 'dwa' or 'model'"))
            planner = None
        if planner and planner["type"] == "model":
            job_id = planner.get("job_id", "")
            try:
                training = store.get_job(job_id)
            except NotFound:
                raise ApiError(404, "planner.job_id: not found")
            if training["owner"] != user["id"]:
                raise ApiError(404, "planner.job_id: not found")
            if training["kind"] != "training":
                violations.append(Violation("planner.job_id", "must reference a training job"))
            elif training["status"] != "finished":
                violations.append(
                    Violation("planner.job_id", f"training is {training['status']}, not finished")
                )
            elif not (store.job_artifact_dir(job_id) / "best_model.bin").exists():
                violations.append(Violation("planner.job_id", "training produced no model"))
        scenario_id = cfg.get("scenario_id")
        map_id = cfg.get("map_id")
        if scenario_id:
            _require_doc_ref("scenarios", scenario_id, user, "scenario_id")
        elif map_id:
            _require_doc_ref("maps", map_id, user, "map_id")
            n_obs = cfg.get("n_obstacles", 0)
            if not isinstance(n_obs, int) or n_obs < 0:
                violations.append(Violation("n_obstacles", "must be a non-negative integer"))
        else:
            violations.append(Violation("scenario_id", "either scenario_id or map_id is required"))
        metrics_sel = cfg.get("metrics")
        if metrics_sel is not None:
            from ..metrics import SELECTABLE_METRICS

            if not isinstance(metrics_sel, list) or any(
                m not in SELECTABLE_METRICS for m in metrics_sel
            ):
                violations.append(Violation("metrics", f"must be a subset of {SELECTABLE_METRICS}"))
        if violations:
            raise _unprocessable(violations)
        config = {
            "robot_id": cfg["robot_id"],
            "planner": planner,
            "scenario_id": scenario_id,
            "map_id": map_id,
            "n_obstacles": cfg.get("n_obstacles", 0),
            "episodes": episodes,
            "seed": cfg.get("seed", 0),
            "metrics": metrics_sel,
        }
        return _submit_job("evaluation", name, config, user)

    def _get_own_job(job_id: str, user: dict) -> dict:
        try:
            job = store.get_job(job_id)
        except NotFound:
            raise ApiError(404, "not found")
        if job["owner"] != user["id"]:
            raise ApiError(404, "not found")
        return job

    @app.get("/jobs")
    async def list_jobs(kind: str = "", status: str = "", user: dict = Depends(current_user)):
        jobs = [j for j in store.list_jobs() if j["owner"] == user["id"]]
        if kind:
            jobs = [j for j in jobs if j["kind"] == kind]
        if status:
            jobs = [j for j in jobs if j["status"] == status]
        return [_job_view(j) for j in jobs]

    @app.get("/jobs/{job_id}")
    async def get_job(job_id: str, user: dict = Depends(current_user)):
        return _job_view(_get_own_job(job_id, user))

    @app.get("/jobs/{job_id}/logs")
    async def job_logs(job_id: str, offset: int = 0, user: dict = Depends(current_user)):
        _get_own_job(job_id, user)
        if offset < 0:
            raise ApiError(400, "offset must be >= 0")
        path = store.job_log_path(job_id)
        if not path.exists():
            return {"chunk": "", "next_offset": offset}
        with open(path, "rb") as f:
            f.seek(offset)
            chunk = f.read()
        if not chunk:
            return {"chunk": "", "next_offset": offset}
        return {"chunk": chunk.decode("utf-8", errors="replace"), "next_offset": offset + len(chunk)}

    @app.post("/jobs/{job_id}/cancel")
    async def cancel_job(job_id: str, user: dict = Depends(current_user)):
        job = _get_own_job(job_id, user)
        if job["status"] in ("finished", "failed", "cancelled"):
            return _job_view(job)
        return _job_view(manager.cancel(job_id))

    @app.get("/jobs/{job_id}/artifacts/{name}")
    async def download_artifact(job_id: str, name: str, user: dict = Depends(current_user)):
        _get_own_job(job_id, user)
        if "/" in name or ".." in name:
            raise ApiError(404, "unknown artifact")
        path = store.job_artifact_dir(job_id) / name
        if not path.is_file():
            raise ApiError(404, "unknown artifact")
        media = "text/csv" if name.endswith(".csv") else (
            "application/json" if name.endswith(".json") else "application/octet-stream"
        )
        return Response(content=path.read_bytes(), media_type=media)

    return app
