"""Document persistence: an abstract store interface plus the file-backed
reference implementation (one JSON file per entity, a blob directory per job).

All metadata operations are serialized by one lock; job log files are written
by exactly one worker and may be read concurrently at byte offsets.
"""

from __future__ import annotations

import hashlib
import json
import os
import secrets
import threading
import time
from pathlib import Path

DOC_KINDS = ("maps", "scenarios", "networks", "hyperparams", "rewards")
JOB_KINDS = ("training", "evaluation")
JOB_STATUSES = ("queued", "running", "finished", "failed", "cancelled")
_TERMINAL = ("finished", "failed", "cancelled")
_LEGAL_TRANSITIONS = {
    "queued": {"running", "cancelled"},
    "running": {"finished", "failed", "cancelled"},
}

_PBKDF2_ITERATIONS = 50_000


def hash_password(password: str, salt: str | None = None) -> tuple[str, str]:
    salt = salt or secrets.token_hex(16)
    digest = hashlib.pbkdf2_hmac(
        "sha256", password.encode("utf-8"), bytes.fromhex(salt), _PBKDF2_ITERATIONS
    )
    return salt, digest.hex()


def verify_password(password: str, salt: str, expected_hex: str) -> bool:
    _, digest = hash_password(password, salt)
    return secrets.compare_digest(digest, expected_hex)


def new_id() -> str:
    return secrets.token_hex(8)


def new_token() -> str:
    return secrets.token_hex(32)  # 256-bit bearer secret


def now_stamp() -> float:
    return time.time()


class StoreError(Exception):
    pass


class NotFound(StoreError):
    pass


class Conflict(StoreError):
    pass


class DocumentStore:
    """Interface the service layer codes against."""

    # users / sessions
    def create_user(self, username: str, password: str) -> dict: ...
    def find_user(self, username: str) -> dict | None: ...
    def get_user(self, user_id: str) -> dict: ...
    def create_session(self, user_id: str) -> str: ...
    def resolve_token(self, token: str) -> dict | None: ...

    # documents
    def put_document(self, doc: dict) -> dict: ...
    def get_document(self, kind: str, doc_id: str) -> dict: ...
    def list_documents(self, kind: str) -> list[dict]: ...
    def delete_document(self, kind: str, doc_id: str) -> None: ...

    # jobs
    def put_job(self, job: dict) -> dict: ...
    def get_job(self, job_id: str) -> dict: ...
    def list_jobs(self) -> list[dict]: ...
    def set_job_status(self, job_id: str, status: str, error: str | None = None) -> dict: ...
    def job_log_path(self, job_id: str) -> Path: ...
    def job_artifact_dir(self, job_id: str) -> Path: ...


class FileStore(DocumentStore):
    def __init__(self, root):
        self.root = Path(root)
        for sub in ("users", "sessions", "jobs", *(f"docs/{k}" for k in DOC_KINDS)):
            (self.root / sub).mkdir(parents=True, exist_ok=True)
        self._lock = threading.RLock()

    # -- helpers ------------------------------------------------------------

    def _write_json(self, path: Path, data: dict) -> None:
        tmp = path.with_name(f".{path.name}.tmp")
        tmp.write_text(json.dumps(data))
        os.replace(tmp, path)

    def _read_json(self, path: Path) -> dict:
        if not path.exists():
            raise NotFound(str(path.name))
        return json.loads(path.read_text())

    # -- users / sessions -----------------------------------------------------

    def create_user(self, username: str, password: str) -> dict:
        with self._lock:
            if self.find_user(username) is not None:
                raise Conflict(f"username {username!r} already taken")
            salt, digest = hash_password(password)
            user = {
                "id": new_id(),
                "username": username,
                "salt": salt,
                "password_hash": digest,
                "created_at": time.time(),
            }
            self._write_json(self.root / "users" / f"{user['id']}.json", user)
            return user

    def find_user(self, username: str) -> dict | None:
        with self._lock:
            for path in (self.root / "users").glob("*.json"):
                user = self._read_json(path)
                if user["username"] == username:
                    return user
        return None

    def get_user(self, user_id: str) -> dict:
        with self._lock:
            return self._read_json(self.root / "users" / f"{user_id}.json")

    def create_session(self, user_id: str) -> str:
        with self._lock:
            token = new_token()
            self._write_json(
                self.root / "sessions" / f"{token}.json",
                {"token": token, "user_id": user_id, "created_at": time.time()},
            )
            return token

    def resolve_token(self, token: str) -> dict | None:
        if not token or "/" in token or "." in token:
            return None
        path = self.root / "sessions" / f"{token}.json"
        with self._lock:
            if not path.exists():
                return None
            session = self._read_json(path)
            try:
                return self.get_user(session["user_id"])
            except NotFound:
                return None

    # -- documents ------------------------------------------------------------

    def _doc_path(self, kind: str, doc_id: str) -> Path:
        if kind not in DOC_KINDS:
            raise NotFound(f"unknown document kind {kind!r}")
        return self.root / "docs" / kind / f"{doc_id}.json"

    def put_document(self, doc: dict) -> dict:
        with self._lock:
            self._write_json(self._doc_path(doc["kind"], doc["id"]), doc)
            return doc

    def get_document(self, kind: str, doc_id: str) -> dict:
        with self._lock:
            return self._read_json(self._doc_path(kind, doc_id))

    def list_documents(self, kind: str) -> list[dict]:
        if kind not in DOC_KINDS:
            raise NotFound(f"unknown document kind {kind!r}")
        with self._lock:
            docs = [self._read_json(p) for p in sorted((self.root / "docs" / kind).glob("*.json"))]
        return sorted(docs, key=lambda d: d["created_at"])

    def delete_document(self, kind: str, doc_id: str) -> None:
        with self._lock:
            path = self._doc_path(kind, doc_id)
            if not path.exists():
                raise NotFound(doc_id)
            path.unlink()

    # -- jobs -------------------------------------------------------------------

    def _job_path(self, job_id: str) -> Path:
        return self.root / "jobs" / f"{job_id}.json"

    def put_job(self, job: dict) -> dict:
        with self._lock:
            self._write_json(self._job_path(job["id"]), job)
            (self.root / "jobs" / job["id"] / "artifacts").mkdir(parents=True, exist_ok=True)
            return job

    def get_job(self, job_id: str) -> dict:
        with self._lock:
            return self._read_json(self._job_path(job_id))

    def list_jobs(self) -> list[dict]:
        with self._lock:
            jobs = [self._read_json(p) for p in (self.root / "jobs").glob("*.json")]
        return sorted(jobs, key=lambda j: j["created_at"])

    def set_job_status(self, job_id: str, status: str, error: str | None = None) -> dict:
        """Atomic status transition; rejects moves the lifecycle does not allow."""
        if status not in JOB_STATUSES:
            raise ValueError(f"unknown status {status!r}")
        with self._lock:
            job = self.get_job(job_id)
            if status not in _LEGAL_TRANSITIONS.get(job["status"], set()):
                raise Conflict(f"cannot move job from {job['status']} to {status}")
            job["status"] = status
            if error is not None:
                job["error"] = error
            if status in _TERMINAL:
                job["finished_at"] = time.time()
            self._write_json(self._job_path(job_id), job)
            return job

    def job_log_path(self, job_id: str) -> Path:
        d = self.root / "jobs" / job_id
        d.mkdir(parents=True, exist_ok=True)
        return d / "log.txt"

    def job_artifact_dir(self, job_id: str) -> Path:
        d = self.root / "jobs" / job_id / "artifacts"
        d.mkdir(parents=True, exist_ok=True)
        return d
