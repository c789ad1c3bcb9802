"""Asynchronous job execution: an in-process worker pool over the store.

Scheduling is FIFO per owner with round-robin across owners, so one user
cannot monopolize the pool. Worker crashes are caught and recorded as a failed
status plus a diagnostic log line; the service keeps running.
"""

from __future__ import annotations

import threading
import traceback
from collections import deque
from datetime import datetime, timezone

from ..mapgen import payload_to_grid
from ..metrics import compute_report, plot_data, write_results
from ..network import load_model
from ..planners import DwaPlanner, policy_runner
from ..robots import get_robot
from ..scenario import scenario_from_dict
from ..simulation import run_task
from ..training import hyperparams_from_payload, rewards_from_payload, train
from .store import Conflict, DocumentStore

import json


def _ts() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def run_training_job(store: DocumentStore, job: dict, sink, should_stop) -> str:
    """Execute one training job; returns the terminal status."""
    cfg = job["config"]
    grid = payload_to_grid(store.get_document("maps", cfg["map_id"])["payload"])
    robot = get_robot(cfg["robot_id"])
    network = store.get_document("networks", cfg["network_id"])["payload"]["modules"]
    hp = hyperparams_from_payload(store.get_document("hyperparams", cfg["hyperparams_id"])["payload"])
    rewards = rewards_from_payload(store.get_document("rewards", cfg["rewards_id"])["payload"])
    scenario = None
    if cfg.get("scenario_id"):
        doc = store.get_document("scenarios", cfg["scenario_id"])
        scenario = scenario_from_dict({"id": doc["id"], **doc["payload"]})
    artifacts = train(
        grid,
        robot,
        network,
        hp,
        rewards,
        log=sink,
        artifact_dir=store.job_artifact_dir(job["id"]),
        scenario=scenario,
        should_stop=should_stop,
        training_id=job["id"],
    )
    history_path = store.job_artifact_dir(job["id"]) / "eval_history.json"
    history_path.write_text(json.dumps({"eval_history": artifacts.eval_history}))
    return "cancelled" if artifacts.cancelled else "finished"


def run_evaluation_job(store: DocumentStore, job: dict, sink, should_stop) -> str:
    cfg = job["config"]
    robot = get_robot(cfg["robot_id"])
    scenario = None
    if cfg.get("scenario_id"):
        doc = store.get_document("scenarios", cfg["scenario_id"])
        scenario = scenario_from_dict({"id": doc["id"], **doc["payload"]})
        map_id = doc["payload"]["map_id"]
    else:
        map_id = cfg["map_id"]
    grid = payload_to_grid(store.get_document("maps", map_id)["payload"])

    planner_cfg = cfg["planner"]
    if planner_cfg["type"] == "dwa":
        def planner_factory():
            return DwaPlanner(grid)
    else:
        artifact_path = store.job_artifact_dir(planner_cfg["job_id"]) / "best_model.bin"
        artifact = load_model(artifact_path)

        def planner_factory():
            return policy_runner(artifact, robot)

    def on_episode(record):
        sink(
            f"ts={_ts()} step={record.episode_index} event=episode "
            f"reached={int(record.reached_goal)} timeout={int(record.timeout)} "
            f"collisions={record.collisions}"
            + (f" error={record.error!r}" if record.error else "")
        )

    sink(f"ts={_ts()} step=0 event=start planner={planner_cfg['type']} episodes={cfg['episodes']}")
    records = run_task(
        grid,
        robot,
        planner_factory,
        episodes=int(cfg["episodes"]),
        seed=int(cfg.get("seed", 0)),
        scenario=scenario,
        n_obstacles=int(cfg.get("n_obstacles", 0)),
        on_episode=on_episode,
        should_stop=should_stop,
    )
    out_dir = store.job_artifact_dir(job["id"])
    if records:
        write_results(records, out_dir, selected_metrics=cfg.get("metrics"))
        report = compute_report(records)
        (out_dir / "plot_data.json").write_text(json.dumps(plot_data([report])))
    if should_stop():
        return "cancelled"
    failed = [r for r in records if r.error]
    if failed:
        raise RuntimeError(f"episode {failed[0].episode_index} failed: {failed[0].error}")
    sink(f"ts={_ts()} step={len(records)} event=finished")
    return "finished"


class JobManager:
    """Worker pool claiming queued jobs from the store."""

    def __init__(self, store: DocumentStore, workers: int = 2):
        self.store = store
        self.workers = workers
        self._cv = threading.Condition()
        self._queues: dict[str, deque[str]] = {}
        self._ring: deque[str] = deque()
        self._cancel_events: dict[str, threading.Event] = {}
        self._threads: list[threading.Thread] = []
        self._stopping = False

    def start(self):
        for i in range(self.workers):
            t = threading.Thread(target=self._worker, name=f"navlab-worker-{i}", daemon=True)
            t.start()
            self._threads.append(t)

    def stop(self, timeout: float = 5.0):
        with self._cv:
            self._stopping = True
            for event in self._cancel_events.values():
                event.set()
            self._cv.notify_all()
        for t in self._threads:
            t.join(timeout=timeout)

    def submit(self, job_id: str, owner: str):
        with self._cv:
            if owner not in self._queues:
                self._queues[owner] = deque()
            if owner not in self._ring:
                self._ring.append(owner)
            self._queues[owner].append(job_id)
            self._cv.notify()

    def cancel(self, job_id: str) -> dict:
        """Queued jobs become cancelled immediately; running jobs get a signal."""
        with self._cv:
            for queue in self._queues.values():
                if job_id in queue:
                    queue.remove(job_id)
                    return self.store.set_job_status(job_id, "cancelled")
            event = self._cancel_events.get(job_id)
        job = self.store.get_job(job_id)
        if job["status"] == "running" and event is not None:
            event.set()
            return job
        if job["status"] == "queued":
            # not yet submitted to this manager (e.g. restart); cancel directly
            return self.store.set_job_status(job_id, "cancelled")
        return job

    def _claim(self) -> str | None:
        with self._cv:
            while True:
                if self._stopping:
                    return None
                for _ in range(len(self._ring)):
                    owner = self._ring[0]
                    self._ring.rotate(-1)
                    queue = self._queues.get(owner)
                    if queue:
                        return queue.popleft()
                self._cv.wait(timeout=0.2)

    def _worker(self):
        while True:
            job_id = self._claim()
            if job_id is None:
                return
            self._execute(job_id)

    def _execute(self, job_id: str):
        try:
            job = self.store.set_job_status(job_id, "running")
        except Conflict:
            return  # cancelled while queued
        event = self._cancel_events.setdefault(job_id, threading.Event())
        log_path = self.store.job_log_path(job_id)
        status = "failed"
        error = None
        with open(log_path, "a", encoding="utf-8") as logf:
            def sink(line: str):
                logf.write(line + "\n")
                logf.flush()

            try:
                if job["kind"] == "training":
                    status = run_training_job(self.store, job, sink, event.is_set)
                else:
                    status = run_evaluation_job(self.store, job, sink, event.is_set)
            except Exception as exc:
                error = f"{type(exc).__name__}: {exc}"
                sink(f"ts={_ts()} step=- event=error error={error!r}")
                sink("traceback: " + " | ".join(traceback.format_exc().splitlines()))
                status = "failed"
        try:
            self.store.set_job_status(job_id, status, error=error)
        except Conflict:
            pass  # already moved to a terminal state (e.g. cancelled)
        finally:
            self._cancel_events.pop(job_id, None)
