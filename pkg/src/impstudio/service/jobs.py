"""Optimization job manager: bounded worker pool, progress events, cancellation.

Each job buffers one event per epoch (best design and fitness so far). Event
consumers replay the buffer from the start and then block on the job's
condition variable, so a late or reconnecting subscriber always sees the
complete, gap-free, ordered epoch sequence. Cancellation is cooperative and
takes effect at epoch boundaries.
"""

from __future__ import annotations

import threading
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterator

from ..design import VectorDesign, design_to_dict
from ..errors import OptimizationCancelled
from ..optimizer import GAConfig, Predictor, TargetSpec, optimize
from .store import FileStore

TERMINAL_STATES = ("done", "cancelled", "failed")


@dataclass
class Job:
    id: str
    design_id: str
    targets: dict[str, float]
    config: GAConfig
    state: str = "queued"
    epoch: int = -1  # last completed epoch index
    error: str | None = None
    events: list[dict] = field(default_factory=list)
    best_design: dict | None = None
    best_fitness: dict | None = None
    cancel_requested: bool = False
    cond: threading.Condition = field(default_factory=threading.Condition)

    @property
    def terminal(self) -> bool:
        return self.state in TERMINAL_STATES

    def public_dict(self) -> dict:
        return {
            "id": self.id,
            "design_id": self.design_id,
            "targets": self.targets,
            "config": self.config.to_dict(),
            "state": self.state,
            "epoch": self.epoch,
            "epochs": self.config.epochs,
            "error": self.error,
            "best_design": self.best_design,
            "best_fitness": self.best_fitness,
        }


class DesignBusy(Exception):
    """A queued or running job already references this design."""


class JobManager:
    def __init__(self, store: FileStore, predictor: Predictor, workers: int = 2):
        self._store = store
        self._predictor = predictor
        self._executor = ThreadPoolExecutor(max_workers=workers, thread_name_prefix="ga-worker")
        self._jobs: dict[str, Job] = {}
        self._active_by_design: dict[str, str] = {}
        self._lock = threading.Lock()
        self._recover()

    def _recover(self) -> None:
        records, _ = self._store.load_all("jobs")
        for record_id, payload in records.items():
            job = Job(
                id=payload["id"],
                design_id=payload["design_id"],
                targets=payload.get("targets", {}),
                config=GAConfig.from_dict(payload["config"]),
                state=payload["state"],
                epoch=payload.get("epoch", -1),
                error=payload.get("error"),
                best_design=payload.get("best_design"),
                best_fitness=payload.get("best_fitness"),
                events=payload.get("events", []),
            )
            if not job.terminal:
                job.state = "failed"
                job.error = "restart"
                self._store.save("jobs", job.id, job.public_dict() | {"events": job.events})
            self._jobs[record_id] = job

    def get(self, job_id: str) -> Job | None:
        return self._jobs.get(job_id)

    def active_job_for(self, design_id: str) -> str | None:
        with self._lock:
            return self._active_by_design.get(design_id)

    def submit(self, design_id: str, design: VectorDesign, targets: dict[str, float], config: GAConfig) -> Job:
        job = Job(id=f"j-{uuid.uuid4().hex[:12]}", design_id=design_id, targets=targets, config=config)
        with self._lock:
            if design_id in self._active_by_design:
                raise DesignBusy(f"design {design_id} already has job {self._active_by_design[design_id]}")
            self._active_by_design[design_id] = job.id
            self._jobs[job.id] = job
        self._persist(job)
        self._executor.submit(self._run, job, design)
        return job

    def cancel(self, job_id: str) -> bool:
        job = self._jobs.get(job_id)
        if job is None:
            return False
        with job.cond:
            job.cancel_requested = True
            job.cond.notify_all()
        return True

    def shutdown(self) -> None:
        for job in self._jobs.values():
            job.cancel_requested = True
        self._executor.shutdown(wait=True, cancel_futures=True)

    def _persist(self, job: Job) -> None:
        self._store.save("jobs", job.id, job.public_dict() | {"events": job.events})

    def _release(self, job: Job) -> None:
        with self._lock:
            if self._active_by_design.get(job.design_id) == job.id:
                del self._active_by_design[job.design_id]

    def _run(self, job: Job, design: VectorDesign) -> None:
        with job.cond:
            if job.cancel_requested:
                job.state = "cancelled"
                job.cond.notify_all()
                self._release(job)
                self._persist(job)
                return
            job.state = "running"

        def on_epoch(epoch: int, best_design: VectorDesign, report) -> None:
            event = {"epoch": epoch, "fitness": report.to_dict(), "design": design_to_dict(best_design)}
            with job.cond:
                job.events.append(event)
                job.epoch = epoch
                job.best_design = event["design"]
                job.best_fitness = event["fitness"]
                job.cond.notify_all()

        try:
            optimize(
                design,
                TargetSpec(job.targets),
                self._predictor,
                job.config,
                on_epoch=on_epoch,
                cancel=lambda: job.cancel_requested,
            )
            final_state = "done"
        except OptimizationCancelled:
            final_state = "cancelled"
        except Exception as exc:  # noqa: BLE001 - job isolation boundary
            final_state = "failed"
            job.error = f"{type(exc).__name__}: {exc}"
        with job.cond:
            job.state = final_state
            job.cond.notify_all()
        self._release(job)
        self._persist(job)

    def events(self, job_id: str) -> Iterator[dict]:
        """Yield the job's epoch events in order, blocking until the job
        reaches a terminal state and the buffer is drained."""
        job = self._jobs[job_id]
        index = 0
        while True:
            with job.cond:
                while len(job.events) <= index and not job.terminal:
                    job.cond.wait(timeout=1.0)
                pending = job.events[index:]
                terminal = job.terminal
            for event in pending:
                yield event
            index += len(pending)
            if terminal and index >= len(job.events):
                return
