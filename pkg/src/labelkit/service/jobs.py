"""Background jobs with polling. One runner thread per job; at most one
active pre-annotation job per project. Progress only moves forward, and a
job that reaches done or failed never changes again."""

from __future__ import annotations

import secrets
import threading
import traceback
from typing import Callable, Dict, Optional

from ..errors import ConflictError, NotFoundError

ACTIVE_STATES = ("queued", "running")
TERMINAL_STATES = ("done", "failed")


class Job:
    def __init__(self, job_id: str, kind: str, project_id: int) -> None:
        self.id = job_id
        self.kind = kind
        self.project_id = project_id
        self._lock = threading.Lock()
        self._state = "queued"
        self._processed = 0
        self._total = 0
        self._report: Optional[dict] = None
        self._error: Optional[str] = None
        self._finished = threading.Event()

    @property
    def state(self) -> str:
        with self._lock:
            return self._state

    def _transition(self, state: str) -> None:
        if self._state in TERMINAL_STATES:
            raise RuntimeError(f"job {self.id} already {self._state}")
        self._state = state

    def mark_running(self) -> None:
        with self._lock:
            self._transition("running")

    def update_progress(self, processed: int, total: int) -> None:
        with self._lock:
            self._processed = max(self._processed, processed)
            self._total = max(self._total, total)

    def finish(self, report: Optional[dict]) -> None:
        with self._lock:
            self._transition("done")
            self._report = report
        self._finished.set()

    def fail(self, error: str) -> None:
        with self._lock:
            self._transition("failed")
            self._error = error
        self._finished.set()

    def wait(self, timeout: Optional[float] = None) -> bool:
        return self._finished.wait(timeout)

    def as_dict(self) -> dict:
        with self._lock:
            return {
                "id": self.id,
                "kind": self.kind,
                "project_id": self.project_id,
                "state": self._state,
                "progress": {"processed": self._processed, "total": self._total},
                "report": self._report,
                "error": self._error,
            }


class JobManager:
    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._jobs: Dict[str, Job] = {}

    def get(self, job_id: str) -> Job:
        with self._lock:
            job = self._jobs.get(job_id)
        if job is None:
            raise NotFoundError(f"no job with id {job_id}")
        return job

    def start(
        self,
        kind: str,
        project_id: int,
        runner: Callable[[Job], Optional[dict]],
        *,
        exclusive: bool = False,
    ) -> Job:
        """Register a job and run it on its own thread. With exclusive set,
        a second job of the same kind on the same project is refused while
        the first is still active."""
        with self._lock:
            if exclusive:
                clash = next(
                    (
                        j
                        for j in self._jobs.values()
                        if j.kind == kind
                        and j.project_id == project_id
                        and j.state in ACTIVE_STATES
                    ),
                    None,
                )
                if clash is not None:
                    raise ConflictError(
                        f"a {kind} job is already active for this project"
                    )
            job = Job(secrets.token_hex(8), kind, project_id)
            self._jobs[job.id] = job

        def run() -> None:
            job.mark_running()
            try:
                job.finish(runner(job))
            except BaseException as exc:  # noqa: BLE001 - job isolation boundary
                job.fail(f"{type(exc).__name__}: {exc}")
                traceback.print_exc()

        thread = threading.Thread(target=run, name=f"job-{job.id}", daemon=True)
        thread.start()
        return job
