"""HTTP labeling service: exposes the live loop to a human annotator.

The loop runs on a background thread. Each time it needs labels it parks the
batch in a :class:`LabelingSession` and blocks; annotators drain the queue
over HTTP and then POST /advance to resume the loop. Labels are appended to
the store's journal the moment they arrive, so a restarted service replays
the journal and fast-forwards through every batch that was already fully
labeled (those need no second /advance).

One session per service instance. No endpoint ever returns ground truth,
model confidence, or prediction for a pair that is still pending.
"""

from __future__ import annotations

import threading
from typing import Literal

from fastapi import FastAPI
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from almatch.dataset import CandidatePair, DatasetSplit, LabelStore, serialize_pair
from almatch.evaluation import IterationReport
from almatch.selector import GroundTruthOracle, LoopConfig, run_active_learning


class ConflictError(ValueError):
    """A label that contradicts one already recorded."""


class NotPendingError(KeyError):
    """A label for a pair that is not in the current queue."""


class LabelingSession:
    """Thread-safe pending-batch mailbox between the loop and HTTP handlers.

    Implements the oracle protocol: :meth:`request` publishes the batch and
    blocks until every pair is labeled and an advance was requested. A batch
    whose labels are all present at publish time (journal replay after a
    crash) returns immediately.
    """

    def __init__(self, store: LabelStore):
        self.store = store
        self.cond = threading.Condition()
        self.pending: dict[str, CandidatePair] = {}
        self.batch_index = -1
        self.advance_requested = False
        self.error: str | None = None

    def _unlabeled(self) -> list[str]:
        return [pid for pid in self.pending if self.store.get(pid) is None]

    # ---- loop side ----

    def request(self, pairs: list[CandidatePair]) -> dict[str, int]:
        if not pairs:
            return {}
        with self.cond:
            self.pending = {p.pair_id: p for p in pairs}
            self.batch_index += 1
            self.advance_requested = False
            if not self._unlabeled():
                labels = {pid: self.store.get(pid) for pid in self.pending}
                self.pending = {}
                return labels
            self.cond.notify_all()
            while self._unlabeled() or not self.advance_requested:
                self.cond.wait()
            labels = {pid: self.store.get(pid) for pid in self.pending}
            self.pending = {}
            self.advance_requested = False
            return labels

    def fail(self, message: str) -> None:
        with self.cond:
            self.error = message
            self.cond.notify_all()

    # ---- HTTP side ----

    def submit(self, pair_id: str, label: int, annotator_id: str = "") -> str:
        with self.cond:
            if pair_id not in self.pending:
                raise NotPendingError(pair_id)
            existing = self.store.get(pair_id)
            if existing is not None:
                if existing == label:
                    return "idempotent"
                raise ConflictError(
                    f"pair {pair_id!r} already labeled {existing}, got {label}"
                )
            provenance = f"human:{annotator_id}" if annotator_id else "human"
            self.store.record(pair_id, label, provenance=provenance)
            self.cond.notify_all()
            return "accepted"

    def advance(self) -> int:
        """0 = resumed; positive = labels still missing; -1 = no batch."""
        with self.cond:
            if not self.pending:
                return -1
            remaining = len(self._unlabeled())
            if remaining:
                return remaining
            self.advance_requested = True
            self.cond.notify_all()
            return 0

    def queue_cards(self, limit: int | None = None) -> list[dict]:
        with self.cond:
            unlabeled = self._unlabeled()
        cards = []
        for position, pid in enumerate(unlabeled[: limit if limit else None]):
            pair = self.pending[pid]
            cards.append(
                {
                    "pair_id": pid,
                    "position": position,
                    "left": [[name, value] for name, value in pair.left.attributes],
                    "right": [[name, value] for name, value in pair.right.attributes],
                    "serialized": serialize_pair(pair),
                }
            )
        return cards


class SessionController:
    """Owns the loop thread, the session, and the report log."""

    def __init__(
        self,
        split: DatasetSplit,
        config: LoopConfig,
        store: LabelStore,
        mode: str = "human",
    ):
        if mode not in ("human", "oracle"):
            raise ValueError(f"unknown mode {mode!r}")
        self.split = split
        self.config = config
        self.store = store
        self.mode = mode
        self.session = LabelingSession(store)
        self.reports: list[IterationReport] = []
        self.thread: threading.Thread | None = None
        self.done = False
        self.error: str | None = None
        self.final_state = None

    def start(self) -> None:
        oracle = self.session if self.mode == "human" else GroundTruthOracle(self.store)

        def target():
            try:
                self.final_state = run_active_learning(
                    self.split,
                    self.config,
                    oracle=oracle,
                    store=self.store,
                    on_report=self.reports.append,
                )
                self.done = True
            except Exception as exc:  # surfaced via /status, not a crash
                self.error = f"{type(exc).__name__}: {exc}"
                self.session.fail(self.error)

        self.thread = threading.Thread(target=target, daemon=True, name="almatch-loop")
        self.thread.start()

    def status(self) -> dict:
        with self.session.cond:
            batch_size = len(self.session.pending)
            pending = len(self.session._unlabeled())
        last_f1 = None
        for report in reversed(self.reports):
            if report.f1 is not None:
                last_f1 = report.f1
                break
        if self.error:
            state = "failed"
        elif self.done:
            state = "done"
        elif pending or batch_size:
            state = "waiting_for_labels" if pending else "ready_to_advance"
        else:
            state = "running"
        return {
            "iteration": len(self.reports),
            "pending": pending,
            "labeled_this_iteration": batch_size - pending,
            "total_labels": len(self.store),
            "last_f1": last_f1,
            "running": bool(self.thread and self.thread.is_alive() and not self.done),
            "state": state,
            "error": self.error,
        }


class LabelRequest(BaseModel):
    pair_id: str
    label: Literal[0, 1]
    annotator_id: str = ""


def create_app(controller: SessionController) -> FastAPI:
    app = FastAPI(title="almatch labeling service")

    @app.get("/status")
    def status():
        return controller.status()

    @app.get("/queue")
    def queue(limit: int | None = None):
        return controller.session.queue_cards(limit)

    @app.get("/reports")
    def reports():
        return [r.to_dict() for r in controller.reports]

    @app.post("/label")
    def label(req: LabelRequest):
        try:
            outcome = controller.session.submit(req.pair_id, req.label, req.annotator_id)
        except NotPendingError:
            return JSONResponse(
                status_code=409,
                content={"detail": f"pair {req.pair_id!r} is not in the pending queue"},
            )
        except ConflictError as exc:
            return JSONResponse(status_code=409, content={"detail": str(exc)})
        return {"status": outcome, "pair_id": req.pair_id}

    @app.post("/advance")
    def advance():
        outcome = controller.session.advance()
        if outcome == -1:
            return JSONResponse(
                status_code=409, content={"detail": "no pending batch to advance past"}
            )
        if outcome > 0:
            return JSONResponse(
                status_code=409,
                content={"detail": f"{outcome} labels still missing in this batch"},
            )
        return {"advanced": True}

    return app


def serve(controller: SessionController, host: str = "127.0.0.1", port: int = 8000) -> None:
    """Start the loop thread and block serving HTTP until interrupted."""
    import uvicorn

    controller.start()
    uvicorn.run(create_app(controller), host=host, port=port, log_level="warning")
