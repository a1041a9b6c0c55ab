"""HTTP service over the benchmark corpus with file-backed persistence.

State lives in append-only newline-delimited logs, one per entity; an
in-memory index is rebuilt by replaying the logs on startup, so a restart
reproduces identical read responses. Writes are serialized through a single
lock; annotation writes are last-write-wins per (query, annotator).
"""
from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping, Optional, Union

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .judge import cohens_kappa
from .model import (
    MetricReport,
    Message,
    Query,
    Trajectory,
    ValidationError,
    dump_record,
)

JUDGE_ANNOTATOR = "judge"

ENTITY_LOGS = ("queries", "trajectories", "goldens", "reports", "annotations")


@dataclass(frozen=True)
class AnnotationRecord:
    query_id: str
    annotator_id: str
    selected_candidate: Optional[str] = None  # trajectory id
    selected_index: Optional[int] = None
    flags: tuple[dict, ...] = ()
    timestamp: float = 0.0

    def to_dict(self) -> dict:
        return {
            "query_id": self.query_id,
            "annotator_id": self.annotator_id,
            "selected_candidate": self.selected_candidate,
            "selected_index": self.selected_index,
            "flags": list(self.flags),
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "AnnotationRecord":
        return cls(
            query_id=d["query_id"],
            annotator_id=d["annotator_id"],
            selected_candidate=d.get("selected_candidate"),
            selected_index=d.get("selected_index"),
            flags=tuple(d.get("flags", ())),
            timestamp=float(d.get("timestamp", 0.0)),
        )


class Store:
    """Append-only record log per entity with an in-memory index rebuilt on
    startup. Log replay reproduces identical state."""

    def __init__(self, data_dir: Union[str, Path]):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self.queries: dict[str, Query] = {}
        self.trajectories: dict[str, Trajectory] = {}
        self.golden_status: dict[str, str] = {}  # trajectory_id -> status
        self.approved: dict[str, str] = {}  # query_id -> trajectory_id
        self.reports: list[MetricReport] = []
        # last-write-wins per (query_id, annotator_id)
        self.annotations: dict[tuple[str, str], AnnotationRecord] = {}
        self.flags: dict[str, list[dict]] = {}  # trajectory_id -> flag records
        self._replay()

    def _log_path(self, entity: str) -> Path:
        return self.data_dir / f"{entity}.log"

    def _append(self, entity: str, record: Mapping[str, Any]) -> None:
        with open(self._log_path(entity), "a", encoding="utf-8") as fh:
            fh.write(dump_record(record) + "\n")

    def _replay(self) -> None:
        for entity in ENTITY_LOGS:
            path = self._log_path(entity)
            if not path.exists():
                continue
            with open(path, "r", encoding="utf-8") as fh:
                for line in fh:
                    if line.strip():
                        self._apply(entity, json.loads(line))

    def _apply(self, entity: str, rec: dict) -> None:
        if entity == "queries":
            q = Query.from_dict(rec)
            self.queries[q.id] = q
        elif entity == "trajectories":
            t = Trajectory.from_dict(rec["trajectory"])
            self.trajectories[rec["id"]] = t
        elif entity == "goldens":
            tid, status = rec["trajectory_id"], rec["status"]
            if status == "approved":
                qid = rec["query_id"]
                prior = self.approved.get(qid)
                if prior is not None and prior != tid:
                    self.golden_status[prior] = "candidate"  # demoted, not erased
                self.approved[qid] = tid
            self.golden_status[tid] = status
            if rec.get("issue_text"):
                self.flags.setdefault(tid, []).append(
                    {
                        "trajectory_id": tid,
                        "annotator_id": rec.get("annotator_id", ""),
                        "issue_text": rec["issue_text"],
                    }
                )
        elif entity == "reports":
            self.reports.append(MetricReport.from_dict(rec))
        elif entity == "annotations":
            a = AnnotationRecord.from_dict(rec)
            self.annotations[(a.query_id, a.annotator_id)] = a

    # -- writes (acknowledged once appended to the log) --------------------

    def add_query(self, q: Query) -> None:
        with self._lock:
            self._append("queries", q.to_dict())
            self._apply("queries", q.to_dict())

    def add_trajectory(self, trajectory_id: str, t: Trajectory, status: str = "candidate") -> None:
        with self._lock:
            rec = {"id": trajectory_id, "trajectory": t.to_dict()}
            self._append("trajectories", rec)
            self._apply("trajectories", rec)
            grec = {"trajectory_id": trajectory_id, "query_id": t.query_id, "status": status}
            self._append("goldens", grec)
            self._apply("goldens", grec)

    def add_report(self, r: MetricReport) -> None:
        with self._lock:
            self._append("reports", r.to_dict())
            self._apply("reports", r.to_dict())

    def add_annotation(self, a: AnnotationRecord) -> None:
        with self._lock:
            self._append("annotations", a.to_dict())
            self._apply("annotations", a.to_dict())

    def set_golden_status(
        self,
        trajectory_id: str,
        status: str,
        annotator_id: str = "",
        issue_text: str = "",
    ) -> None:
        t = self.trajectories[trajectory_id]
        rec = {
            "trajectory_id": trajectory_id,
            "query_id": t.query_id,
            "status": status,
            "annotator_id": annotator_id,
        }
        if issue_text:
            rec["issue_text"] = issue_text
        with self._lock:
            self._append("goldens", rec)
            self._apply("goldens", rec)

    # -- reads --------------------------------------------------------------

    def candidates_for(self, query_id: str) -> list[tuple[str, Trajectory]]:
        return sorted(
            ((tid, t) for tid, t in self.trajectories.items() if t.query_id == query_id),
            key=lambda item: item[0],
        )


class SimpleReviser:
    """Deterministic fallback revision model: restates the feedback in the
    revised answer. A real ChatModel plugs in through create_app."""

    name = "simple-reviser"

    def respond(self, messages, tool_specs, sampling) -> Message:
        feedback = messages[-1].content if messages else ""
        return Message(role="assistant", content=f"Revised answer addressing: {feedback}")


def _error(status: int, message: str, **extra: Any) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": message, **extra})


def _candidate_payload(tid: str, t: Trajectory, store: Store) -> dict:
    from .model import extract_tool_sequence

    return {
        "id": tid,
        "source_model": t.source_model,
        "turn_count": t.turn_count,
        "unique_tools": len({name for name, _ in extract_tool_sequence(t)}),
        "status": store.golden_status.get(tid, "candidate"),
        "messages": [m.to_dict() for m in t.messages],
        "final_answer": t.final_answer,
    }


def create_app(store: Store, reviser: Optional[Any] = None) -> FastAPI:
    app = FastAPI(title="trajkit annotation service")
    reviser = reviser or SimpleReviser()

    @app.get("/queries")
    def list_queries(tier: Optional[str] = None, category: Optional[str] = None):
        out = []
        for qid in sorted(store.queries):
            q = store.queries[qid]
            if tier and q.difficulty_tier != tier:
                continue
            if category and q.category != category:
                continue
            out.append(q.to_dict())
        return out

    @app.get("/queries/{query_id}/candidates")
    def get_candidates(query_id: str):
        if query_id not in store.queries:
            return _error(404, "unknown query", query_id=query_id)
        return [
            _candidate_payload(tid, t, store)
            for tid, t in store.candidates_for(query_id)
        ]

    @app.post("/queries/{query_id}/selection")
    async def post_selection(query_id: str, request: Request):
        payload = await request.json()
        if query_id not in store.queries:
            return _error(404, "unknown query", query_id=query_id)
        annotator = payload.get("annotator_id") or request.headers.get("x-annotator-id")
        if not annotator:
            return _error(422, "annotator_id required")
        candidates = store.candidates_for(query_id)
        candidate = payload.get("candidate")
        tid: Optional[str] = None
        index: Optional[int] = None
        if isinstance(candidate, int):
            if not 0 <= candidate < len(candidates):
                return _error(422, "unknown candidate", candidate=candidate)
            index = candidate
            tid = candidates[candidate][0]
        else:
            ids = [c[0] for c in candidates]
            if candidate not in ids:
                return _error(422, "unknown candidate", candidate=candidate)
            tid = str(candidate)
            index = ids.index(tid)
        rec = AnnotationRecord(
            query_id=query_id,
            annotator_id=annotator,
            selected_candidate=tid,
            selected_index=index,
            timestamp=float(payload.get("timestamp", time.time())),
        )
        store.add_annotation(rec)
        return {"ok": True, "selected_candidate": tid, "selected_index": index}

    @app.get("/queries/{query_id}/selection")
    def get_selection(query_id: str):
        if query_id not in store.queries:
            return _error(404, "unknown query", query_id=query_id)
        return sorted(
            (
                a.to_dict()
                for (qid, _), a in store.annotations.items()
                if qid == query_id and a.selected_candidate is not None
            ),
            key=lambda d: d["annotator_id"],
        )

    @app.post("/trajectories/{trajectory_id}/flag")
    async def post_flag(trajectory_id: str, request: Request):
        payload = await request.json()
        if trajectory_id not in store.trajectories:
            return _error(404, "unknown trajectory", trajectory_id=trajectory_id)
        issue = (payload.get("issue_text") or "").strip()
        if not issue:
            return _error(422, "issue_text required")
        annotator = payload.get("annotator_id") or request.headers.get("x-annotator-id", "")
        store.set_golden_status(
            trajectory_id, "flagged", annotator_id=annotator, issue_text=issue
        )
        return {"ok": True, "status": "flagged"}

    @app.post("/trajectories/{trajectory_id}/revise")
    async def post_revise(trajectory_id: str, request: Request):
        body = await request.body()
        payload = json.loads(body) if body else {}
        if trajectory_id not in store.trajectories:
            return _error(404, "unknown trajectory", trajectory_id=trajectory_id)
        original = store.trajectories[trajectory_id]
        flags = store.flags.get(trajectory_id, [])
        feedback = payload.get("feedback") or "; ".join(f["issue_text"] for f in flags)
        if not feedback:
            return _error(422, "no feedback available for revision")
        prompt = Message(
            role="user",
            content=f"Please revise your previous response. Reviewer feedback: {feedback}",
        )
        try:
            revised_msg = reviser.respond(
                tuple(original.messages) + (prompt,), (), {"temperature": 0}
            )
        except Exception as exc:  # noqa: BLE001
            return _error(502, f"revision model failed: {exc}")
        revised = Trajectory(
            query_id=original.query_id,
            messages=tuple(original.messages) + (prompt, revised_msg),
            source_model=f"{original.source_model}+revised",
        )
        n = 1
        while f"{trajectory_id}~rev{n}" in store.trajectories:
            n += 1
        new_id = f"{trajectory_id}~rev{n}"
        store.add_trajectory(new_id, revised, status="candidate")
        return {"ok": True, "id": new_id}

    @app.post("/queries/{query_id}/golden")
    async def post_golden(query_id: str, request: Request):
        payload = await request.json()
        if query_id not in store.queries:
            return _error(404, "unknown query", query_id=query_id)
        tid = payload.get("trajectory_id")
        ids = [c[0] for c in store.candidates_for(query_id)]
        if tid not in ids:
            return _error(422, "unknown candidate", trajectory_id=tid)
        store.set_golden_status(tid, "approved", annotator_id=payload.get("annotator_id", ""))
        return {"ok": True, "approved": tid}

    @app.get("/agreement")
    def get_agreement(metric: str = "selection"):
        if metric != "selection":
            return _error(422, f"unsupported agreement metric {metric!r}")
        selections: dict[str, dict[str, str]] = {}
        for (qid, annot), a in store.annotations.items():
            if a.selected_candidate is not None:
                selections.setdefault(annot, {})[qid] = a.selected_candidate
        annotators = sorted(selections)
        pairs: dict[str, Any] = {}
        for i, a in enumerate(annotators):
            for b in annotators[i + 1 :]:
                shared = sorted(set(selections[a]) & set(selections[b]))
                if not shared:
                    continue
                try:
                    k = cohens_kappa(
                        [selections[a][q] for q in shared],
                        [selections[b][q] for q in shared],
                    )
                except ValidationError:
                    k = None
                pairs[f"{a}|{b}"] = {"kappa": k, "n": len(shared)}
        kappas = [p["kappa"] for p in pairs.values() if p["kappa"] is not None]
        return {
            "metric": "selection",
            "pairs": pairs,
            "mean_kappa": sum(kappas) / len(kappas) if kappas else None,
        }

    @app.get("/reports/by-category")
    def reports_by_category():
        # incomplete reports are excluded, matching the aggregation rule
        groups: dict[tuple[str, str], list[float]] = {}
        for r in store.reports:
            if not r.complete or r.overall is None:
                continue
            q = store.queries.get(r.query_id)
            category = q.category if q else ""
            groups.setdefault((r.source_model, category), []).append(r.overall)
        return [
            {
                "source_model": model,
                "category": category,
                "mean_overall": sum(vals) / len(vals),
                "n": len(vals),
            }
            for (model, category), vals in sorted(groups.items())
        ]

    return app
