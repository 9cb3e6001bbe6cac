"""Post-editing workbench: assignment, edit submission, progress, provenance.

A single-writer store serializes all mutation under one lock and appends every
accepted event to a write-ahead log (flushed and fsynced before the caller is
acknowledged), so a crash never loses a submitted annotation. Assignment is
pull-based: annotators receive items of their own strategy first, then mixed
items subject to the per-role quota. Leases on in-progress items expire after
an idle period and the items return to the pool.
"""

from __future__ import annotations

import json
import os
import threading
import time
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import JSONResponse

from cskit.corpus import (
    ELIGIBLE_STRATEGIES,
    AnnotatorRole,
    Corpus,
    CSRecord,
    DocKind,
    GroundSpan,
    Strategy,
    fc_document_text,
    ngo_document_text,
    save_corpus,
    validate_corpus,
)
from cskit.editmetrics import hter_pair
from cskit.genstrat import DEFAULT_GUIDELINES

DEFAULT_LEASE_SECONDS = 24 * 3600

GROUND_TEXT_MIN_WORDS = 5
GROUND_TEXT_MAX_WORDS = 4500


@dataclass(frozen=True)
class AnnotatorProfile:
    id: str
    role: AnnotatorRole
    display_name: str = ""


def load_annotators(path: str | Path) -> dict[str, AnnotatorProfile]:
    """JSON list of {id, role, display_name}."""
    profiles = {}
    for d in json.loads(Path(path).read_text(encoding="utf-8")):
        p = AnnotatorProfile(
            id=str(d["id"]), role=AnnotatorRole(d["role"]), display_name=d.get("display_name", "")
        )
        profiles[p.id] = p
    return profiles


class WorkbenchError(Exception):
    pass


class UnknownAnnotatorError(WorkbenchError):
    pass


class NoEligibleItemsError(WorkbenchError):
    """Pending items exist, but none this annotator may take."""


class NothingPendingError(WorkbenchError):
    """Every item is already assigned or submitted."""


class NotHeldError(WorkbenchError):
    pass


class DuplicateSubmissionError(WorkbenchError):
    pass


class SpanBoundsError(WorkbenchError):
    def __init__(self, doc_id: str, start: int, end: int, reason: str):
        super().__init__(f"span {start}..{end} on doc {doc_id!r}: {reason}")
        self.doc_id = doc_id
        self.start = start
        self.end = end


@dataclass
class Assignment:
    annotator_id: str
    item_id: str
    state: str  # "in_progress" | "submitted"
    leased_at: float


class WorkbenchStore:
    """In-memory state over an immutable corpus, recovered from the WAL."""

    def __init__(
        self,
        corpus: Corpus,
        annotators: Mapping[str, AnnotatorProfile],
        wal_path: str | Path,
        mix_quota: Mapping[AnnotatorRole, int] | None = None,
        lease_seconds: float = DEFAULT_LEASE_SECONDS,
        clock=time.time,
    ):
        self._corpus = corpus
        self._annotators = dict(annotators)
        self._records: dict[str, CSRecord] = dict(corpus.records)
        self._assignments: dict[str, Assignment] = {}
        self._live_hter: dict[str, float] = {}
        self._mix_quota = dict(mix_quota) if mix_quota else None
        self._lease_seconds = lease_seconds
        self._clock = clock
        self._lock = threading.Lock()
        self._wal_path = Path(wal_path)
        self._replay_wal()
        self._wal = open(self._wal_path, "a", encoding="utf-8")

    # -- WAL ---------------------------------------------------------------

    def _replay_wal(self) -> None:
        if not self._wal_path.exists():
            return
        with open(self._wal_path, encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                ev = json.loads(line)
                if ev["event"] == "assign":
                    self._assignments[ev["item_id"]] = Assignment(
                        annotator_id=ev["annotator_id"],
                        item_id=ev["item_id"],
                        state="in_progress",
                        leased_at=ev["ts"],
                    )
                elif ev["event"] == "submit":
                    self._apply_submit(
                        ev["annotator_id"],
                        ev["item_id"],
                        ev["edited_text"],
                        [
                            GroundSpan(s["doc_id"], DocKind(s["doc_kind"]), s["start"], s["end"])
                            for s in ev["spans"]
                        ],
                        ev.get("comment"),
                        ev["live_hter"],
                        ev["ts"],
                    )

    def _append_wal(self, event: dict) -> None:
        self._wal.write(json.dumps(event, ensure_ascii=False, sort_keys=True) + "\n")
        self._wal.flush()
        os.fsync(self._wal.fileno())

    def _apply_submit(self, annotator_id, item_id, edited_text, spans, comment, live, ts) -> None:
        role = self._annotators[annotator_id].role
        rec = self._records[item_id]
        edited_at = datetime.fromtimestamp(ts, tz=timezone.utc).replace(microsecond=0)
        self._records[item_id] = replace(
            rec,
            edited_text=edited_text,
            annotator_role=role,
            ground_spans=tuple(spans),
            comments=comment,
            edited_at=edited_at,
        )
        self._assignments[item_id] = Assignment(
            annotator_id=annotator_id, item_id=item_id, state="submitted", leased_at=ts
        )
        self._live_hter[item_id] = live

    # -- assignment ---------------------------------------------------------

    def _expire_leases(self) -> None:
        now = self._clock()
        for a in list(self._assignments.values()):
            if a.state == "in_progress" and now - a.leased_at > self._lease_seconds:
                del self._assignments[a.item_id]

    def _mix_taken(self, role: AnnotatorRole) -> int:
        count = 0
        for a in self._assignments.values():
            rec = self._records[a.item_id]
            if rec.strategy is Strategy.MIX and self._annotators[a.annotator_id].role is role:
                count += 1
        return count

    def _may_take_mix(self, role: AnnotatorRole) -> bool:
        if self._mix_quota is not None:
            return self._mix_taken(role) < self._mix_quota.get(role, 0)
        other = AnnotatorRole.NGO if role is AnnotatorRole.FC else AnnotatorRole.FC
        return self._mix_taken(role) <= self._mix_taken(other)

    def _item_payload(self, rec: CSRecord) -> dict:
        claim = self._corpus.claims[rec.claim_id]
        bundle = self._corpus.bundles.get(rec.claim_id)
        documents = []
        if rec.strategy in (Strategy.FC, Strategy.MIX) and bundle:
            article = self._corpus.articles[bundle.fc_article_id]
            documents.append(
                {
                    "doc_id": article.id,
                    "doc_kind": DocKind.FC.value,
                    "title": f"Fact-checking article ({article.publisher})",
                    "text": fc_document_text(article),
                }
            )
        if rec.strategy in (Strategy.NGO, Strategy.MIX) and bundle and bundle.ngo_pairs:
            documents.append(
                {
                    "doc_id": bundle.claim_id,
                    "doc_kind": DocKind.NGO.value,
                    "title": "Myth / anti-stereotype pairs",
                    "text": ngo_document_text(bundle),
                }
            )
        return {
            "item_id": rec.id,
            "strategy": rec.strategy.value,
            "claim": {"id": claim.id, "text": claim.text, "target_group": claim.target_group.value},
            "generated_text": rec.generated_text,
            "documents": documents,
            "guidelines": DEFAULT_GUIDELINES[rec.strategy],
        }

    def next_item(self, annotator_id: str) -> dict:
        """Atomically lease the next eligible item to this annotator."""
        with self._lock:
            profile = self._annotators.get(annotator_id)
            if profile is None:
                raise UnknownAnnotatorError(f"unknown annotator {annotator_id!r}")
            self._expire_leases()
            pending = sorted(
                (
                    rec
                    for rec in self._records.values()
                    if rec.edited_text is None and rec.id not in self._assignments
                ),
                key=lambda r: r.id,
            )
            if not pending:
                raise NothingPendingError("all items are assigned or submitted")
            own = [r for r in pending if r.strategy is not Strategy.MIX and r.strategy in ELIGIBLE_STRATEGIES[profile.role]]
            chosen = None
            if own:
                chosen = own[0]
            else:
                mix = [r for r in pending if r.strategy is Strategy.MIX]
                if mix and self._may_take_mix(profile.role):
                    chosen = mix[0]
            if chosen is None:
                raise NoEligibleItemsError(f"no items eligible for role {profile.role.value}")
            ts = self._clock()
            self._append_wal(
                {"event": "assign", "item_id": chosen.id, "annotator_id": annotator_id, "ts": ts}
            )
            self._assignments[chosen.id] = Assignment(
                annotator_id=annotator_id, item_id=chosen.id, state="in_progress", leased_at=ts
            )
            return self._item_payload(chosen)

    def get_item(self, item_id: str) -> dict:
        with self._lock:
            rec = self._records.get(item_id)
            if rec is None:
                raise WorkbenchError(f"unknown item {item_id!r}")
            return self._item_payload(rec)

    def _validate_spans(self, rec: CSRecord, spans: Sequence[GroundSpan]) -> None:
        bundle = self._corpus.bundles.get(rec.claim_id)
        for span in spans:
            if span.start < 0 or span.start >= span.end:
                raise SpanBoundsError(span.doc_id, span.start, span.end, "requires 0 <= start < end")
            if span.doc_kind is DocKind.FC:
                if bundle is None or span.doc_id != bundle.fc_article_id:
                    raise SpanBoundsError(span.doc_id, span.start, span.end, "not this item's fact-checking document")
                text = fc_document_text(self._corpus.articles[bundle.fc_article_id])
            else:
                if bundle is None or span.doc_id != rec.claim_id:
                    raise SpanBoundsError(span.doc_id, span.start, span.end, "not this item's myth document")
                text = ngo_document_text(bundle)
            if span.end > len(text):
                raise SpanBoundsError(
                    span.doc_id, span.start, span.end, f"end beyond document length {len(text)}"
                )

    def submit_edit(
        self,
        annotator_id: str,
        item_id: str,
        edited_text: str,
        spans: Sequence[GroundSpan] = (),
        comment: str | None = None,
    ) -> dict:
        """Persist the edit (WAL first) and return the live edit-rate feedback."""
        with self._lock:
            if annotator_id not in self._annotators:
                raise UnknownAnnotatorError(f"unknown annotator {annotator_id!r}")
            rec = self._records.get(item_id)
            if rec is None:
                raise WorkbenchError(f"unknown item {item_id!r}")
            assignment = self._assignments.get(item_id)
            if assignment and assignment.state == "submitted":
                raise DuplicateSubmissionError(f"item {item_id!r} was already submitted")
            if assignment is None or assignment.annotator_id != annotator_id:
                raise NotHeldError(f"item {item_id!r} is not held by {annotator_id!r}")
            if not edited_text.strip():
                raise WorkbenchError("edited_text must be non-empty")
            if rec.strategy not in ELIGIBLE_STRATEGIES[self._annotators[annotator_id].role]:
                raise WorkbenchError(
                    f"role {self._annotators[annotator_id].role.value} cannot annotate {rec.strategy.value}"
                )
            self._validate_spans(rec, spans)
            live = hter_pair(rec.generated_text, edited_text)
            ts = self._clock()
            self._append_wal(
                {
                    "event": "submit",
                    "item_id": item_id,
                    "annotator_id": annotator_id,
                    "edited_text": edited_text,
                    "spans": [
                        {"doc_id": s.doc_id, "doc_kind": s.doc_kind.value, "start": s.start, "end": s.end}
                        for s in spans
                    ],
                    "comment": comment,
                    "live_hter": live,
                    "ts": ts,
                }
            )
            self._apply_submit(annotator_id, item_id, edited_text, list(spans), comment, live, ts)
            return {"accepted": True, "live_hter": live}

    # -- reads ---------------------------------------------------------------

    def progress(self) -> dict:
        with self._lock:
            self._expire_leases()
            cells: dict[tuple[str, str], dict] = {}
            pending: dict[str, int] = {}
            for rec in self._records.values():
                assignment = self._assignments.get(rec.id)
                if assignment is None:
                    pending[rec.strategy.value] = pending.get(rec.strategy.value, 0) + 1
                    continue
                role = self._annotators[assignment.annotator_id].role.value
                cell = cells.setdefault(
                    (rec.strategy.value, role),
                    {"strategy": rec.strategy.value, "role": role, "assigned": 0, "submitted": 0, "hter_sum": 0.0},
                )
                if assignment.state == "submitted":
                    cell["submitted"] += 1
                    cell["hter_sum"] += self._live_hter.get(rec.id, 0.0)
                else:
                    cell["assigned"] += 1
            rows = []
            for (_s, _r), cell in sorted(cells.items()):
                n = cell["submitted"]
                rows.append(
                    {
                        "strategy": cell["strategy"],
                        "role": cell["role"],
                        "assigned": cell["assigned"],
                        "submitted": n,
                        "mean_live_hter": cell["hter_sum"] / n if n else None,
                    }
                )
            return {"total": len(self._records), "pending": pending, "cells": rows}

    def snapshot_corpus(self) -> Corpus:
        with self._lock:
            return self._corpus.with_records(self._records.values())

    def export_annotations(self, path: str | Path) -> None:
        corpus = self.snapshot_corpus()
        save_corpus(corpus, path)

    def close(self) -> None:
        self._wal.close()


# ---------------------------------------------------------------------------
# ground-text provenance


@dataclass(frozen=True)
class GroundTextExclusion:
    record_id: str
    reason: str


@dataclass(frozen=True)
class GroundTextShare:
    role: AnnotatorRole
    n_records: int
    fc_chars: int
    ngo_chars: int

    @property
    def fc_share(self) -> float:
        total = self.fc_chars + self.ngo_chars
        return 100.0 * self.fc_chars / total if total else 0.0


@dataclass(frozen=True)
class GroundTextReport:
    shares: list[GroundTextShare] = field(default_factory=list)
    exclusions: list[GroundTextExclusion] = field(default_factory=list)


def _span_words(corpus: Corpus, spans: Iterable[GroundSpan]) -> int:
    words = 0
    for span in spans:
        text = corpus.document_text(span.doc_kind, span.doc_id)
        if text:
            words += len(text[span.start : span.end].split())
    return words


def ground_text_analysis(records: Iterable[CSRecord], corpus: Corpus) -> GroundTextReport:
    """Character-weighted share of ground text per document kind, per annotator
    role. Outliers (too short, too long, or spans inconsistent with the
    strategy) are excluded and reported."""
    per_role: dict[AnnotatorRole, dict] = {}
    exclusions: list[GroundTextExclusion] = []
    for rec in records:
        if rec.annotator_role is None or not rec.ground_spans:
            continue
        kinds = {s.doc_kind for s in rec.ground_spans}
        if rec.strategy is Strategy.FC and DocKind.NGO in kinds:
            exclusions.append(GroundTextExclusion(rec.id, "myth-document span on a fact-checking item"))
            continue
        if rec.strategy is Strategy.NGO and DocKind.FC in kinds:
            exclusions.append(GroundTextExclusion(rec.id, "fact-checking span on a myth item"))
            continue
        words = _span_words(corpus, rec.ground_spans)
        if words < GROUND_TEXT_MIN_WORDS:
            exclusions.append(GroundTextExclusion(rec.id, f"ground text too short ({words} words)"))
            continue
        if words > GROUND_TEXT_MAX_WORDS:
            exclusions.append(GroundTextExclusion(rec.id, f"ground text too long ({words} words)"))
            continue
        agg = per_role.setdefault(rec.annotator_role, {"n": 0, "fc": 0, "ngo": 0})
        agg["n"] += 1
        for span in rec.ground_spans:
            key = "fc" if span.doc_kind is DocKind.FC else "ngo"
            agg[key] += span.end - span.start
    shares = [
        GroundTextShare(role=role, n_records=agg["n"], fc_chars=agg["fc"], ngo_chars=agg["ngo"])
        for role, agg in sorted(per_role.items(), key=lambda kv: kv[0].value)
    ]
    return GroundTextReport(shares=shares, exclusions=exclusions)


# ---------------------------------------------------------------------------
# HTTP service


def create_app(store: WorkbenchStore, token: str | None = None, static_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="counterspeech post-editing workbench")

    def check_auth(request: Request) -> None:
        if token and request.headers.get("Authorization") != f"Bearer {token}":
            raise HTTPException(status_code=401, detail="missing or invalid bearer token")

    def http_error(e: WorkbenchError) -> HTTPException:
        if isinstance(e, UnknownAnnotatorError):
            return HTTPException(status_code=404, detail=str(e))
        if isinstance(e, (NoEligibleItemsError, NothingPendingError)):
            return HTTPException(status_code=409, detail=str(e))
        if isinstance(e, (NotHeldError, DuplicateSubmissionError)):
            return HTTPException(status_code=409, detail=str(e))
        if isinstance(e, SpanBoundsError):
            return HTTPException(
                status_code=422,
                detail={"message": str(e), "doc_id": e.doc_id, "start": e.start, "end": e.end},
            )
        return HTTPException(status_code=400, detail=str(e))

    @app.get("/api/next")
    def api_next(annotator: str, request: Request):
        check_auth(request)
        try:
            return store.next_item(annotator)
        except WorkbenchError as e:
            raise http_error(e) from None

    @app.get("/api/items/{item_id}")
    def api_item(item_id: str, request: Request):
        check_auth(request)
        try:
            return store.get_item(item_id)
        except WorkbenchError as e:
            raise http_error(e) from None

    @app.post("/api/items/{item_id}/edit")
    def api_edit(item_id: str, payload: dict, request: Request):
        check_auth(request)
        try:
            spans = [
                GroundSpan(
                    doc_id=str(s["doc_id"]),
                    doc_kind=DocKind(s["doc_kind"]),
                    start=int(s["start"]),
                    end=int(s["end"]),
                )
                for s in payload.get("spans", [])
            ]
            return store.submit_edit(
                annotator_id=str(payload["annotator"]),
                item_id=item_id,
                edited_text=str(payload.get("edited_text", "")),
                spans=spans,
                comment=payload.get("comment"),
            )
        except WorkbenchError as e:
            raise http_error(e) from None
        except (KeyError, ValueError) as e:
            raise HTTPException(status_code=422, detail=f"malformed payload: {e}") from None

    @app.get("/api/progress")
    def api_progress(request: Request):
        check_auth(request)
        return store.progress()

    @app.get("/api/guidelines/{strategy}")
    def api_guidelines(strategy: str, request: Request):
        check_auth(request)
        try:
            s = Strategy(strategy.upper())
        except ValueError:
            raise HTTPException(status_code=404, detail=f"unknown strategy {strategy!r}") from None
        return JSONResponse({"strategy": s.value, "body": DEFAULT_GUIDELINES[s]})

    if static_dir and Path(static_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=str(static_dir), html=True), name="ui")

    return app
