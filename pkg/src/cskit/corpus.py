"""Data model and line-oriented persistence for the counterspeech corpus.

One entity per line, JSON-encoded, tagged with a "kind" field and schema
version "v": 1. Character offsets in ground spans are Unicode code-point
offsets into the canonical document texts produced by fc_document_text /
ngo_document_text. A loaded corpus is immutable; mutation builds a new one.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator


class TargetGroup(Enum):
    MUSLIMS = "Muslims"
    LGBTQIA = "LGBTQIA+"
    MIGRANTS = "migrants"
    WOMEN = "women"
    DISABILITIES = "disabilities"
    JEWS = "Jews"


class Strategy(Enum):
    FC = "FC"
    NGO = "NGO"
    MIX = "MIX"


class AnnotatorRole(Enum):
    FC = "FC"
    NGO = "NGO"


ELIGIBLE_STRATEGIES = {
    AnnotatorRole.FC: frozenset({Strategy.FC, Strategy.MIX}),
    AnnotatorRole.NGO: frozenset({Strategy.NGO, Strategy.MIX}),
}


class DocKind(Enum):
    FC = "fc"
    NGO = "ngo"


class ResponseKind(Enum):
    PREFERENCE = "preference"
    RATING = "rating"


PREFERENCE_DIMENSIONS = ("Guidelines", "Exhaustiveness", "Naturalness")
RATING_DIMENSIONS = ("FACT", "STER", "EMP", "DISC")
PREFERENCE_VALUES = ("GEN", "ED")
RATING_VALUES = ("NoAttempt", "VeryPoor", "Poor", "Good", "VeryGood")


@dataclass(frozen=True)
class Claim:
    id: str
    text: str
    target_group: TargetGroup
    source_article_id: str


@dataclass(frozen=True)
class SelectionFlags:
    group_focused: bool = False
    counters_false_claim: bool = False
    contextualizes_true_claim: bool = False


@dataclass(frozen=True)
class FactCheckArticle:
    id: str
    url: str
    publisher: str
    is_signatory: bool
    claim_reviewed: str
    verdict_text: str
    body: str
    matched_keywords: tuple[str, ...] = ()
    selection: SelectionFlags = field(default_factory=SelectionFlags)


@dataclass(frozen=True)
class NGOReport:
    id: str
    source_url: str
    target_group: TargetGroup
    pairs: tuple[tuple[str, str], ...]  # (myth, anti_stereotype)


@dataclass(frozen=True)
class KnowledgeBundle:
    claim_id: str
    fc_article_id: str
    ngo_pairs: tuple[tuple[str, str, float], ...]  # (myth, anti_stereotype, similarity)


@dataclass(frozen=True)
class GroundSpan:
    doc_id: str
    doc_kind: DocKind
    start: int
    end: int  # half-open


@dataclass(frozen=True)
class CSRecord:
    id: str
    claim_id: str
    strategy: Strategy
    generated_text: str
    edited_text: str | None = None
    annotator_role: AnnotatorRole | None = None
    ground_spans: tuple[GroundSpan, ...] = ()
    comments: str | None = None
    edited_at: datetime | None = None


@dataclass(frozen=True)
class SurveyResponse:
    respondent_id: str
    item_id: str
    kind: ResponseKind
    dimension: str
    value: str


@dataclass(frozen=True)
class Violation:
    kind: str
    record_id: str
    field: str
    rule: str

    def __str__(self) -> str:
        return f"{self.kind} {self.record_id}: {self.field}: {self.rule}"


class CorpusError(Exception):
    pass


class MalformedRecordError(CorpusError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class CorpusValidationError(CorpusError):
    def __init__(self, violations: list[Violation]):
        super().__init__(
            "corpus failed validation:\n" + "\n".join(str(v) for v in violations)
        )
        self.violations = violations


def fc_document_text(article: FactCheckArticle) -> str:
    """Canonical reading text of a fact-checking article (span offsets target this)."""
    return (
        f"Claim: {article.claim_reviewed}\n\n"
        f"Fact-checking: {article.verdict_text}\n\n"
        f"{article.body}"
    )


def ngo_document_text(bundle: KnowledgeBundle) -> str:
    """Canonical reading text of a claim's matched myth/anti-stereotype pairs."""
    return "\n\n".join(
        f"Myth: {myth}\nAnti-stereotype: {anti}" for myth, anti, _ in bundle.ngo_pairs
    )


# ---------------------------------------------------------------------------
# record-level validation


def validate_record(record) -> list[Violation]:
    """Check the type-level invariants of a single record; violations are data."""
    v: list[Violation] = []
    if isinstance(record, Claim):
        if not record.text.strip():
            v.append(Violation("claim", record.id, "text", "must be non-empty"))
    elif isinstance(record, FactCheckArticle):
        if not record.is_signatory:
            v.append(Violation("fc_article", record.id, "is_signatory", "retained articles must be signatories"))
        s = record.selection
        if not (s.group_focused and (s.counters_false_claim or s.contextualizes_true_claim)):
            v.append(
                Violation(
                    "fc_article",
                    record.id,
                    "selection",
                    "needs group_focused and (counters_false_claim or contextualizes_true_claim)",
                )
            )
        if len(set(record.matched_keywords)) != len(record.matched_keywords):
            v.append(Violation("fc_article", record.id, "matched_keywords", "must be unique"))
    elif isinstance(record, NGOReport):
        if not record.pairs:
            v.append(Violation("ngo_report", record.id, "pairs", "must be non-empty"))
        for i, (myth, anti) in enumerate(record.pairs):
            if not myth.strip():
                v.append(Violation("ngo_report", record.id, f"pairs[{i}].myth", "must be non-empty"))
            if not anti.strip():
                v.append(Violation("ngo_report", record.id, f"pairs[{i}].anti_stereotype", "must be non-empty"))
    elif isinstance(record, KnowledgeBundle):
        for i, (_, _, sim) in enumerate(record.ngo_pairs):
            if not -1.0 <= sim <= 1.0:
                v.append(
                    Violation("bundle", record.claim_id, f"ngo_pairs[{i}].similarity", "must lie in [-1, 1]")
                )
    elif isinstance(record, GroundSpan):
        if not 0 <= record.start < record.end:
            v.append(Violation("ground_span", record.doc_id, "start", "requires 0 <= start < end"))
    elif isinstance(record, CSRecord):
        if (record.edited_text is None) != (record.annotator_role is None):
            v.append(
                Violation("cs_record", record.id, "edited_text", "present iff annotator_role present")
            )
        if record.annotator_role is not None:
            if record.strategy not in ELIGIBLE_STRATEGIES[record.annotator_role]:
                v.append(
                    Violation(
                        "cs_record",
                        record.id,
                        "annotator_role",
                        f"role/strategy mismatch: {record.annotator_role.value} cannot annotate {record.strategy.value}",
                    )
                )
        for i, span in enumerate(record.ground_spans):
            if not 0 <= span.start < span.end:
                v.append(
                    Violation("cs_record", record.id, f"ground_spans[{i}]", "requires 0 <= start < end")
                )
    elif isinstance(record, SurveyResponse):
        if record.kind is ResponseKind.PREFERENCE:
            if record.dimension not in PREFERENCE_DIMENSIONS:
                v.append(Violation("survey_response", record.item_id, "dimension", "not a preference dimension"))
            if record.value not in PREFERENCE_VALUES:
                v.append(Violation("survey_response", record.item_id, "value", "not a preference value"))
        else:
            if record.dimension not in RATING_DIMENSIONS:
                v.append(Violation("survey_response", record.item_id, "dimension", "not a rating dimension"))
            if record.value not in RATING_VALUES:
                v.append(Violation("survey_response", record.item_id, "value", "not a rating value"))
    else:
        raise TypeError(f"not a corpus record: {type(record)!r}")
    return v


# ---------------------------------------------------------------------------
# aggregate


@dataclass(frozen=True)
class Corpus:
    claims: dict[str, Claim] = field(default_factory=dict)
    articles: dict[str, FactCheckArticle] = field(default_factory=dict)
    reports: dict[str, NGOReport] = field(default_factory=dict)
    bundles: dict[str, KnowledgeBundle] = field(default_factory=dict)  # keyed by claim_id
    records: dict[str, CSRecord] = field(default_factory=dict)
    responses: tuple[SurveyResponse, ...] = ()

    def document_text(self, doc_kind: DocKind, doc_id: str) -> str | None:
        if doc_kind is DocKind.FC:
            article = self.articles.get(doc_id)
            return fc_document_text(article) if article else None
        bundle = self.bundles.get(doc_id)
        return ngo_document_text(bundle) if bundle else None

    def with_record(self, record: CSRecord) -> "Corpus":
        records = dict(self.records)
        records[record.id] = record
        return replace(self, records=records)

    def with_records(self, new_records: Iterable[CSRecord]) -> "Corpus":
        records = dict(self.records)
        for rec in new_records:
            records[rec.id] = rec
        return replace(self, records=records)

    def with_bundles(self, bundles: Iterable[KnowledgeBundle]) -> "Corpus":
        merged = dict(self.bundles)
        for b in bundles:
            merged[b.claim_id] = b
        return replace(self, bundles=merged)

    def with_responses(self, responses: Iterable[SurveyResponse]) -> "Corpus":
        return replace(self, responses=self.responses + tuple(responses))


def validate_corpus(corpus: Corpus) -> list[Violation]:
    """Record invariants plus cross-reference checks over the whole aggregate."""
    v: list[Violation] = []
    for claim in corpus.claims.values():
        v.extend(validate_record(claim))
        if claim.source_article_id not in corpus.articles:
            v.append(
                Violation("claim", claim.id, "source_article_id", f"dangling reference {claim.source_article_id!r}")
            )
    for article in corpus.articles.values():
        v.extend(validate_record(article))
    for report in corpus.reports.values():
        v.extend(validate_record(report))
    for bundle in corpus.bundles.values():
        v.extend(validate_record(bundle))
        if bundle.claim_id not in corpus.claims:
            v.append(Violation("bundle", bundle.claim_id, "claim_id", f"dangling reference {bundle.claim_id!r}"))
        if bundle.fc_article_id not in corpus.articles:
            v.append(
                Violation("bundle", bundle.claim_id, "fc_article_id", f"dangling reference {bundle.fc_article_id!r}")
            )

    seen_pairs: dict[tuple[str, Strategy], str] = {}
    for rec in corpus.records.values():
        v.extend(validate_record(rec))
        if rec.claim_id not in corpus.claims:
            v.append(Violation("cs_record", rec.id, "claim_id", f"dangling reference {rec.claim_id!r}"))
        if rec.annotator_role is not None:
            key = (rec.claim_id, rec.strategy)
            if key in seen_pairs:
                v.append(
                    Violation(
                        "cs_record",
                        rec.id,
                        "claim_id",
                        f"(claim, strategy) already annotated by record {seen_pairs[key]!r}",
                    )
                )
            else:
                seen_pairs[key] = rec.id
        bundle = corpus.bundles.get(rec.claim_id)
        for i, span in enumerate(rec.ground_spans):
            if span.doc_kind is DocKind.FC:
                if bundle is not None and span.doc_id != bundle.fc_article_id:
                    v.append(
                        Violation("cs_record", rec.id, f"ground_spans[{i}].doc_id", "fc span outside the claim's bundle")
                    )
                text = corpus.document_text(DocKind.FC, span.doc_id)
            else:
                if span.doc_id != rec.claim_id:
                    v.append(
                        Violation(
                            "cs_record", rec.id, f"ground_spans[{i}].doc_id", "ngo span must reference the claim's bundle"
                        )
                    )
                text = corpus.document_text(DocKind.NGO, span.doc_id)
            if text is None:
                v.append(
                    Violation("cs_record", rec.id, f"ground_spans[{i}].doc_id", f"dangling reference {span.doc_id!r}")
                )
            elif span.end > len(text):
                v.append(
                    Violation(
                        "cs_record",
                        rec.id,
                        f"ground_spans[{i}].end",
                        f"offset {span.end} beyond document length {len(text)}",
                    )
                )
    for resp in corpus.responses:
        v.extend(validate_record(resp))
        if resp.item_id not in corpus.records:
            v.append(Violation("survey_response", resp.item_id, "item_id", f"dangling reference {resp.item_id!r}"))
    return v


# ---------------------------------------------------------------------------
# serialization

SCHEMA_VERSION = 1


def _ts_to_str(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).isoformat().replace("+00:00", "Z")


def _ts_from_str(s: str) -> datetime:
    return datetime.fromisoformat(s.replace("Z", "+00:00")).astimezone(timezone.utc)


def _claim_to_json(c: Claim) -> dict:
    return {
        "id": c.id,
        "text": c.text,
        "target_group": c.target_group.value,
        "source_article_id": c.source_article_id,
    }


def _article_to_json(a: FactCheckArticle) -> dict:
    return {
        "id": a.id,
        "url": a.url,
        "publisher": a.publisher,
        "is_signatory": a.is_signatory,
        "claim_reviewed": a.claim_reviewed,
        "verdict_text": a.verdict_text,
        "body": a.body,
        "matched_keywords": list(a.matched_keywords),
        "selection": {
            "group_focused": a.selection.group_focused,
            "counters_false_claim": a.selection.counters_false_claim,
            "contextualizes_true_claim": a.selection.contextualizes_true_claim,
        },
    }


def _report_to_json(r: NGOReport) -> dict:
    return {
        "id": r.id,
        "source_url": r.source_url,
        "target_group": r.target_group.value,
        "pairs": [{"myth": m, "anti_stereotype": a} for m, a in r.pairs],
    }


def _bundle_to_json(b: KnowledgeBundle) -> dict:
    return {
        "claim_id": b.claim_id,
        "fc_article_id": b.fc_article_id,
        "ngo_pairs": [
            {"myth": m, "anti_stereotype": a, "similarity": s} for m, a, s in b.ngo_pairs
        ],
    }


def _record_to_json(rec: CSRecord) -> dict:
    return {
        "id": rec.id,
        "claim_id": rec.claim_id,
        "strategy": rec.strategy.value,
        "generated_text": rec.generated_text,
        "edited_text": rec.edited_text,
        "annotator_role": rec.annotator_role.value if rec.annotator_role else None,
        "ground_spans": [
            {"doc_id": s.doc_id, "doc_kind": s.doc_kind.value, "start": s.start, "end": s.end}
            for s in rec.ground_spans
        ],
        "comments": rec.comments,
        "edited_at": _ts_to_str(rec.edited_at) if rec.edited_at else None,
    }


def _response_to_json(r: SurveyResponse) -> dict:
    # the record's own "kind" doubles as the line tag (values never collide
    # with the other record kinds)
    return {
        "respondent_id": r.respondent_id,
        "item_id": r.item_id,
        "kind": r.kind.value,
        "dimension": r.dimension,
        "value": r.value,
    }


def _parse_enum(enum_cls, raw, line_no: int, field_name: str):
    try:
        return enum_cls(raw)
    except ValueError:
        allowed = ", ".join(repr(m.value) for m in enum_cls)
        raise MalformedRecordError(line_no, f"{field_name}: {raw!r} is not one of {allowed}") from None


def _claim_from_json(d: dict, line_no: int) -> Claim:
    return Claim(
        id=str(d["id"]),
        text=d["text"],
        target_group=_parse_enum(TargetGroup, d["target_group"], line_no, "target_group"),
        source_article_id=str(d["source_article_id"]),
    )


def _article_from_json(d: dict, line_no: int) -> FactCheckArticle:
    sel = d.get("selection") or {}
    return FactCheckArticle(
        id=str(d["id"]),
        url=d["url"],
        publisher=d["publisher"],
        is_signatory=bool(d["is_signatory"]),
        claim_reviewed=d["claim_reviewed"],
        verdict_text=d["verdict_text"],
        body=d["body"],
        matched_keywords=tuple(d.get("matched_keywords") or ()),
        selection=SelectionFlags(
            group_focused=bool(sel.get("group_focused", False)),
            counters_false_claim=bool(sel.get("counters_false_claim", False)),
            contextualizes_true_claim=bool(sel.get("contextualizes_true_claim", False)),
        ),
    )


def _report_from_json(d: dict, line_no: int) -> NGOReport:
    pairs = []
    for i, p in enumerate(d["pairs"]):
        if "myth" not in p or "anti_stereotype" not in p:
            raise MalformedRecordError(line_no, f"pairs[{i}]: needs both myth and anti_stereotype")
        pairs.append((p["myth"], p["anti_stereotype"]))
    return NGOReport(
        id=str(d["id"]),
        source_url=d["source_url"],
        target_group=_parse_enum(TargetGroup, d["target_group"], line_no, "target_group"),
        pairs=tuple(pairs),
    )


def _bundle_from_json(d: dict, line_no: int) -> KnowledgeBundle:
    return KnowledgeBundle(
        claim_id=str(d["claim_id"]),
        fc_article_id=str(d["fc_article_id"]),
        ngo_pairs=tuple(
            (p["myth"], p["anti_stereotype"], float(p["similarity"])) for p in d["ngo_pairs"]
        ),
    )


def _record_from_json(d: dict, line_no: int) -> CSRecord:
    role = d.get("annotator_role")
    return CSRecord(
        id=str(d["id"]),
        claim_id=str(d["claim_id"]),
        strategy=_parse_enum(Strategy, d["strategy"], line_no, "strategy"),
        generated_text=d["generated_text"],
        edited_text=d.get("edited_text"),
        annotator_role=_parse_enum(AnnotatorRole, role, line_no, "annotator_role") if role else None,
        ground_spans=tuple(
            GroundSpan(
                doc_id=str(s["doc_id"]),
                doc_kind=_parse_enum(DocKind, s["doc_kind"], line_no, "doc_kind"),
                start=int(s["start"]),
                end=int(s["end"]),
            )
            for s in d.get("ground_spans") or ()
        ),
        comments=d.get("comments"),
        edited_at=_ts_from_str(d["edited_at"]) if d.get("edited_at") else None,
    )


def _response_from_json(d: dict, line_no: int) -> SurveyResponse:
    return SurveyResponse(
        respondent_id=str(d["respondent_id"]),
        item_id=str(d["item_id"]),
        kind=_parse_enum(ResponseKind, d["kind"], line_no, "kind"),
        dimension=d["dimension"],
        value=d["value"],
    )


_WRITERS = {
    "claim": _claim_to_json,
    "fc_article": _article_to_json,
    "ngo_report": _report_to_json,
    "bundle": _bundle_to_json,
    "cs_record": _record_to_json,
    "preference": _response_to_json,
    "rating": _response_to_json,
}

_READERS = {
    "claim": _claim_from_json,
    "fc_article": _article_from_json,
    "ngo_report": _report_from_json,
    "bundle": _bundle_from_json,
    "cs_record": _record_from_json,
    "preference": _response_from_json,
    "rating": _response_from_json,
}


def _iter_tagged(corpus: Corpus) -> Iterator[tuple[str, object]]:
    for claim in sorted(corpus.claims.values(), key=lambda c: c.id):
        yield "claim", claim
    for article in sorted(corpus.articles.values(), key=lambda a: a.id):
        yield "fc_article", article
    for report in sorted(corpus.reports.values(), key=lambda r: r.id):
        yield "ngo_report", report
    for bundle in sorted(corpus.bundles.values(), key=lambda b: b.claim_id):
        yield "bundle", bundle
    for rec in sorted(corpus.records.values(), key=lambda r: r.id):
        yield "cs_record", rec
    for resp in sorted(
        corpus.responses, key=lambda r: (r.respondent_id, r.item_id, r.kind.value, r.dimension)
    ):
        yield resp.kind.value, resp


def save_corpus(corpus: Corpus, path: str | Path, validate: bool = True) -> None:
    """Write the corpus; output bytes are deterministic for a given corpus."""
    if validate:
        violations = validate_corpus(corpus)
        if violations:
            raise CorpusValidationError(violations)
    lines = []
    for kind, record in _iter_tagged(corpus):
        payload = {"v": SCHEMA_VERSION, "kind": kind}
        payload.update(_WRITERS[kind](record))
        lines.append(json.dumps(payload, ensure_ascii=False, sort_keys=True, separators=(",", ":")))
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def load_corpus(
    path: str | Path,
    validate: bool = True,
    field_map: dict[str, dict[str, str]] | None = None,
) -> Corpus:
    """Read and index a corpus file.

    ``field_map`` maps externally-published field names onto ours, per kind
    ({kind: {external: internal}}), for datasets released under a different
    schema.
    """
    claims: dict[str, Claim] = {}
    articles: dict[str, FactCheckArticle] = {}
    reports: dict[str, NGOReport] = {}
    bundles: dict[str, KnowledgeBundle] = {}
    records: dict[str, CSRecord] = {}
    responses: list[SurveyResponse] = []

    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                d = json.loads(line)
            except json.JSONDecodeError as e:
                raise MalformedRecordError(line_no, f"invalid JSON: {e}") from None
            if not isinstance(d, dict) or "kind" not in d:
                raise MalformedRecordError(line_no, "record must be an object with a 'kind' field")
            kind = d["kind"]
            if kind not in _READERS:
                raise MalformedRecordError(line_no, f"unknown kind {kind!r}")
            if field_map and kind in field_map:
                d = {field_map[kind].get(k, k): val for k, val in d.items()}
            try:
                record = _READERS[kind](d, line_no)
            except MalformedRecordError:
                raise
            except (KeyError, TypeError, ValueError) as e:
                raise MalformedRecordError(line_no, f"{kind}: {e}") from None
            if kind == "claim":
                claims[record.id] = record
            elif kind == "fc_article":
                articles[record.id] = record
            elif kind == "ngo_report":
                reports[record.id] = record
            elif kind == "bundle":
                bundles[record.claim_id] = record
            elif kind == "cs_record":
                records[record.id] = record
            else:
                responses.append(record)

    corpus = Corpus(
        claims=claims,
        articles=articles,
        reports=reports,
        bundles=bundles,
        records=records,
        responses=tuple(responses),
    )
    if validate:
        violations = validate_corpus(corpus)
        if violations:
            raise CorpusValidationError(violations)
    return corpus


def utc_now() -> datetime:
    return datetime.now(timezone.utc).replace(microsecond=0)
