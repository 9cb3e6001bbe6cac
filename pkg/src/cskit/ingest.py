"""Fact-check retrieval and NGO report loading.

All network traffic goes through a recordable transport so the pipeline can
run entirely from fixtures; live mode talks to a fact-check search API with
bounded concurrency and backoff. The per-group query keywords below are the
default configuration and can be replaced from a file. Signatory and domain
checks match on the normalized publisher domain (lowercased, leading "www."
stripped).
"""

from __future__ import annotations

import hashlib
import json
import re
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from html.parser import HTMLParser
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence
from urllib.parse import urlsplit

from cskit.corpus import FactCheckArticle, NGOReport, SelectionFlags, TargetGroup

MAX_PAGE_SIZE = 1000
MAX_CONCURRENT_FETCHES = 4
BACKOFF_BASE_SECONDS = 0.5
MAX_RETRIES = 4

DEFAULT_KEYWORDS: dict[TargetGroup, tuple[str, ...]] = {
    TargetGroup.MUSLIMS: (
        "muslim", "islam", "terrorist", "jihadi", "jihad", "ragheadterror", "arab",
        "koran", "quran", "sharia", "towel head", "rag head",
    ),
    TargetGroup.LGBTQIA: (
        "gay", "homosexual", "homosexuality", "lgbt", "lgbt+", "lgbti", "lgbtq+",
        "lgbtq", "faggot", "gender", "lesbian", "trans", "transgender", "transsexual",
        "queer", "sexual", "sex", "heterosexual", "dyke", "gay pride",
    ),
    TargetGroup.MIGRANTS: (
        "migrant", "immigrant", "refugee", "immigration", "foreigner", "migration",
        "foreign", "rapefugees", "invasion", "invade", "refugeesnotwelcome",
    ),
    TargetGroup.WOMEN: (
        "woman", "feminism", "feminist", "gender", "female", "harassment", "feminazi",
        "shithole", "cunt", "blameonenotall", "notallmen", "victimcard",
        "sexual assault", "victim card",
    ),
    TargetGroup.DISABILITIES: (
        "disabled", "disability", "autistic", "blind", "deaf", "retard", "downies",
        "downy", "paralympics", "wheelchair",
    ),
    TargetGroup.JEWS: (
        "jew", "jewish", "holocaust", "judaism", "nazi", "nazism", "genocide",
    ),
}

DEFAULT_NGO_DOMAIN_ALLOWLIST = frozenset(
    {
        "aasas.ca", "communitiesinc.org.uk", "cpdonline.co.uk", "developmenteducation.ie",
        "edmo.eu", "efcl.org", "healthjournalism.org", "iine.org", "jrseurope.org",
        "medium.com", "rapecrisis.org.uk", "safeandequal.org.au", "simpl4all.eu",
        "worldrelief.org", "adl.org", "bpas.org", "coolmindshk.com", "enar-eu.org",
        "etf.europa.eu", "infomigrants.net", "learningforjustice.org", "nata.org",
        "osce.org", "pgaction.org", "psychologytoday.com", "rescue.org",
        "strongfamilyalliance.org", "thearcbc.org", "unh.edu", "vera.org", "weforum.org",
    }
)


@dataclass(frozen=True)
class KeywordSet:
    target_group: TargetGroup
    keywords: tuple[str, ...]

    def __post_init__(self):
        if not self.keywords:
            raise ValueError("keyword set must be non-empty")
        if len(set(self.keywords)) != len(self.keywords):
            raise ValueError(f"duplicate keywords for {self.target_group.value}")
        for kw in self.keywords:
            if kw != kw.lower():
                raise ValueError(f"keyword must be lowercase: {kw!r}")


def default_keyword_sets() -> list[KeywordSet]:
    return [KeywordSet(group, kws) for group, kws in DEFAULT_KEYWORDS.items()]


def load_keyword_sets(path: str | Path) -> list[KeywordSet]:
    """JSON file mapping target group name to a keyword list."""
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    return [KeywordSet(TargetGroup(group), tuple(kws)) for group, kws in raw.items()]


def normalize_domain(url_or_domain: str) -> str:
    host = urlsplit(url_or_domain).netloc or url_or_domain
    host = host.split("@")[-1].split(":")[0].lower()
    return host[4:] if host.startswith("www.") else host


# ---------------------------------------------------------------------------
# transport


class TransportError(RuntimeError):
    """Network-level failure; retryable."""


class ProviderPayloadError(RuntimeError):
    """The provider answered with an error payload; not retryable."""

    def __init__(self, status: int, body: str):
        super().__init__(f"provider error {status}: {body}")
        self.status = status
        self.body = body


@dataclass(frozen=True)
class Response:
    status: int
    body: str


Fetcher = Callable[[str, Mapping[str, object]], Response]


def _request_key(url: str, params: Mapping[str, object]) -> str:
    canonical = json.dumps({"url": url, "params": dict(sorted(params.items()))}, sort_keys=True)
    return hashlib.sha256(canonical.encode()).hexdigest()


class FixtureTransport:
    """Replays request->response pairs stored one per JSON line. With
    ``record_with`` set, misses are fetched live and appended."""

    def __init__(self, fixtures_dir: str | Path, record_with: Fetcher | None = None):
        self.path = Path(fixtures_dir) / "http_fixtures.jsonl"
        self.record_with = record_with
        self._store: dict[str, Response] = {}
        self._lock = threading.Lock()  # recording happens from the fetch pool
        if self.path.exists():
            with open(self.path, encoding="utf-8") as fh:
                for line in fh:
                    if line.strip():
                        d = json.loads(line)
                        self._store[d["key"]] = Response(d["status"], d["body"])

    def __call__(self, url: str, params: Mapping[str, object]) -> Response:
        key = _request_key(url, params)
        with self._lock:
            if key in self._store:
                return self._store[key]
        if self.record_with is None:
            raise TransportError(f"no fixture for {url} {dict(params)}")
        resp = self.record_with(url, params)
        with self._lock:
            if key in self._store:
                return self._store[key]
            self._store[key] = resp
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(
                    json.dumps(
                        {"key": key, "url": url, "params": dict(params), "status": resp.status, "body": resp.body},
                        ensure_ascii=False,
                    )
                    + "\n"
                )
        return resp


def live_fetcher(timeout: float = 30.0) -> Fetcher:
    import httpx

    client = httpx.Client(timeout=timeout, follow_redirects=True)

    def fetch(url: str, params: Mapping[str, object]) -> Response:
        delay = BACKOFF_BASE_SECONDS
        for attempt in range(MAX_RETRIES + 1):
            try:
                r = client.get(url, params=dict(params))
            except Exception as e:
                if attempt == MAX_RETRIES:
                    raise TransportError(str(e)) from None
                time.sleep(delay)
                delay *= 2
                continue
            if r.status_code == 429 or r.status_code >= 500:
                if attempt == MAX_RETRIES:
                    raise TransportError(f"gave up after {attempt + 1} tries: {r.status_code}")
                time.sleep(delay)
                delay *= 2
                continue
            return Response(r.status_code, r.text)
        raise TransportError("unreachable")

    return fetch


# ---------------------------------------------------------------------------
# retrieval


@dataclass(frozen=True)
class RetrievalEntry:
    url: str
    publisher: str
    claim_reviewed: str
    review_date: str = ""


@dataclass(frozen=True)
class RetrievalPage:
    query: str
    results: tuple[RetrievalEntry, ...]


def query_factcheck_index(
    keyword: str,
    fetcher: Fetcher,
    limit: int = MAX_PAGE_SIZE,
    api_url: str = "https://factchecktools.googleapis.com/v1alpha1/claims:search",
    language_code: str = "en",
) -> RetrievalPage:
    """One keyword query against the claim search API; at most ``limit`` rows."""
    if not keyword:
        raise ValueError("keyword must be non-empty")
    if not 0 <= limit <= MAX_PAGE_SIZE:
        raise ValueError(f"limit must lie in [0, {MAX_PAGE_SIZE}]")
    if limit == 0:
        return RetrievalPage(query=keyword, results=())
    resp = fetcher(api_url, {"query": keyword, "languageCode": language_code, "pageSize": limit})
    if resp.status != 200:
        raise ProviderPayloadError(resp.status, resp.body)
    payload = json.loads(resp.body)
    entries = []
    for claim in payload.get("claims", []):
        for review in claim.get("claimReview", []):
            url = review.get("url", "")
            if not url.startswith(("http://", "https://")):
                continue
            entries.append(
                RetrievalEntry(
                    url=url,
                    publisher=review.get("publisher", {}).get("site", normalize_domain(url)),
                    claim_reviewed=claim.get("text", ""),
                    review_date=review.get("reviewDate", ""),
                )
            )
            if len(entries) >= limit:
                break
        if len(entries) >= limit:
            break
    return RetrievalPage(query=keyword, results=tuple(entries))


def query_many(
    keywords: Sequence[str],
    fetcher: Fetcher,
    limit: int = MAX_PAGE_SIZE,
    **kwargs,
) -> list[RetrievalPage]:
    """Bounded-parallel retrieval; output follows keyword order regardless of
    completion order."""
    with ThreadPoolExecutor(max_workers=MAX_CONCURRENT_FETCHES) as pool:
        futures = [pool.submit(query_factcheck_index, kw, fetcher, limit, **kwargs) for kw in keywords]
        return [f.result() for f in futures]


class _MainTextExtractor(HTMLParser):
    _SKIP = {"script", "style", "nav", "header", "footer", "aside", "form", "noscript"}

    def __init__(self):
        super().__init__()
        self._skip_depth = 0
        self._chunks: list[str] = []

    def handle_starttag(self, tag, attrs):
        if tag in self._SKIP:
            self._skip_depth += 1

    def handle_endtag(self, tag):
        if tag in self._SKIP and self._skip_depth:
            self._skip_depth -= 1
        if tag in ("p", "div", "br", "li", "h1", "h2", "h3"):
            self._chunks.append("\n")

    def handle_data(self, data):
        if not self._skip_depth:
            self._chunks.append(data)

    def text(self) -> str:
        raw = "".join(self._chunks)
        lines = [re.sub(r"[ \t]+", " ", ln).strip() for ln in raw.splitlines()]
        return "\n".join(ln for ln in lines if ln)


class ExtractionError(RuntimeError):
    pass


def fetch_article(
    entry: RetrievalEntry,
    fetcher: Fetcher,
    article_id: str | None = None,
    matched_keywords: Sequence[str] = (),
) -> FactCheckArticle:
    """Download and extract an article's main text; carries the retrieval
    metadata through. Selection flags start unset (they are reviewer input)."""
    resp = fetcher(entry.url, {})
    if resp.status != 200:
        raise TransportError(f"HTTP {resp.status} fetching {entry.url}")
    parser = _MainTextExtractor()
    parser.feed(resp.body)
    body = parser.text()
    if not body.strip():
        raise ExtractionError(f"no main text extracted from {entry.url}")
    verdict, _, rest = body.partition("\n")
    return FactCheckArticle(
        id=article_id or "fc-" + hashlib.sha256(entry.url.encode()).hexdigest()[:12],
        url=entry.url,
        publisher=entry.publisher,
        is_signatory=False,
        claim_reviewed=entry.claim_reviewed,
        verdict_text=verdict,
        body=rest or body,
        matched_keywords=tuple(dict.fromkeys(matched_keywords)),
        selection=SelectionFlags(),
    )


def load_signatories(path: str | Path) -> frozenset[str]:
    """One publisher domain per line; comments with '#'."""
    domains = set()
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            domains.add(normalize_domain(line))
    return frozenset(domains)


def filter_signatories(
    articles: Iterable[FactCheckArticle], signatory_list: frozenset[str] | set[str]
) -> list[FactCheckArticle]:
    """Keep articles whose normalized publisher domain is a signatory; order
    preserved, is_signatory set on the survivors."""
    normalized = {normalize_domain(d) for d in signatory_list}
    out = []
    for a in articles:
        if normalize_domain(a.publisher) in normalized:
            out.append(a if a.is_signatory else replace(a, is_signatory=True))
    return out


# ---------------------------------------------------------------------------
# NGO reports


@dataclass(frozen=True)
class ReportRejection:
    path: str
    reason: str


@dataclass(frozen=True)
class NGOLoadResult:
    reports: list[NGOReport] = field(default_factory=list)
    rejections: list[ReportRejection] = field(default_factory=list)


def load_ngo_reports(
    paths: Sequence[str | Path],
    domain_allowlist: frozenset[str] | set[str] = DEFAULT_NGO_DOMAIN_ALLOWLIST,
) -> NGOLoadResult:
    """Load myth/anti-stereotype report files (JSON). Reports from domains
    outside the allowlist are rejected with the offending domain named."""
    allow = {normalize_domain(d) for d in domain_allowlist}
    result = NGOLoadResult()
    for path in paths:
        path = Path(path)
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            result.rejections.append(ReportRejection(str(path), f"unreadable: {e}"))
            continue
        source_url = raw.get("source_url", "")
        domain = normalize_domain(source_url)
        if domain not in allow:
            result.rejections.append(
                ReportRejection(str(path), f"domain {domain or '(none)'!r} not in allowlist")
            )
            continue
        pairs = []
        bad = None
        for i, p in enumerate(raw.get("pairs", [])):
            myth = (p.get("myth") or "").strip()
            anti = (p.get("anti_stereotype") or "").strip()
            if not myth or not anti:
                bad = f"pairs[{i}] missing {'myth' if not myth else 'anti_stereotype'}"
                break
            pairs.append((myth, anti))
        if bad:
            result.rejections.append(ReportRejection(str(path), bad))
            continue
        if not pairs:
            result.rejections.append(ReportRejection(str(path), "no pairs"))
            continue
        try:
            group = TargetGroup(raw["target_group"])
        except (KeyError, ValueError):
            result.rejections.append(ReportRejection(str(path), "missing or unknown target_group"))
            continue
        result.reports.append(
            NGOReport(
                id=raw.get("id") or path.stem,
                source_url=source_url,
                target_group=group,
                pairs=tuple(pairs),
            )
        )
    return result
