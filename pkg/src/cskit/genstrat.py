"""Strategy prompt assembly and counterspeech generation.

Each strategy pairs a guideline text with the knowledge documents it needs:
the fact-checking article, the matched myth/anti-stereotype pairs, or both.
Providers speak a chat-completion wire shape; a replay provider makes runs
reproducible from recorded fixtures and a stub provider keeps tests offline.
Every provider call is appended to an audit log.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Protocol, Sequence

from cskit.corpus import (
    Claim,
    Corpus,
    CSRecord,
    FactCheckArticle,
    KnowledgeBundle,
    Strategy,
    fc_document_text,
    ngo_document_text,
    utc_now,
)

DEFAULT_MODEL_ID = "gpt-4o-mini-2024-07-18"
DEFAULT_MAX_TOKENS = 100
DEFAULT_TEMPERATURE = 0.8

DEFAULT_GUIDELINES: dict[Strategy, str] = {
    Strategy.FC: (
        "Counteract misinformation with accurate and verifiable facts and statistics.\n"
        "Provide evidence for every factual statement made in the counter speech.\n"
        "Mention the sources on which the counter speech is based.\n"
        "Keep the counter speech impartial and avoid political partisanship.\n"
        "Formulate counter speech using a precise, factual, and non-emotive language."
    ),
    Strategy.NGO: (
        "Avoid abusive language.\n"
        "Challenge the claim, not the person who wrote it.\n"
        "Refrain from using divisive labels (e.g., racist, fascist).\n"
        "Express support to those who might be under attack.\n"
        "Counter hate with kindness, positivity, mutual respect, and politeness.\n"
        "Empathize with underlying fears or anxieties that caused the expression of hate.\n"
        "Challenge negative stereotypes using facts and providing context."
    ),
    Strategy.MIX: (
        "Avoid abusive language and divisive labels (e.g., racist, fascist).\n"
        "Challenge the claim, not the person who wrote it.\n"
        "Counter misinformation with accurate facts, evidence, impartiality, and reliable sources.\n"
        "Provide context for the misinformed hateful claim.\n"
        "Express support for those under attack and respond with kindness and respect.\n"
        "Empathize with underlying fears or anxieties that caused the expression of hate.\n"
        "Challenge negative stereotypes using facts and providing context."
    ),
}

PROMPT_TEMPLATES: dict[Strategy, str] = {
    Strategy.NGO: (
        "You are an NGO operator who provides counterstatements to negative stereotypes "
        "contained in hateful messages.\n"
        "Given the hateful claim provided in HATER_TURN, generate a two-sentence-long CS "
        "following the guidelines provided in NGO_GUIDELINES and using the innformation "
        "contained in the NGO_ARTICLE.\n"
        "Answer by referring exclusively to NGO_ARTICLE, don't cite the sources in brackets.\n"
        "\n"
        "HATER_TURN: <HATER_TURN>\n"
        "NGO_GUIDELINES: <NGO_GUIDELINES>\n"
        "NGO_ARTICLE: <NGO_ARTICLE>"
    ),
    Strategy.FC: (
        "You are a fact-checker who provides counterstatements to misinformation "
        "contained in hateful messages.\n"
        "Given the hateful claim provided in HATER_TURN, generate a two-sentence-long CS "
        "following the guidelines provided in FC_GUIDELINES and using the information "
        "contained in the FC_ARTICLE.\n"
        "Answer by referring exclusively to FC_ARTICLE, don't cite the sources in brackets.\n"
        "\n"
        "HATER_TURN: <HATER_TURN>\n"
        "FC_GUIDELINES: <FC_GUIDELINES>\n"
        "FC_ARTICLE: <FC_ARTICLE>"
    ),
    Strategy.MIX: (
        "You are a counterspeaker who provides counterstatements to hateful messages.\n"
        "Given the hateful claim provided in HATER_TURN, generate a two-sentence-long CS "
        "following the guidelines provided in MIX_GUIDELINES.\n"
        "You must necessarily use the facts contained in the FC_ARTICLE to contrast "
        "misinformation and the content from the NGO_ARTICLE to contrast stereotypes.\n"
        "Answer by referring exclusively and equally to FC_ARTICLE and NGO_ARTICLE, "
        "don't cite the sources in brackets.\n"
        "\n"
        "HATER_TURN: <HATER_TURN>\n"
        "MIX_GUIDELINES: <MIX_GUIDELINES>\n"
        "NGO_ARTICLE: <NGO_ARTICLE>\n"
        "FC_ARTICLE: <FC_ARTICLE>"
    ),
}

_PLACEHOLDERS = {
    Strategy.FC: ("<HATER_TURN>", "<FC_GUIDELINES>", "<FC_ARTICLE>"),
    Strategy.NGO: ("<HATER_TURN>", "<NGO_GUIDELINES>", "<NGO_ARTICLE>"),
    Strategy.MIX: ("<HATER_TURN>", "<MIX_GUIDELINES>", "<NGO_ARTICLE>", "<FC_ARTICLE>"),
}


@dataclass(frozen=True)
class GenerationConfig:
    max_tokens: int = DEFAULT_MAX_TOKENS
    temperature: float = DEFAULT_TEMPERATURE
    model_id: str = DEFAULT_MODEL_ID
    as_system_message: bool = False  # send the template as system instead of user
    max_concurrency: int = 4

    def __post_init__(self):
        if self.max_tokens <= 0:
            raise ValueError("max_tokens must be positive")
        if self.temperature < 0:
            raise ValueError("temperature must be non-negative")


@dataclass(frozen=True)
class PromptInstance:
    strategy: Strategy
    claim_text: str
    filled_template: str
    knowledge_refs: tuple[str, ...]


class MissingKnowledgeError(ValueError):
    pass


def build_prompt(
    strategy: Strategy,
    claim: Claim,
    bundle: KnowledgeBundle,
    articles: Mapping[str, FactCheckArticle],
    guidelines: Mapping[Strategy, str] = DEFAULT_GUIDELINES,
) -> PromptInstance:
    """Fill the strategy template; all placeholders must be resolved."""
    needs_fc = strategy in (Strategy.FC, Strategy.MIX)
    needs_ngo = strategy in (Strategy.NGO, Strategy.MIX)

    refs: list[str] = []
    fills = {"<HATER_TURN>": claim.text, f"<{strategy.value}_GUIDELINES>": guidelines[strategy]}
    if needs_fc:
        article = articles.get(bundle.fc_article_id)
        if article is None:
            raise MissingKnowledgeError(
                f"fact-checking knowledge required: article {bundle.fc_article_id!r} not found"
            )
        fills["<FC_ARTICLE>"] = fc_document_text(article)
        refs.append(article.id)
    if needs_ngo:
        if not bundle.ngo_pairs:
            raise MissingKnowledgeError("NGO knowledge required: bundle has no myth/anti-stereotype pairs")
        fills["<NGO_ARTICLE>"] = ngo_document_text(bundle)
        refs.append(bundle.claim_id)

    text = PROMPT_TEMPLATES[strategy]
    for placeholder in _PLACEHOLDERS[strategy]:
        text = text.replace(placeholder, fills[placeholder])
    leftover = [p for ps in _PLACEHOLDERS.values() for p in ps if p in text]
    if leftover:
        raise MissingKnowledgeError(f"unfilled placeholders: {leftover}")
    return PromptInstance(
        strategy=strategy,
        claim_text=claim.text,
        filled_template=text,
        knowledge_refs=tuple(refs),
    )


# ---------------------------------------------------------------------------
# providers


@dataclass(frozen=True)
class ChatRequest:
    model: str
    messages: tuple[dict, ...]
    max_tokens: int
    temperature: float

    def canonical(self) -> str:
        return json.dumps(
            {
                "model": self.model,
                "messages": list(self.messages),
                "max_tokens": self.max_tokens,
                "temperature": self.temperature,
            },
            sort_keys=True,
            ensure_ascii=False,
            separators=(",", ":"),
        )

    @property
    def key(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()


class LLMProviderError(RuntimeError):
    pass


class LLMProvider(Protocol):
    def complete(self, request: ChatRequest) -> str: ...


class StubLLM:
    """Deterministic canned provider for offline runs."""

    def complete(self, request: ChatRequest) -> str:
        return (
            f"Stub counterspeech {request.key[:8]}: the cited material contradicts "
            "this claim, and the targeted group deserves accuracy and respect."
        )


class ReplayLLM:
    """Replays responses recorded in a JSON-lines fixture keyed by request
    hash. With ``fallback`` set, unseen requests are forwarded and recorded."""

    def __init__(self, path: str | Path, fallback: LLMProvider | None = None):
        self.path = Path(path)
        self.fallback = fallback
        self._responses: dict[str, str] = {}
        if self.path.exists():
            with open(self.path, encoding="utf-8") as fh:
                for line in fh:
                    if line.strip():
                        d = json.loads(line)
                        self._responses[d["key"]] = d["response"]

    def complete(self, request: ChatRequest) -> str:
        key = request.key
        if key in self._responses:
            return self._responses[key]
        if self.fallback is None:
            raise LLMProviderError(f"no recorded response for request {key}")
        response = self.fallback.complete(request)
        self._responses[key] = response
        with open(self.path, "a", encoding="utf-8") as fh:
            fh.write(
                json.dumps(
                    {"key": key, "request": json.loads(request.canonical()), "response": response},
                    ensure_ascii=False,
                )
                + "\n"
            )
        return response


class HttpChatLLM:
    """Minimal chat-completions client; the API key is read from the named
    environment variable at call time."""

    def __init__(self, base_url: str, api_key_env: str = "LLM_API_KEY"):
        import httpx

        self.base_url = base_url.rstrip("/")
        self.api_key_env = api_key_env
        self._client = httpx.Client(timeout=120.0)

    def complete(self, request: ChatRequest) -> str:
        headers = {}
        key = os.environ.get(self.api_key_env)
        if key:
            headers["Authorization"] = f"Bearer {key}"
        try:
            resp = self._client.post(
                f"{self.base_url}/chat/completions",
                json=json.loads(request.canonical()),
                headers=headers,
            )
        except Exception as e:
            raise LLMProviderError(f"provider unreachable: {e}") from None
        if resp.status_code != 200:
            raise LLMProviderError(f"provider returned {resp.status_code}: {resp.text}")
        try:
            return resp.json()["choices"][0]["message"]["content"]
        except (KeyError, IndexError, ValueError) as e:
            raise LLMProviderError(f"malformed provider response: {e}") from None


def make_llm_provider(spec: str, api_key_env: str = "LLM_API_KEY") -> LLMProvider:
    if spec == "stub:":
        return StubLLM()
    if spec.startswith("replay:"):
        return ReplayLLM(spec[len("replay:") :])
    return HttpChatLLM(spec, api_key_env=api_key_env)


# ---------------------------------------------------------------------------
# generation


class _AuditLog:
    def __init__(self, path: str | Path | None):
        self.path = Path(path) if path else None
        self._lock = threading.Lock()

    def write(self, entry: dict) -> None:
        if self.path is None:
            return
        line = json.dumps(entry, ensure_ascii=False, sort_keys=True)
        with self._lock:
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(line + "\n")


def generate(
    prompt: PromptInstance,
    config: GenerationConfig,
    provider: LLMProvider,
    audit_path: str | Path | None = None,
) -> str:
    """One completion for a filled prompt; the exchange lands in the audit log."""
    role = "system" if config.as_system_message else "user"
    request = ChatRequest(
        model=config.model_id,
        messages=({"role": role, "content": prompt.filled_template},),
        max_tokens=config.max_tokens,
        temperature=config.temperature,
    )
    text = provider.complete(request)
    _AuditLog(audit_path).write(
        {
            "ts": utc_now().isoformat(),
            "strategy": prompt.strategy.value,
            "request": json.loads(request.canonical()),
            "response": text,
        }
    )
    if not text or not text.strip():
        raise LLMProviderError("provider returned an empty completion")
    return text


def record_id(claim_id: str, strategy: Strategy) -> str:
    return f"cs:{claim_id}:{strategy.value}"


@dataclass(frozen=True)
class CampaignResult:
    records: list[CSRecord] = field(default_factory=list)
    skipped: int = 0
    errors: list[tuple[str, str, str]] = field(default_factory=list)  # (claim_id, strategy, message)


def run_generation_campaign(
    corpus: Corpus,
    strategies: Sequence[Strategy],
    config: GenerationConfig,
    provider: LLMProvider,
    audit_path: str | Path | None = None,
) -> CampaignResult:
    """Generate one record per (claim, strategy) that has a bundle and no
    existing record. Per-item failures are collected; the campaign continues."""
    existing = {(r.claim_id, r.strategy) for r in corpus.records.values()}
    todo: list[tuple[Claim, KnowledgeBundle, Strategy]] = []
    skipped = 0
    errors: list[tuple[str, str, str]] = []
    for claim_id in sorted(corpus.bundles):
        claim = corpus.claims[claim_id]
        bundle = corpus.bundles[claim_id]
        for strategy in strategies:
            if (claim_id, strategy) in existing:
                skipped += 1
                continue
            todo.append((claim, bundle, strategy))

    audit = _AuditLog(audit_path)

    def one(item: tuple[Claim, KnowledgeBundle, Strategy]) -> CSRecord:
        claim, bundle, strategy = item
        prompt = build_prompt(strategy, claim, bundle, corpus.articles)
        text = generate(prompt, config, provider, audit_path=None)
        audit.write(
            {
                "ts": utc_now().isoformat(),
                "claim_id": claim.id,
                "strategy": strategy.value,
                "response": text,
            }
        )
        return CSRecord(
            id=record_id(claim.id, strategy),
            claim_id=claim.id,
            strategy=strategy,
            generated_text=text,
        )

    records: list[CSRecord] = []
    with ThreadPoolExecutor(max_workers=max(1, config.max_concurrency)) as pool:
        futures = {pool.submit(one, item): item for item in todo}
        for future, item in futures.items():
            claim, _, strategy = item
            try:
                records.append(future.result())
            except Exception as e:  # per-item isolation
                errors.append((claim.id, strategy.value, str(e)))
    records.sort(key=lambda r: (r.claim_id, r.strategy.value))
    return CampaignResult(records=records, skipped=skipped, errors=errors)
