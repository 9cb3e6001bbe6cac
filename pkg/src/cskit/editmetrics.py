"""Post-editing effort metrics: edit rate with block shifts, and lexical diffs.

The edit rate treats the human post-edit as the reference, so it measures how
much work it took to turn the generated text into the accepted one. Texts are
lowercased and punctuation is split off before comparison, so case-only
edits count as unmodified (this directly affects the percentage of modified
pairs reported by edit_effort_report).
"""

from __future__ import annotations

import unicodedata
from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Iterable, Sequence

from cskit import ter as _ter
from cskit.corpus import AnnotatorRole, CSRecord, Strategy

_SPLIT_CATEGORIES = ("P", "S")  # punctuation and symbols become standalone tokens


def _is_splitter(ch: str) -> bool:
    return unicodedata.category(ch).startswith(_SPLIT_CATEGORIES)


@dataclass(frozen=True)
class TokenSeq:
    tokens: tuple[str, ...]
    source_text: str

    def __len__(self) -> int:
        return len(self.tokens)


def tokenize(text: str) -> TokenSeq:
    """Lowercase, split on Unicode whitespace, split punctuation into own tokens."""
    tokens: list[str] = []
    word: list[str] = []
    for ch in text.lower():
        if ch.isspace():
            if word:
                tokens.append("".join(word))
                word = []
        elif _is_splitter(ch):
            if word:
                tokens.append("".join(word))
                word = []
            tokens.append(ch)
        else:
            word.append(ch)
    if word:
        tokens.append("".join(word))
    return TokenSeq(tokens=tuple(tokens), source_text=text)


@dataclass(frozen=True)
class TerResult:
    edits: int
    ter: float
    insertions: int
    deletions: int
    substitutions: int
    shifts: int

    @property
    def breakdown(self) -> dict[str, int]:
        return {
            "ins": self.insertions,
            "del": self.deletions,
            "sub": self.substitutions,
            "shift": self.shifts,
        }


class EmptyReferenceError(ValueError):
    pass


def _as_tokens(x: TokenSeq | Sequence[str] | str) -> tuple[str, ...]:
    if isinstance(x, TokenSeq):
        return x.tokens
    if isinstance(x, str):
        return tokenize(x).tokens
    return tuple(x)


def ter(hyp: TokenSeq | Sequence[str] | str, ref: TokenSeq | Sequence[str] | str) -> TerResult:
    """Edit rate of ``hyp`` against ``ref``: (shifts + word edits) / |ref|."""
    hyp_tokens = _as_tokens(hyp)
    ref_tokens = _as_tokens(ref)
    if not ref_tokens:
        raise EmptyReferenceError("reference token sequence is empty")
    vocab: dict[str, int] = {}
    hyp_ids = [vocab.setdefault(t, len(vocab)) for t in hyp_tokens]
    ref_ids = [vocab.setdefault(t, len(vocab)) for t in ref_tokens]
    counts = _ter.ter_counts(hyp_ids, ref_ids)
    return TerResult(
        edits=counts.total,
        ter=counts.total / len(ref_tokens),
        insertions=counts.insertions,
        deletions=counts.deletions,
        substitutions=counts.substitutions,
        shifts=counts.shifts,
    )


def hter_pair(generated: str, edited: str) -> float:
    """Edit rate of the generation against its human post-edit (the reference)."""
    ref = tokenize(edited)
    if not ref.tokens:
        raise EmptyReferenceError("edited text has no tokens")
    return ter(tokenize(generated), ref).ter


@dataclass(frozen=True)
class EditEffortReport:
    config: Strategy
    role: AnnotatorRole
    n: int
    p_mod: float  # percentage of pairs with a nonzero edit rate
    hter: float  # mean over all pairs
    hter_m: float | None  # mean over modified pairs; None when nothing changed


def edit_effort_report(records: Iterable[CSRecord]) -> list[EditEffortReport]:
    """Per (strategy, annotator role): n, percent modified, mean edit rates."""
    groups: dict[tuple[Strategy, AnnotatorRole], list[float]] = defaultdict(list)
    for rec in records:
        if rec.edited_text is None or rec.annotator_role is None:
            continue
        groups[(rec.strategy, rec.annotator_role)].append(
            hter_pair(rec.generated_text, rec.edited_text)
        )
    reports = []
    for (strategy, role), values in sorted(groups.items(), key=lambda kv: (kv[0][0].value, kv[0][1].value)):
        modified = [v for v in values if v > 0]
        reports.append(
            EditEffortReport(
                config=strategy,
                role=role,
                n=len(values),
                p_mod=100.0 * len(modified) / len(values),
                hter=sum(values) / len(values),
                hter_m=sum(modified) / len(modified) if modified else None,
            )
        )
    return reports


# Small English stopword list for the stopword-free lexical diff variant.
STOPWORDS = frozenset(
    """a an the and or but if then than that this these those it its is are was
    were be been being to of in on at by for with as from about into over after
    under not no nor do does did done have has had having he she they them his
    her their we you i your our my me us will would can could should may might
    must there here what which who whom whose when where why how all any both
    each few more most other some such only own same so too very s t don now
    's 'd 'll 'm 're 've""".split()
)


@dataclass(frozen=True)
class LexDiffReport:
    added: list[tuple[str, int]]
    removed: list[tuple[str, int]]
    n_order: int


def _ngram_counts(texts: Iterable[str], n: int, drop_stopwords: bool) -> Counter:
    counts: Counter = Counter()
    for text in texts:
        tokens = [t for t in tokenize(text).tokens if not _is_splitter(t[0])]
        if drop_stopwords:
            tokens = [t for t in tokens if t not in STOPWORDS]
        for i in range(len(tokens) - n + 1):
            counts[" ".join(tokens[i : i + n])] += 1
    return counts


def lexdiff(records: Iterable[CSRecord], n_order: int = 1, drop_stopwords: bool = False) -> LexDiffReport:
    """N-grams most added and most removed by post-editing, ranked by count delta."""
    if not 1 <= n_order <= 3:
        raise ValueError("n_order must be 1, 2, or 3")
    recs = [r for r in records if r.edited_text is not None]
    gen = _ngram_counts((r.generated_text for r in recs), n_order, drop_stopwords)
    ed = _ngram_counts((r.edited_text for r in recs), n_order, drop_stopwords)
    added: list[tuple[str, int]] = []
    removed: list[tuple[str, int]] = []
    for gram in set(gen) | set(ed):
        delta = ed[gram] - gen[gram]
        if delta > 0:
            added.append((gram, delta))
        elif delta < 0:
            removed.append((gram, -delta))
    added.sort(key=lambda kv: (-kv[1], kv[0]))
    removed.sort(key=lambda kv: (-kv[1], kv[0]))
    return LexDiffReport(added=added, removed=removed, n_order=n_order)
