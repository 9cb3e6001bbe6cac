"""Corpus-level repetitiveness, readability, and syntactic complexity.

Repetition rate is computed over shuffled document order (five seeds), in
non-overlapping 1000-token windows, as the geometric mean over n in 1..4 of
the share of n-gram occurrences whose type occurs at least twice in the
window, scaled to 0..100. Readability uses the classic Flesch formulas with
the syllable heuristic below. Syntactic depth comes from externally produced
dependency parses (CoNLL-U); this module never parses text itself.
"""

from __future__ import annotations

import math
import random
import re
from collections import Counter, defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from cskit.corpus import AnnotatorRole, CSRecord, Strategy
from cskit.editmetrics import tokenize

# ---------------------------------------------------------------------------
# repetition rate

RR_WINDOW = 1000
RR_MAX_N = 4
RR_N_SHUFFLES = 5
RR_MIN_FINAL_WINDOW = 500
RR_FLOOR = 1e-6


@dataclass(frozen=True)
class RepetitionRate:
    value: float  # zero rates floored at RR_FLOOR before the geometric mean
    raw: float  # unfloored
    type_based: float  # alternative reading: share of non-singleton types


def _windows(stream: list[str], window: int, min_final: int) -> list[list[str]]:
    # a corpus smaller than one window is a single window; otherwise the
    # final partial window is kept only when it reaches min_final tokens
    if len(stream) <= window:
        return [stream]
    out = [stream[i : i + window] for i in range(0, len(stream), window)]
    if len(out[-1]) < min_final:
        out.pop()
    return out


def _window_rates(win: list[str], max_n: int) -> tuple[list[float | None], list[float | None]]:
    occ_rates: list[float | None] = []
    type_rates: list[float | None] = []
    for n in range(1, max_n + 1):
        total = len(win) - n + 1
        if total <= 0:
            occ_rates.append(None)
            type_rates.append(None)
            continue
        counts = Counter(tuple(win[i : i + n]) for i in range(total))
        repeated_occ = sum(c for c in counts.values() if c >= 2)
        repeated_types = sum(1 for c in counts.values() if c >= 2)
        occ_rates.append(repeated_occ / total)
        type_rates.append(repeated_types / len(counts))
    return occ_rates, type_rates


def _geo(rates: list[float], floor: float | None) -> float:
    if floor is not None:
        rates = [max(r, floor) for r in rates]
    prod = math.prod(rates)
    return 100.0 * prod ** (1.0 / len(rates))


def repetition_rate(
    corpus: Sequence[str],
    seed_base: int = 0,
    window: int = RR_WINDOW,
    max_n: int = RR_MAX_N,
    floor: float = RR_FLOOR,
) -> RepetitionRate:
    """Shuffle-averaged windowed repetition rate of a document collection."""
    docs = [list(tokenize(text).tokens) for text in corpus]
    if sum(len(d) for d in docs) < 1:
        raise ValueError("corpus has no tokens")
    per_shuffle: list[tuple[float, float, float]] = []
    for seed in range(seed_base, seed_base + RR_N_SHUFFLES):
        order = list(range(len(docs)))
        random.Random(seed).shuffle(order)
        stream = [tok for i in order for tok in docs[i]]
        occ_sums = [0.0] * max_n
        occ_counts = [0] * max_n
        type_sums = [0.0] * max_n
        for win in _windows(stream, window, RR_MIN_FINAL_WINDOW):
            occ_rates, type_rates = _window_rates(win, max_n)
            for k in range(max_n):
                if occ_rates[k] is not None:
                    occ_sums[k] += occ_rates[k]
                    type_sums[k] += type_rates[k]
                    occ_counts[k] += 1
        occ_means = [occ_sums[k] / occ_counts[k] if occ_counts[k] else 0.0 for k in range(max_n)]
        type_means = [type_sums[k] / occ_counts[k] if occ_counts[k] else 0.0 for k in range(max_n)]
        per_shuffle.append(
            (_geo(occ_means, floor), _geo(occ_means, None), _geo(type_means, floor))
        )
    k = len(per_shuffle)
    return RepetitionRate(
        value=sum(v for v, _, _ in per_shuffle) / k,
        raw=sum(r for _, r, _ in per_shuffle) / k,
        type_based=sum(t for _, _, t in per_shuffle) / k,
    )


# ---------------------------------------------------------------------------
# syllables and readability

_VOWELS = frozenset("aeiouy")

# Heuristic-defeating words; extend as they surface.
_SYLLABLE_EXCEPTIONS = {
    "business": 2,
    "every": 2,
    "somewhere": 2,
    "queue": 1,
}


def syllables(word: str) -> int:
    """Vowel-group syllable estimate; silent final e dropped unless it closes
    a consonant+le ending. Inputs without letters count as one syllable."""
    w = "".join(ch for ch in word.lower() if ch.isalpha())
    if not w:
        return 1
    if w in _SYLLABLE_EXCEPTIONS:
        return _SYLLABLE_EXCEPTIONS[w]
    groups = 0
    prev_vowel = False
    for ch in w:
        is_vowel = ch in _VOWELS
        if is_vowel and not prev_vowel:
            groups += 1
        prev_vowel = is_vowel
    if (
        len(w) >= 2
        and w.endswith("e")
        and w[-2] not in _VOWELS
        and not (len(w) >= 3 and w.endswith("le") and w[-3] not in _VOWELS)
    ):
        groups -= 1
    return max(groups, 1)


_ABBREVIATIONS = frozenset(
    "mr mrs ms dr prof sr jr st no vs etc al inc ltd co fig approx".split()
)

_SENT_BOUNDARY = re.compile(r"([.!?]+[\"')\]]*)(\s+|$)")


def split_sentences(text: str) -> list[str]:
    """Terminal-punctuation sentence splitting with an abbreviation guard."""
    sentences: list[str] = []
    start = 0
    for m in _SENT_BOUNDARY.finditer(text):
        candidate = text[start : m.end(1)]
        last_word = re.findall(r"[\w.]+(?=[.!?]+[\"')\]]*$)", candidate)
        if last_word and last_word[-1].rstrip(".").lower() in _ABBREVIATIONS:
            continue
        if candidate.strip():
            sentences.append(candidate.strip())
        start = m.end()
    tail = text[start:].strip()
    if tail:
        sentences.append(tail)
    return sentences


@dataclass(frozen=True)
class Readability:
    fres: float
    fkg: float
    cw: float
    n_words: int
    n_sentences: int
    n_syllables: int


def _is_word(token: str) -> bool:
    return any(ch.isalnum() for ch in token)


def readability(corpus: Sequence[str]) -> Readability:
    """Flesch Reading Ease, Flesch-Kincaid grade, and complex-word share,
    pooled over all documents."""
    n_words = n_sents = n_syll = n_complex = 0
    for text in corpus:
        sents = split_sentences(text)
        n_sents += len(sents)
        for token in tokenize(text).tokens:
            if not _is_word(token):
                continue
            n_words += 1
            s = syllables(token)
            n_syll += s
            if s >= 3:
                n_complex += 1
    if n_words == 0:
        raise ValueError("corpus has no words")
    if n_sents == 0:
        raise ValueError("corpus has no sentences")
    wps = n_words / n_sents
    spw = n_syll / n_words
    return Readability(
        fres=206.835 - 1.015 * wps - 84.6 * spw,
        fkg=0.39 * wps + 11.8 * spw - 15.59,
        cw=n_complex / n_words,
        n_words=n_words,
        n_sentences=n_sents,
        n_syllables=n_syll,
    )


# ---------------------------------------------------------------------------
# dependency parses

@dataclass(frozen=True)
class ParseToken:
    form: str
    head: int  # 0 = root
    deprel: str = "_"


@dataclass(frozen=True)
class ParsedSentence:
    tokens: tuple[ParseToken, ...]


class ParseTreeError(ValueError):
    pass


def token_depths(sentence: ParsedSentence) -> list[int]:
    """Depth of each token, root depth 1. Raises on cycles or bad root counts."""
    n = len(sentence.tokens)
    heads = [t.head for t in sentence.tokens]
    if sum(1 for h in heads if h == 0) != 1:
        raise ParseTreeError("parse must have exactly one root")
    depths = [0] * n
    for i in range(n):
        seen = set()
        j = i
        d = 0
        while True:
            if j in seen:
                raise ParseTreeError(f"cycle through token {j + 1}")
            seen.add(j)
            d += 1
            h = heads[j]
            if h == 0:
                break
            if not 1 <= h <= n:
                raise ParseTreeError(f"head {h} out of range at token {j + 1}")
            j = h - 1
        depths[i] = d
    return depths


def sentence_depth(sentence: ParsedSentence) -> int:
    return max(token_depths(sentence))


def read_conllu(path: str | Path) -> list[ParsedSentence]:
    """Read sentences from a CoNLL-U file (ID, FORM, HEAD columns; multiword
    ranges and empty nodes skipped)."""
    sentences: list[ParsedSentence] = []
    tokens: list[ParseToken] = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                if tokens:
                    sentences.append(ParsedSentence(tokens=tuple(tokens)))
                    tokens = []
                continue
            if line.startswith("#"):
                continue
            cols = line.split("\t")
            if "-" in cols[0] or "." in cols[0]:
                continue
            if len(cols) < 7:
                raise ValueError(f"{path}:{line_no}: expected at least 7 tab-separated columns")
            try:
                head = int(cols[6])
            except ValueError:
                raise ValueError(f"{path}:{line_no}: HEAD column is not an integer: {cols[6]!r}") from None
            deprel = cols[7] if len(cols) > 7 else "_"
            tokens.append(ParseToken(form=cols[1], head=head, deprel=deprel))
    if tokens:
        sentences.append(ParsedSentence(tokens=tuple(tokens)))
    return sentences


@dataclass(frozen=True)
class SyntacticMetrics:
    asd: float  # mean over CS units of the mean sentence depth
    msd: float  # mean over CS units of the max sentence depth
    nst: float  # mean number of sentences per CS unit


def syntactic_metrics(parses_by_cs: Sequence[Sequence[ParsedSentence]]) -> SyntacticMetrics:
    units = [u for u in parses_by_cs if u]
    if not units:
        raise ValueError("no parsed units")
    asd_vals = []
    msd_vals = []
    nst_vals = []
    for unit in units:
        depths = [sentence_depth(s) for s in unit]
        asd_vals.append(sum(depths) / len(depths))
        msd_vals.append(max(depths))
        nst_vals.append(len(depths))
    k = len(units)
    return SyntacticMetrics(
        asd=sum(asd_vals) / k, msd=sum(msd_vals) / k, nst=sum(nst_vals) / k
    )


# ---------------------------------------------------------------------------
# aggregation

@dataclass(frozen=True)
class TextQualityReport:
    strategy: Strategy
    role: AnnotatorRole
    corpus_tag: str  # "gen" or "ed"
    rr: float
    rr_raw: float
    rr_type_based: float
    fres: float
    fkg: float
    cw: float
    asd: float | None = None
    msd: float | None = None
    nst: float | None = None


ParseProvider = Mapping[tuple[str, str], Sequence[ParsedSentence]]


def load_parse_dir(path: str | Path) -> dict[tuple[str, str], list[ParsedSentence]]:
    """Parse files named <record_id>.<gen|ed>.conllu under ``path``."""
    out: dict[tuple[str, str], list[ParsedSentence]] = {}
    for f in sorted(Path(path).glob("*.conllu")):
        stem = f.name[: -len(".conllu")]
        record_id, _, tag = stem.rpartition(".")
        if tag not in ("gen", "ed") or not record_id:
            continue
        out[(record_id, tag)] = read_conllu(f)
    return out


def quality_report(
    records: Iterable[CSRecord],
    seed_base: int = 0,
    parses: ParseProvider | None = None,
) -> list[TextQualityReport]:
    """One report per (strategy, role, gen|ed). Syntactic fields appear only
    for groups fully covered by the parse provider."""
    groups: dict[tuple[Strategy, AnnotatorRole], list[CSRecord]] = defaultdict(list)
    for rec in records:
        if rec.edited_text is None or rec.annotator_role is None:
            continue
        groups[(rec.strategy, rec.annotator_role)].append(rec)

    reports: list[TextQualityReport] = []
    for (strategy, role), recs in sorted(
        groups.items(), key=lambda kv: (kv[0][0].value, kv[0][1].value)
    ):
        recs = sorted(recs, key=lambda r: r.id)
        for tag in ("gen", "ed"):
            texts = [r.generated_text if tag == "gen" else r.edited_text for r in recs]
            rr = repetition_rate(texts, seed_base=seed_base)
            read = readability(texts)
            syn = None
            if parses is not None:
                units = [parses.get((r.id, tag)) for r in recs]
                if all(u for u in units):
                    syn = syntactic_metrics(units)
            reports.append(
                TextQualityReport(
                    strategy=strategy,
                    role=role,
                    corpus_tag=tag,
                    rr=rr.value,
                    rr_raw=rr.raw,
                    rr_type_based=rr.type_based,
                    fres=read.fres,
                    fkg=read.fkg,
                    cw=read.cw,
                    asd=syn.asd if syn else None,
                    msd=syn.msd if syn else None,
                    nst=syn.nst if syn else None,
                )
            )
    return reports
