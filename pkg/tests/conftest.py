"""Shared fixtures: entity builders and a synthetic paper-scale corpus.

The synthetic corpus mirrors the released dataset's shape (108 claims over
six groups, three records per claim, the 32/76 mixed-strategy role split) with
edit distances controlled exactly, so count identities and selection logic can
be tested without the real data. Real-dataset replay tests activate only when
CSKIT_DATASET points at a corpus file.
"""

from __future__ import annotations

import os

import pytest

from cskit.corpus import (
    AnnotatorRole,
    Claim,
    Corpus,
    CSRecord,
    FactCheckArticle,
    GroundSpan,
    DocKind,
    KnowledgeBundle,
    NGOReport,
    SelectionFlags,
    Strategy,
    TargetGroup,
)

DATASET_ENV = "CSKIT_DATASET"

GROUPS = list(TargetGroup)


def make_article(i: int) -> FactCheckArticle:
    return FactCheckArticle(
        id=f"a{i:03d}",
        url=f"https://factcheck.example/item/{i}",
        publisher="factcheck.example",
        is_signatory=True,
        claim_reviewed=f"reviewed claim number {i}",
        verdict_text="False. The records show otherwise.",
        body=(
            f"Article {i} body. The archival records and the official statistics "
            "both show the claim misrepresents what actually happened."
        ),
        matched_keywords=(f"kw{i}",),
        selection=SelectionFlags(group_focused=True, counters_false_claim=True),
    )


def make_report(i: int, group: TargetGroup) -> NGOReport:
    return NGOReport(
        id=f"r{i:03d}",
        source_url="https://www.adl.org/resources/myths",
        target_group=group,
        pairs=(
            (f"myth text {i} alpha", f"anti stereotype {i} alpha with evidence"),
            (f"myth text {i} beta", f"anti stereotype {i} beta with context"),
        ),
    )


def _gen_text(claim_idx: int, strategy: Strategy) -> str:
    # 20 unique words so k substitutions give an edit rate of exactly k/20
    words = [f"g{claim_idx}{strategy.value.lower()}w{j}" for j in range(20)]
    return " ".join(words)


def _edited_text(generated: str, n_subs: int) -> str:
    words = generated.split()
    for j in range(n_subs):
        words[j] = words[j] + "x"
    return " ".join(words)


# per-strategy list of (count, substitutions-out-of-20); 8/20 = 0.40 clears
# the 0.39 selection threshold
_EDIT_PLAN = {
    Strategy.FC: [(20, 8), (29, 2), (59, 0)],  # 108 = 20 heavy, 29 light, 59 untouched
    Strategy.NGO: [(24, 8), (55, 2), (29, 0)],
    Strategy.MIX: [(20, 8), (54, 2), (34, 0)],
}

MIX_FC_COUNT = 32  # mixed-strategy items annotated by fact-checkers; the rest go to NGO


def _subs_for(strategy: Strategy, idx: int) -> int:
    offset = 0
    for count, subs in _EDIT_PLAN[strategy]:
        if idx < offset + count:
            return subs
        offset += count
    raise IndexError(idx)


def build_replay_corpus(n_claims: int = 108) -> Corpus:
    articles = {}
    claims = {}
    reports = {}
    bundles = {}
    records = {}

    for g, group in enumerate(GROUPS):
        report = make_report(g, group)
        reports[report.id] = report

    for i in range(n_claims):
        group = GROUPS[i % len(GROUPS)]
        article = make_article(i)
        articles[article.id] = article
        claim = Claim(
            id=f"c{i:03d}",
            text=f"hateful and misinformed claim {i} about the group",
            target_group=group,
            source_article_id=article.id,
        )
        claims[claim.id] = claim
        report = reports[f"r{(i % len(GROUPS)):03d}"]
        bundles[claim.id] = KnowledgeBundle(
            claim_id=claim.id,
            fc_article_id=article.id,
            ngo_pairs=tuple((m, a, 0.61) for m, a in report.pairs),
        )

    for strategy in (Strategy.FC, Strategy.NGO, Strategy.MIX):
        for i in range(n_claims):
            generated = _gen_text(i, strategy)
            subs = _subs_for(strategy, i)
            if strategy is Strategy.MIX:
                role = AnnotatorRole.FC if i < MIX_FC_COUNT else AnnotatorRole.NGO
            else:
                role = AnnotatorRole(strategy.value)
            rec = CSRecord(
                id=f"cs:c{i:03d}:{strategy.value}",
                claim_id=f"c{i:03d}",
                strategy=strategy,
                generated_text=generated,
                edited_text=_edited_text(generated, subs),
                annotator_role=role,
            )
            records[rec.id] = rec

    return Corpus(
        claims=claims, articles=articles, reports=reports, bundles=bundles, records=records
    )


@pytest.fixture(scope="session")
def replay_corpus() -> Corpus:
    return build_replay_corpus()


@pytest.fixture
def small_corpus() -> Corpus:
    """Two claims, one article, one report, one bundle; no records yet."""
    article = make_article(0)
    report = make_report(0, TargetGroup.MIGRANTS)
    claims = {
        "c1": Claim("c1", "they are all criminals, the stats prove it", TargetGroup.MIGRANTS, article.id),
        "c2": Claim("c2", "completely unrelated statement", TargetGroup.WOMEN, article.id),
    }
    bundle = KnowledgeBundle(
        claim_id="c1",
        fc_article_id=article.id,
        ngo_pairs=tuple((m, a, 0.7) for m, a in report.pairs),
    )
    return Corpus(
        claims=claims,
        articles={article.id: article},
        reports={report.id: report},
        bundles={"c1": bundle},
    )


def real_dataset_path() -> str | None:
    path = os.environ.get(DATASET_ENV)
    return path if path and os.path.exists(path) else None


requires_dataset = pytest.mark.skipif(
    real_dataset_path() is None,
    reason=f"released dataset not available (set {DATASET_ENV} to a mapped corpus file)",
)
