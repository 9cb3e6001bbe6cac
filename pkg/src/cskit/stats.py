"""Statistical tests and agreement measures for the survey analyses.

Rating scale encoding: NoAttempt=0, VeryPoor=1, Poor=2, Good=3, VeryGood=4.
The conflated encoding collapses positive ratings ({Good, VeryGood} -> 1)
against the rest (-> 0). Significance stars follow the two-level convention:
"*" for p < 0.01, "**" for p < 0.001.
"""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Mapping, Sequence

from cskit.corpus import (
    RATING_DIMENSIONS,
    PREFERENCE_DIMENSIONS,
    ResponseKind,
    Strategy,
    SurveyResponse,
)

RATING_ENCODING = {"NoAttempt": 0, "VeryPoor": 1, "Poor": 2, "Good": 3, "VeryGood": 4}
RATING_CONFLATED = {"NoAttempt": 0, "VeryPoor": 0, "Poor": 0, "Good": 1, "VeryGood": 1}

MWU_EXACT_MAX_COMBINED = 16  # exact permutation enumeration up to this n1+n2

STAR_P = 0.01
DOUBLE_STAR_P = 0.001


def stars(p: float) -> str:
    if p < DOUBLE_STAR_P:
        return "**"
    if p < STAR_P:
        return "*"
    return ""


# ---------------------------------------------------------------------------
# core tests


def binomial_one_sided(k: int, n: int, p0: float) -> float:
    """Exact upper tail P(X >= k) for X ~ Binomial(n, p0)."""
    if not 0 <= k <= n:
        raise ValueError(f"need 0 <= k <= n, got k={k}, n={n}")
    if not 0.0 < p0 < 1.0:
        raise ValueError(f"need 0 < p0 < 1, got {p0}")
    return sum(math.comb(n, i) * p0**i * (1.0 - p0) ** (n - i) for i in range(k, n + 1))


def midranks(values: Sequence[float]) -> list[float]:
    """Ranks 1..n with ties sharing the mean of their rank range."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        mean_rank = (i + j) / 2 + 1
        for t in range(i, j + 1):
            ranks[order[t]] = mean_rank
        i = j + 1
    return ranks


@dataclass(frozen=True)
class MannWhitneyResult:
    u: float  # U statistic of the first sample
    p: float
    method: str  # "exact" or "normal"
    degenerate: bool = False  # all values identical across both samples


def _u_of_first(pooled_ranks: Sequence[float], n1: int) -> float:
    r1 = sum(pooled_ranks[:n1])
    return r1 - n1 * (n1 + 1) / 2


def mann_whitney_u(
    a: Sequence[float], b: Sequence[float], alternative: str = "two-sided"
) -> MannWhitneyResult:
    """Rank-sum test with midranks. ``alternative`` refers to the first
    sample: "greater" means a tends larger than b. Exact permutation
    enumeration when n1+n2 <= 16, else tie-corrected normal approximation
    with continuity correction.
    """
    if alternative not in ("two-sided", "greater", "less"):
        raise ValueError(f"unknown alternative {alternative!r}")
    if not a or not b:
        raise ValueError("both samples must be non-empty")
    n1, n2 = len(a), len(b)
    pooled = list(a) + list(b)
    ranks = midranks(pooled)
    u1 = _u_of_first(ranks, n1)
    mu = n1 * n2 / 2

    if len(set(pooled)) == 1:
        return MannWhitneyResult(u=u1, p=1.0, method="degenerate", degenerate=True)

    if n1 + n2 <= MWU_EXACT_MAX_COMBINED:
        # enumerate all assignments of the pooled ranks to the first sample
        total = 0
        hits = 0
        for idx in combinations(range(n1 + n2), n1):
            r1 = sum(ranks[i] for i in idx)
            u = r1 - n1 * (n1 + 1) / 2
            total += 1
            if alternative == "greater":
                hits += u >= u1 - 1e-12
            elif alternative == "less":
                hits += u <= u1 + 1e-12
            else:
                hits += abs(u - mu) >= abs(u1 - mu) - 1e-12
        return MannWhitneyResult(u=u1, p=hits / total, method="exact")

    tie_counts = Counter(pooled).values()
    n = n1 + n2
    tie_term = sum(t**3 - t for t in tie_counts)
    sigma2 = n1 * n2 / 12 * ((n + 1) - tie_term / (n * (n - 1)))
    sigma = math.sqrt(sigma2)
    if sigma == 0:
        return MannWhitneyResult(u=u1, p=1.0, method="degenerate", degenerate=True)
    if alternative == "greater":
        z = (u1 - mu - 0.5) / sigma
        p = _norm_sf(z)
    elif alternative == "less":
        z = (u1 - mu + 0.5) / sigma
        p = _norm_sf(-z)
    else:
        z = (abs(u1 - mu) - 0.5) / sigma
        p = 2 * _norm_sf(max(z, 0.0))
    return MannWhitneyResult(u=u1, p=min(p, 1.0), method="normal")


def _norm_sf(z: float) -> float:
    return 0.5 * math.erfc(z / math.sqrt(2))


@dataclass(frozen=True)
class KappaResult:
    kappa: float
    pct_agreement: float
    n_items: int
    degenerate: bool = False


def cohens_kappa(a: Sequence, b: Sequence) -> KappaResult:
    """Chance-corrected agreement with empirical marginals."""
    if len(a) != len(b):
        raise ValueError(f"length mismatch: {len(a)} vs {len(b)}")
    if not a:
        raise ValueError("empty annotations")
    n = len(a)
    po = sum(x == y for x, y in zip(a, b)) / n
    ca, cb = Counter(a), Counter(b)
    pe = sum(ca[label] / n * cb[label] / n for label in set(ca) | set(cb))
    if pe >= 1.0 - 1e-12:
        # both annotators constant on the same label
        return KappaResult(kappa=1.0 if po >= 1.0 else 0.0, pct_agreement=po, n_items=n, degenerate=True)
    return KappaResult(kappa=(po - pe) / (1 - pe), pct_agreement=po, n_items=n)


def spearman_rho(a: Sequence[float], b: Sequence[float]) -> float:
    """Pearson correlation of midranks."""
    if len(a) != len(b):
        raise ValueError(f"length mismatch: {len(a)} vs {len(b)}")
    if len(a) < 2:
        raise ValueError("need at least two items")
    if len(set(a)) == 1 or len(set(b)) == 1:
        raise ValueError("rank correlation undefined for a constant vector")
    ra, rb = midranks(a), midranks(b)
    n = len(a)
    ma = sum(ra) / n
    mb = sum(rb) / n
    cov = sum((x - ma) * (y - mb) for x, y in zip(ra, rb))
    va = sum((x - ma) ** 2 for x in ra)
    vb = sum((y - mb) ** 2 for y in rb)
    return cov / math.sqrt(va * vb)


# ---------------------------------------------------------------------------
# survey aggregation


@dataclass(frozen=True)
class PreferenceRow:
    dimension: str
    gen_count: int
    ed_count: int
    p_value: float
    star: str


def preference_table(responses: Iterable[SurveyResponse]) -> list[PreferenceRow]:
    """Per-dimension counts of generated-vs-edited preference with a one-sided
    binomial test on the larger count."""
    counts: dict[str, Counter] = defaultdict(Counter)
    for r in responses:
        if r.kind is not ResponseKind.PREFERENCE:
            continue
        counts[r.dimension][r.value] += 1
    rows = []
    for dim in PREFERENCE_DIMENSIONS:
        if dim not in counts:
            continue
        gen, ed = counts[dim]["GEN"], counts[dim]["ED"]
        p = binomial_one_sided(max(gen, ed), gen + ed, 0.5)
        rows.append(PreferenceRow(dimension=dim, gen_count=gen, ed_count=ed, p_value=p, star=stars(p)))
    return rows


@dataclass(frozen=True)
class RatingComparison:
    versus: Strategy
    u: float
    p_value: float
    star: str


@dataclass(frozen=True)
class RatingCell:
    strategy: Strategy
    dimension: str
    n: int
    mean: float
    comparison: RatingComparison | None  # vs the lowest-mean strategy in the column


def _rating_values(
    responses: Iterable[SurveyResponse],
    strategy_of: Mapping[str, Strategy],
    encoding: Mapping[str, int] = RATING_ENCODING,
) -> dict[str, dict[Strategy, list[int]]]:
    values: dict[str, dict[Strategy, list[int]]] = defaultdict(lambda: defaultdict(list))
    for r in responses:
        if r.kind is not ResponseKind.RATING:
            continue
        strategy = strategy_of.get(r.item_id)
        if strategy is None:
            raise KeyError(f"no strategy known for item {r.item_id!r}")
        values[r.dimension][strategy].append(encoding[r.value])
    return values


def rating_table(
    responses: Iterable[SurveyResponse],
    strategy_of: Mapping[str, Strategy],
    encoding: Mapping[str, int] = RATING_ENCODING,
) -> list[RatingCell]:
    """Mean ratings per (strategy, dimension); each non-lowest strategy is
    tested against the column-wise lowest with a one-sided rank-sum test."""
    values = _rating_values(responses, strategy_of, encoding)
    cells: list[RatingCell] = []
    for dim in RATING_DIMENSIONS:
        if dim not in values:
            continue
        by_strategy = values[dim]
        means = {s: sum(v) / len(v) for s, v in by_strategy.items()}
        lowest = min(means, key=lambda s: (means[s], s.value))
        for strategy in sorted(by_strategy, key=lambda s: s.value):
            comparison = None
            if strategy is not lowest:
                res = mann_whitney_u(by_strategy[strategy], by_strategy[lowest], alternative="greater")
                comparison = RatingComparison(versus=lowest, u=res.u, p_value=res.p, star=stars(res.p))
            cells.append(
                RatingCell(
                    strategy=strategy,
                    dimension=dim,
                    n=len(by_strategy[strategy]),
                    mean=means[strategy],
                    comparison=comparison,
                )
            )
    return cells


# ---------------------------------------------------------------------------
# agreement


def double_annotations(
    responses: Iterable[SurveyResponse],
) -> dict[str, list[tuple[str, str]]]:
    """Per dimension: (value_annotator1, value_annotator2) for items answered
    by exactly two respondents, ordered by respondent id."""
    per_item: dict[tuple[str, str], list[tuple[str, str]]] = defaultdict(list)
    for r in responses:
        per_item[(r.dimension, r.item_id)].append((r.respondent_id, r.value))
    out: dict[str, list[tuple[str, str]]] = defaultdict(list)
    for (dim, _item), answers in sorted(per_item.items()):
        if len(answers) == 2:
            answers.sort()
            out[dim].append((answers[0][1], answers[1][1]))
    return dict(out)


@dataclass(frozen=True)
class AgreementReport:
    dimension: str
    kappa: float
    rho: float | None
    pct_agreement: float
    n_items: int


def agreement_by_dimension(
    responses: Iterable[SurveyResponse],
    encoding: Mapping[str, int] | None = None,
) -> list[AgreementReport]:
    """Kappa (and rho for ordinal encodings) over double-annotated items."""
    reports = []
    for dim, pairs in sorted(double_annotations(responses).items()):
        a = [x for x, _ in pairs]
        b = [y for _, y in pairs]
        if encoding is not None:
            a = [encoding[x] for x in a]
            b = [encoding[y] for y in b]
        k = cohens_kappa(a, b)
        rho = None
        if encoding is not None and len(pairs) >= 2 and len(set(a)) > 1 and len(set(b)) > 1:
            rho = spearman_rho(a, b)
        reports.append(
            AgreementReport(dimension=dim, kappa=k.kappa, rho=rho, pct_agreement=k.pct_agreement, n_items=k.n_items)
        )
    return reports


@dataclass(frozen=True)
class ConflationRow:
    dimension: str
    kappa_raw: float
    rho_raw: float | None
    kappa_conflated: float
    rho_conflated: float | None
    pct_agreement_raw: float
    pct_agreement_conflated: float


def conflation_analysis(responses: Iterable[SurveyResponse]) -> list[ConflationRow]:
    """Agreement on the 5-level scale versus the positive/non-positive collapse."""
    responses = list(responses)
    raw = {r.dimension: r for r in agreement_by_dimension(responses, RATING_ENCODING)}
    confl = {r.dimension: r for r in agreement_by_dimension(responses, RATING_CONFLATED)}
    rows = []
    for dim in sorted(raw):
        rows.append(
            ConflationRow(
                dimension=dim,
                kappa_raw=raw[dim].kappa,
                rho_raw=raw[dim].rho,
                kappa_conflated=confl[dim].kappa,
                rho_conflated=confl[dim].rho,
                pct_agreement_raw=raw[dim].pct_agreement,
                pct_agreement_conflated=confl[dim].pct_agreement,
            )
        )
    return rows


def degenerate_respondents(
    responses: Iterable[SurveyResponse], min_items: int = 8, min_distinct: int = 3
) -> set[str]:
    """Respondents who answered at least ``min_items`` rating items using
    fewer than ``min_distinct`` distinct values; excluded from agreement."""
    used: dict[str, list[str]] = defaultdict(list)
    for r in responses:
        if r.kind is ResponseKind.RATING:
            used[r.respondent_id].append(r.value)
    return {
        rid
        for rid, vals in used.items()
        if len(vals) >= min_items and len(set(vals)) < min_distinct
    }


def pairwise_average_kappa(annotator_labels: Mapping[str, Mapping[str, object]]) -> float:
    """Mean Cohen's kappa over annotator pairs, each restricted to the items
    both labeled. Pairs without shared items are skipped."""
    annotators = sorted(annotator_labels)
    if len(annotators) < 2:
        raise ValueError("need at least two annotators")
    kappas = []
    for a1, a2 in combinations(annotators, 2):
        shared = sorted(set(annotator_labels[a1]) & set(annotator_labels[a2]))
        if not shared:
            continue
        kappas.append(
            cohens_kappa(
                [annotator_labels[a1][i] for i in shared],
                [annotator_labels[a2][i] for i in shared],
            ).kappa
        )
    if not kappas:
        raise ValueError("no annotator pair shares any item")
    return sum(kappas) / len(kappas)
