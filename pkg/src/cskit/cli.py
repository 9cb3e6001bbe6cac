"""Command-line entry point for the whole pipeline.

Exit codes: 0 ok, 2 config error, 3 data violation, 4 provider failure.
Reports are JSON; every subcommand can be re-run without corrupting state.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from collections import Counter
from pathlib import Path
from typing import Sequence

from cskit import corpus as corpus_mod
from cskit import editmetrics, genstrat, ingest, matcher, stats, textmetrics, workbench
from cskit.corpus import (
    Corpus,
    CorpusError,
    ResponseKind,
    Strategy,
    load_corpus,
    save_corpus,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_PROVIDER = 4

DEFAULT_EVAL_MIN_HTER = 0.39
DEFAULT_DOUBLES_PER_STRATEGY = 7


class ConfigError(Exception):
    pass


def _write_json(path: str | None, payload) -> None:
    text = json.dumps(payload, indent=2, ensure_ascii=False, sort_keys=True)
    if path:
        Path(path).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)


def _require(path: str | None, what: str) -> Path:
    if not path:
        raise ConfigError(f"{what} is required")
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"{what} does not exist: {path}")
    return p


def _load(path: str, validate: bool = True) -> Corpus:
    return load_corpus(_require(path, "--corpus"), validate=validate)


# ---------------------------------------------------------------------------
# report shapes


def _edit_effort_json(reports) -> list[dict]:
    return [
        {
            "config": r.config.value,
            "role": r.role.value,
            "n": r.n,
            "p_mod": round(r.p_mod, 1),
            "hter": round(r.hter, 3),
            "hter_m": round(r.hter_m, 3) if r.hter_m is not None else None,
        }
        for r in reports
    ]


def _quality_json(reports) -> list[dict]:
    return [
        {
            "config": r.strategy.value,
            "role": r.role.value,
            "corpus": r.corpus_tag,
            "rr": round(r.rr, 3),
            "rr_raw": round(r.rr_raw, 3),
            "rr_type_based": round(r.rr_type_based, 3),
            "fres": round(r.fres, 3),
            "fkg": round(r.fkg, 3),
            "cw": round(r.cw, 3),
            "asd": round(r.asd, 3) if r.asd is not None else None,
            "msd": round(r.msd, 3) if r.msd is not None else None,
            "nst": round(r.nst, 3) if r.nst is not None else None,
        }
        for r in reports
    ]


def _preference_json(rows) -> list[dict]:
    return [
        {
            "dimension": r.dimension,
            "gen": r.gen_count,
            "ed": r.ed_count,
            "p_value": r.p_value,
            "star": r.star,
        }
        for r in rows
    ]


def _ratings_json(cells) -> list[dict]:
    return [
        {
            "config": c.strategy.value,
            "dimension": c.dimension,
            "n": c.n,
            "mean": round(c.mean, 3),
            "versus": c.comparison.versus.value if c.comparison else None,
            "p_value": c.comparison.p_value if c.comparison else None,
            "star": c.comparison.star if c.comparison else "",
        }
        for c in cells
    ]


def _agreement_json(rows) -> list[dict]:
    return [
        {
            "dimension": r.dimension,
            "kappa": round(r.kappa, 3),
            "rho": round(r.rho, 3) if r.rho is not None else None,
            "pct_agreement": round(r.pct_agreement, 3),
            "n_items": r.n_items,
        }
        for r in rows
    ]


def _conflation_json(rows) -> list[dict]:
    return [
        {
            "dimension": r.dimension,
            "kappa": round(r.kappa_raw, 3),
            "rho": round(r.rho_raw, 3) if r.rho_raw is not None else None,
            "kappa_conflated": round(r.kappa_conflated, 3),
            "rho_conflated": round(r.rho_conflated, 3) if r.rho_conflated is not None else None,
        }
        for r in rows
    ]


# ---------------------------------------------------------------------------
# selection tooling


def select_eval_pairs(
    records: Sequence[corpus_mod.CSRecord],
    min_hter: float = DEFAULT_EVAL_MIN_HTER,
    doubles_per_strategy: int = DEFAULT_DOUBLES_PER_STRATEGY,
) -> dict:
    """Post-edited pairs whose edit rate reaches ``min_hter``, for the
    preference survey, plus the per-strategy picks to annotate twice."""
    scored = []
    for rec in records:
        if rec.edited_text is None:
            continue
        h = editmetrics.hter_pair(rec.generated_text, rec.edited_text)
        if h >= min_hter:
            scored.append((rec, h))
    scored.sort(key=lambda rh: (rh[0].strategy.value, -rh[1], rh[0].id))
    pairs = [
        {"item_id": rec.id, "strategy": rec.strategy.value, "hter": round(h, 4)}
        for rec, h in scored
    ]
    doubles = []
    per_strategy: Counter = Counter()
    for rec, h in scored:
        if per_strategy[rec.strategy] < doubles_per_strategy:
            per_strategy[rec.strategy] += 1
            doubles.append(rec.id)
    by_strategy = Counter(p["strategy"] for p in pairs)
    return {
        "min_hter": min_hter,
        "pairs": pairs,
        "n_pairs": len(pairs),
        "by_strategy": dict(sorted(by_strategy.items())),
        "double_annotation": sorted(doubles),
        "n_evaluation_slots": len(pairs) + len(doubles),
    }


# ---------------------------------------------------------------------------
# subcommands


def cmd_ingest_fc(args) -> int:
    if args.keywords_file:
        keyword_sets = ingest.load_keyword_sets(_require(args.keywords_file, "--keywords-file"))
    else:
        keyword_sets = ingest.default_keyword_sets()
    if args.live:
        fetcher = ingest.FixtureTransport(args.fixtures_dir, record_with=ingest.live_fetcher()) if args.fixtures_dir else ingest.live_fetcher()
    else:
        fetcher = ingest.FixtureTransport(_require(args.fixtures_dir, "--fixtures-dir"))

    articles: dict[str, corpus_mod.FactCheckArticle] = {}
    keywords_of: dict[str, list[str]] = {}
    for ks in keyword_sets:
        pages = ingest.query_many(list(ks.keywords), fetcher, limit=args.limit)
        for kw, page in zip(ks.keywords, pages):
            for entry in page.results:
                keywords_of.setdefault(entry.url, [])
                if kw not in keywords_of[entry.url]:
                    keywords_of[entry.url].append(kw)
                if entry.url in articles:
                    continue
                try:
                    articles[entry.url] = ingest.fetch_article(entry, fetcher)
                except (ingest.TransportError, ingest.ExtractionError) as e:
                    print(f"skip {entry.url}: {e}", file=sys.stderr)
    collected = [
        dataclasses.replace(a, matched_keywords=tuple(keywords_of[url]))
        for url, a in sorted(articles.items())
    ]
    print(f"retrieved {len(collected)} articles")

    if args.signatories_file:
        signatories = ingest.load_signatories(_require(args.signatories_file, "--signatories-file"))
        collected = ingest.filter_signatories(collected, signatories)
        print(f"{len(collected)} from signatory publishers")
    if args.flags_file:
        flags = json.loads(_require(args.flags_file, "--flags-file").read_text(encoding="utf-8"))
        flagged = []
        for a in collected:
            f = flags.get(a.id) or flags.get(a.url)
            if f:
                flagged.append(dataclasses.replace(a, selection=corpus_mod.SelectionFlags(**f)))
        sel = [
            a
            for a in flagged
            if a.selection.group_focused
            and (a.selection.counters_false_claim or a.selection.contextualizes_true_claim)
        ]
        print(f"{len(sel)} met all inclusion criteria")
        collected = sel

    out = Corpus(articles={a.id: a for a in collected})
    save_corpus(out, args.out, validate=bool(args.flags_file and args.signatories_file))
    print(f"wrote {len(collected)} articles to {args.out}")
    return EXIT_OK


def cmd_ingest_ngo(args) -> int:
    paths = [Path(p) for p in args.reports]
    if len(paths) == 1 and paths[0].is_dir():
        paths = sorted(paths[0].glob("*.json"))
    allowlist = ingest.DEFAULT_NGO_DOMAIN_ALLOWLIST
    if args.allowlist:
        allowlist = frozenset(
            ln.strip() for ln in _require(args.allowlist, "--allowlist").read_text(encoding="utf-8").splitlines() if ln.strip()
        )
    result = ingest.load_ngo_reports(paths, allowlist)
    for rej in result.rejections:
        print(f"rejected {rej.path}: {rej.reason}", file=sys.stderr)
    n_pairs = sum(len(r.pairs) for r in result.reports)
    print(f"loaded {len(result.reports)} reports, {n_pairs} myth/anti-stereotype pairs")
    save_corpus(Corpus(reports={r.id: r for r in result.reports}), args.out)
    print(f"wrote reports to {args.out}")
    return EXIT_OK if not result.rejections or result.reports else EXIT_DATA


def cmd_match(args) -> int:
    corpus = _load(args.corpus, validate=False)
    provider = matcher.make_provider(
        args.provider, model_id=args.model_id, stub_table_path=args.stub_table
    )
    claims = sorted(corpus.claims.values(), key=lambda c: c.id)
    reports = sorted(corpus.reports.values(), key=lambda r: r.id)
    matches = matcher.match_claims(claims, reports, provider, threshold=args.threshold)
    if args.review_file:
        rejected = {
            tuple(entry)
            for entry in json.loads(_require(args.review_file, "--review-file").read_text(encoding="utf-8"))
        }
        matches = matcher.set_review_flags(matches, {(c, r, int(i)) for c, r, i in rejected})
    build = matcher.build_bundles(matches, claims, corpus.reports)
    updated = corpus.with_bundles(build.bundles)
    save_corpus(updated, args.corpus, validate=False)
    print(f"built {len(build.bundles)} bundles from {len(claims)} claims")
    if build.unmatched_claim_ids:
        print("unmatched claims: " + ", ".join(build.unmatched_claim_ids))
    return EXIT_OK


def cmd_generate(args) -> int:
    corpus = _load(args.corpus, validate=False)
    strategies = (
        [Strategy.FC, Strategy.NGO, Strategy.MIX]
        if args.strategy == "all"
        else [Strategy(args.strategy.upper())]
    )
    config = genstrat.GenerationConfig(
        max_tokens=args.max_tokens,
        temperature=args.temperature,
        model_id=args.model_id,
        max_concurrency=args.concurrency,
    )
    provider = genstrat.make_llm_provider(args.provider, api_key_env=args.api_key_env)
    audit = args.audit or str(Path(args.corpus).with_suffix(".audit.jsonl"))
    result = genstrat.run_generation_campaign(corpus, strategies, config, provider, audit_path=audit)
    updated = corpus.with_records(result.records)
    save_corpus(updated, args.corpus, validate=False)
    print(f"generated {len(result.records)} records, skipped {result.skipped} existing")
    for claim_id, strategy, message in result.errors:
        print(f"failed {claim_id}/{strategy}: {message}", file=sys.stderr)
    return EXIT_PROVIDER if result.errors else EXIT_OK


def _parse_mix_quota(text: str | None):
    if not text:
        return None
    quota = {}
    for part in text.split(","):
        role, _, count = part.partition("=")
        quota[corpus_mod.AnnotatorRole(role.strip().upper())] = int(count)
    return quota


def cmd_workbench(args) -> int:
    corpus = _load(args.corpus)
    annotators = workbench.load_annotators(_require(args.annotators, "--annotators"))
    store = workbench.WorkbenchStore(
        corpus,
        annotators,
        wal_path=args.wal or str(Path(args.corpus).with_suffix(".wal.jsonl")),
        mix_quota=_parse_mix_quota(args.mix_quota),
        lease_seconds=args.lease_seconds,
    )
    app = workbench.create_app(store, token=args.token, static_dir=args.static)
    import uvicorn

    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return EXIT_OK


def cmd_analyze_edits(args) -> int:
    corpus = _load(args.corpus)
    reports = editmetrics.edit_effort_report(corpus.records.values())
    _write_json(args.out, _edit_effort_json(reports))
    return EXIT_OK


def cmd_analyze_text(args) -> int:
    corpus = _load(args.corpus)
    parses = textmetrics.load_parse_dir(_require(args.parses, "--parses")) if args.parses else None
    reports = textmetrics.quality_report(corpus.records.values(), seed_base=args.seed, parses=parses)
    _write_json(args.out, _quality_json(reports))
    return EXIT_OK


def cmd_lexdiff(args) -> int:
    corpus = _load(args.corpus)
    report = editmetrics.lexdiff(
        corpus.records.values(), n_order=args.n, drop_stopwords=args.stopword_free
    )
    _write_json(
        args.out,
        {
            "n_order": report.n_order,
            "added": [{"ngram": g, "delta": d} for g, d in report.added[: args.top]],
            "removed": [{"ngram": g, "delta": d} for g, d in report.removed[: args.top]],
        },
    )
    return EXIT_OK


def cmd_ground_text(args) -> int:
    corpus = _load(args.corpus)
    report = workbench.ground_text_analysis(corpus.records.values(), corpus)
    _write_json(
        args.out,
        {
            "shares": [
                {
                    "role": s.role.value,
                    "n_records": s.n_records,
                    "fc_chars": s.fc_chars,
                    "ngo_chars": s.ngo_chars,
                    "fc_share_pct": round(s.fc_share, 2),
                }
                for s in report.shares
            ],
            "exclusions": [{"item_id": e.record_id, "reason": e.reason} for e in report.exclusions],
        },
    )
    return EXIT_OK


def cmd_stats(args) -> int:
    responses_path = args.responses or args.corpus
    data = load_corpus(_require(responses_path, "--responses"), validate=False)
    strategy_of = {}
    if args.corpus:
        strategy_of = {r.id: r.strategy for r in _load(args.corpus, validate=False).records.values()}
    if not strategy_of:
        strategy_of = {r.id: r.strategy for r in data.records.values()}
    if args.survey == 1:
        prefs = [r for r in data.responses if r.kind is ResponseKind.PREFERENCE]
        payload = {
            "preference": _preference_json(stats.preference_table(prefs)),
            "agreement": _agreement_json(stats.agreement_by_dimension(prefs)),
        }
    else:
        ratings = [r for r in data.responses if r.kind is ResponseKind.RATING]
        excluded = stats.degenerate_respondents(ratings)
        kept = [r for r in ratings if r.respondent_id not in excluded]
        payload = {
            "ratings": _ratings_json(stats.rating_table(ratings, strategy_of)),
            "agreement_conflation": _conflation_json(stats.conflation_analysis(kept)),
            "excluded_respondents": sorted(excluded),
        }
    _write_json(args.out, payload)
    return EXIT_OK


def cmd_select_eval_pairs(args) -> int:
    corpus = _load(args.corpus)
    payload = select_eval_pairs(
        sorted(corpus.records.values(), key=lambda r: r.id),
        min_hter=args.min_hter,
        doubles_per_strategy=args.doubles_per_strategy,
    )
    _write_json(args.out, payload)
    return EXIT_OK


def _render_table(title: str, rows: list[dict]) -> str:
    if not rows:
        return f"== {title} ==\n  (empty)\n"
    cols = list(rows[0])
    widths = {
        c: max(len(c), *(len(str(r.get(c, ""))) for r in rows)) for c in cols
    }
    header = "  ".join(c.ljust(widths[c]) for c in cols)
    lines = [f"== {title} ==", header, "-" * len(header)]
    for r in rows:
        lines.append("  ".join(str(r.get(c, "")).ljust(widths[c]) for c in cols))
    return "\n".join(lines) + "\n"


def cmd_report(args) -> int:
    corpus = _load(args.corpus)
    records = list(corpus.records.values())
    parses = textmetrics.load_parse_dir(args.parses) if args.parses else None
    prefs = [r for r in corpus.responses if r.kind is ResponseKind.PREFERENCE]
    ratings = [r for r in corpus.responses if r.kind is ResponseKind.RATING]
    strategy_of = {r.id: r.strategy for r in records}
    excluded = stats.degenerate_respondents(ratings)
    kept_ratings = [r for r in ratings if r.respondent_id not in excluded]
    payload = {
        "edit_effort": _edit_effort_json(editmetrics.edit_effort_report(records)),
        "text_quality": _quality_json(
            textmetrics.quality_report(records, seed_base=args.seed, parses=parses)
        ),
        "preference": _preference_json(stats.preference_table(prefs)),
        "preference_agreement": _agreement_json(stats.agreement_by_dimension(prefs)),
        "ratings": _ratings_json(stats.rating_table(ratings, strategy_of)) if ratings else [],
        "rating_agreement_conflation": _conflation_json(stats.conflation_analysis(kept_ratings)),
        "seed": args.seed,
    }
    _write_json(args.out, payload)
    if args.pretty:
        for key in (
            "edit_effort",
            "text_quality",
            "preference",
            "preference_agreement",
            "ratings",
            "rating_agreement_conflation",
        ):
            print(_render_table(key.replace("_", " "), payload[key]))
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cskit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest-fc", help="retrieve and filter fact-checking articles")
    p.add_argument("--keywords-file")
    p.add_argument("--signatories-file")
    p.add_argument("--fixtures-dir")
    p.add_argument("--live", action="store_true")
    p.add_argument("--flags-file", help="JSON {article_id: selection flags} from manual review")
    p.add_argument("--limit", type=int, default=ingest.MAX_PAGE_SIZE)
    p.add_argument("--out", default="articles.jsonl")
    p.set_defaults(func=cmd_ingest_fc)

    p = sub.add_parser("ingest-ngo", help="load myth/anti-stereotype reports")
    p.add_argument("reports", nargs="+", help="report JSON files or one directory")
    p.add_argument("--allowlist", help="file with one allowed domain per line")
    p.add_argument("--out", default="ngo_reports.jsonl")
    p.set_defaults(func=cmd_ingest_ngo)

    p = sub.add_parser("match", help="match claims to myths and build knowledge bundles")
    p.add_argument("--corpus", required=True)
    p.add_argument("--threshold", type=float, default=matcher.DEFAULT_SIMILARITY_THRESHOLD)
    p.add_argument("--provider", default="stub:")
    p.add_argument("--model-id", default=matcher.DEFAULT_MODEL_ID)
    p.add_argument("--stub-table")
    p.add_argument("--review-file", help="JSON list of rejected [claim_id, report_id, pair_index]")
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("generate", help="generate counterspeech for bundled claims")
    p.add_argument("--corpus", required=True)
    p.add_argument("--strategy", choices=["fc", "ngo", "mix", "all"], default="all")
    p.add_argument("--provider", default="stub:")
    p.add_argument("--model-id", default=genstrat.DEFAULT_MODEL_ID)
    p.add_argument("--max-tokens", type=int, default=genstrat.DEFAULT_MAX_TOKENS)
    p.add_argument("--temperature", type=float, default=genstrat.DEFAULT_TEMPERATURE)
    p.add_argument("--concurrency", type=int, default=4)
    p.add_argument("--api-key-env", default="LLM_API_KEY")
    p.add_argument("--audit")
    p.add_argument("--resume", action="store_true", default=True,
                   help="skip existing (claim, strategy) records (always on)")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("workbench", help="serve the post-editing workbench")
    p.add_argument("serve", nargs="?", default="serve")
    p.add_argument("--corpus", required=True)
    p.add_argument("--annotators", required=True)
    p.add_argument("--wal")
    p.add_argument("--mix-quota", help="e.g. FC=32,NGO=76")
    p.add_argument("--lease-seconds", type=float, default=workbench.DEFAULT_LEASE_SECONDS)
    p.add_argument("--token")
    p.add_argument("--static", help="directory with the built web UI")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8030)
    p.set_defaults(func=cmd_workbench)

    p = sub.add_parser("analyze-edits", help="post-editing effort per strategy and role")
    p.add_argument("--corpus", required=True)
    p.add_argument("--group-by", default="strategy,role")
    p.add_argument("--out")
    p.set_defaults(func=cmd_analyze_edits)

    p = sub.add_parser("analyze-text", help="repetitiveness, readability, syntax")
    p.add_argument("--corpus", required=True)
    p.add_argument("--parses", help="directory of <record_id>.<gen|ed>.conllu files")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_analyze_text)

    p = sub.add_parser("lexdiff", help="n-grams most added/removed by post-editing")
    p.add_argument("--corpus", required=True)
    p.add_argument("--n", type=int, default=1, choices=[1, 2, 3])
    p.add_argument("--stopword-free", action="store_true")
    p.add_argument("--top", type=int, default=25)
    p.add_argument("--out")
    p.set_defaults(func=cmd_lexdiff)

    p = sub.add_parser("ground-text", help="provenance shares of annotated ground text")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_ground_text)

    p = sub.add_parser("stats", help="survey statistics")
    p.add_argument("--survey", type=int, choices=[1, 2], required=True)
    p.add_argument("--responses")
    p.add_argument("--corpus")
    p.add_argument("--out")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("select-eval-pairs", help="pick heavily-edited pairs for evaluation")
    p.add_argument("--corpus", required=True)
    p.add_argument("--min-hter", type=float, default=DEFAULT_EVAL_MIN_HTER)
    p.add_argument("--doubles-per-strategy", type=int, default=DEFAULT_DOUBLES_PER_STRATEGY)
    p.add_argument("--out")
    p.set_defaults(func=cmd_select_eval_pairs)

    p = sub.add_parser("report", help="render every analysis table from the corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--parses")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.add_argument("--pretty", action="store_true", help="also print aligned text tables")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except CorpusError as e:
        print(f"data violation: {e}", file=sys.stderr)
        return EXIT_DATA
    except (matcher.ProviderError, genstrat.LLMProviderError, ingest.TransportError, ingest.ProviderPayloadError) as e:
        print(f"provider failure: {e}", file=sys.stderr)
        return EXIT_PROVIDER


if __name__ == "__main__":
    sys.exit(main())
