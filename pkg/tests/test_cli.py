import json

import pytest

from conftest import build_replay_corpus, make_article, make_report
from cskit import cli
from cskit.corpus import (
    Claim,
    Corpus,
    ResponseKind,
    Strategy,
    SurveyResponse,
    TargetGroup,
    load_corpus,
    save_corpus,
)
from cskit.editmetrics import edit_effort_report


@pytest.fixture
def replay_path(tmp_path, replay_corpus):
    path = tmp_path / "replay.jsonl"
    save_corpus(replay_corpus, path)
    return path


def run(*args) -> int:
    return cli.main([str(a) for a in args])


class TestSelectEvalPairs:
    def test_split_and_doubles(self, replay_path, tmp_path):
        out = tmp_path / "sel.json"
        assert run("select-eval-pairs", "--corpus", replay_path, "--min-hter", "0.39", "--out", out) == 0
        payload = json.loads(out.read_text())
        assert payload["by_strategy"] == {"FC": 20, "MIX": 20, "NGO": 24}
        assert payload["n_pairs"] == 64
        assert len(payload["double_annotation"]) == 21
        assert payload["n_evaluation_slots"] == 85

    def test_higher_threshold_empty(self, replay_path, tmp_path):
        out = tmp_path / "sel.json"
        assert run("select-eval-pairs", "--corpus", replay_path, "--min-hter", "0.95", "--out", out) == 0
        assert json.loads(out.read_text())["n_pairs"] == 0


class TestReport:
    def test_empty_corpus_exits_zero(self, tmp_path):
        corpus_path = tmp_path / "empty.jsonl"
        save_corpus(Corpus(), corpus_path)
        out = tmp_path / "report.json"
        assert run("report", "--corpus", corpus_path, "--out", out) == 0
        payload = json.loads(out.read_text())
        assert payload["edit_effort"] == []
        assert payload["text_quality"] == []
        assert payload["preference"] == []

    def test_report_contains_all_tables(self, replay_path, tmp_path):
        out = tmp_path / "report.json"
        assert run("report", "--corpus", replay_path, "--out", out) == 0
        payload = json.loads(out.read_text())
        assert {
            "edit_effort",
            "text_quality",
            "preference",
            "preference_agreement",
            "ratings",
            "rating_agreement_conflation",
            "seed",
        } <= set(payload)
        ns = {(r["config"], r["role"]): r["n"] for r in payload["edit_effort"]}
        assert ns == {("FC", "FC"): 108, ("NGO", "NGO"): 108, ("MIX", "FC"): 32, ("MIX", "NGO"): 76}


class TestAnalyze:
    def test_analyze_edits_passthrough(self, replay_path, tmp_path, replay_corpus):
        out = tmp_path / "edits.json"
        assert run("analyze-edits", "--corpus", replay_path, "--out", out) == 0
        payload = json.loads(out.read_text())
        direct = edit_effort_report(replay_corpus.records.values())
        assert [row["hter"] for row in payload] == [round(r.hter, 3) for r in direct]

    def test_lexdiff(self, replay_path, tmp_path):
        out = tmp_path / "lex.json"
        assert run("lexdiff", "--corpus", replay_path, "--n", "1", "--out", out) == 0
        payload = json.loads(out.read_text())
        assert payload["n_order"] == 1
        assert payload["added"]  # the synthetic edits append "x" to words

    def test_analyze_text_with_parses(self, replay_path, tmp_path):
        parses = tmp_path / "parses"
        parses.mkdir()
        conllu = "1\tw\t_\t_\t_\t_\t0\troot\t_\t_\n\n1\ta\t_\t_\t_\t_\t0\troot\t_\t_\n2\tb\t_\t_\t_\t_\t1\tdep\t_\t_\n"
        corpus = build_replay_corpus(n_claims=2)
        small = tmp_path / "small.jsonl"
        save_corpus(corpus, small)
        for rec_id in corpus.records:
            (parses / f"{rec_id}.gen.conllu").write_text(conllu, encoding="utf-8")
            (parses / f"{rec_id}.ed.conllu").write_text(conllu, encoding="utf-8")
        out = tmp_path / "text.json"
        assert run("analyze-text", "--corpus", small, "--parses", parses, "--out", out) == 0
        payload = json.loads(out.read_text())
        assert all(row["nst"] == 2.0 for row in payload)
        assert all(row["msd"] == 2.0 and row["asd"] == 1.5 for row in payload)

    def test_ground_text(self, replay_path, tmp_path):
        out = tmp_path / "ground.json"
        assert run("ground-text", "--corpus", replay_path, "--out", out) == 0
        payload = json.loads(out.read_text())
        assert "shares" in payload and "exclusions" in payload


class TestStatsCommand:
    def test_survey1(self, tmp_path, replay_corpus):
        responses = []
        for dim, gen_n, ed_n in (("Guidelines", 31, 68), ("Exhaustiveness", 35, 64), ("Naturalness", 36, 63)):
            items = sorted(replay_corpus.records)[: gen_n + ed_n]
            for i, item in enumerate(items):
                value = "GEN" if i < gen_n else "ED"
                responses.append(SurveyResponse(f"p{i % 7}", item, ResponseKind.PREFERENCE, dim, value))
        corpus = replay_corpus.with_responses(responses)
        path = tmp_path / "c.jsonl"
        save_corpus(corpus, path)
        out = tmp_path / "survey1.json"
        assert run("stats", "--survey", "1", "--responses", path, "--out", out) == 0
        payload = json.loads(out.read_text())
        stars = {row["dimension"]: row["star"] for row in payload["preference"]}
        assert stars == {"Guidelines": "**", "Exhaustiveness": "*", "Naturalness": "*"}

    def test_survey2(self, tmp_path, replay_corpus):
        values = ["NoAttempt", "VeryPoor", "Poor", "Good", "VeryGood"]
        responses = []
        for k, item in enumerate(sorted(replay_corpus.records)[:60]):
            for dim in ("FACT", "STER"):
                responses.append(
                    SurveyResponse(f"r{k % 5}", item, ResponseKind.RATING, dim, values[(k + len(dim)) % 5])
                )
        corpus = replay_corpus.with_responses(responses)
        path = tmp_path / "c2.jsonl"
        save_corpus(corpus, path)
        out = tmp_path / "survey2.json"
        assert run("stats", "--survey", "2", "--responses", path, "--out", out) == 0
        payload = json.loads(out.read_text())
        assert {row["config"] for row in payload["ratings"]} <= {"FC", "NGO", "MIX"}


class TestExitCodes:
    def test_missing_corpus_is_config_error(self, tmp_path):
        assert run("analyze-edits", "--corpus", tmp_path / "nope.jsonl") == 2

    def test_invalid_corpus_is_data_error(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        save_corpus(
            Corpus(claims={"c1": Claim("c1", "text", TargetGroup.WOMEN, "missing")}),
            path,
            validate=False,
        )
        assert run("analyze-edits", "--corpus", path) == 3

    def test_provider_failure_exit_code(self, tmp_path):
        corpus = Corpus(
            claims={"c1": Claim("c1", "text", TargetGroup.WOMEN, "a000")},
            articles={"a000": make_article(0)},
            reports={"r000": make_report(0, TargetGroup.WOMEN)},
        )
        path = tmp_path / "c.jsonl"
        save_corpus(corpus, path)
        # http provider pointed at an unroutable address -> provider failure
        rc = run("match", "--corpus", path, "--provider", "http://127.0.0.1:1")
        assert rc == 4


class TestPipeline:
    def test_match_generate_report(self, tmp_path, small_corpus):
        path = tmp_path / "pipe.jsonl"
        save_corpus(small_corpus, path)
        assert run("match", "--corpus", path, "--provider", "stub:") == 0
        assert run("generate", "--corpus", path, "--provider", "stub:", "--strategy", "all") == 0
        loaded = load_corpus(path, validate=False)
        assert len(loaded.records) == 3 * len(loaded.bundles)
        audit = path.with_suffix(".audit.jsonl")
        assert audit.exists() and len(audit.read_text().splitlines()) == len(loaded.records)
        # idempotent rerun adds nothing
        assert run("generate", "--corpus", path, "--provider", "stub:", "--strategy", "all") == 0
        assert len(load_corpus(path, validate=False).records) == len(loaded.records)
        out = tmp_path / "rep.json"
        assert run("report", "--corpus", path, "--out", out) == 0

    def test_ingest_fc_from_fixtures(self, tmp_path):
        from cskit import ingest
        from test_ingest import ARTICLE_HTML, DictFetcher, search_payload

        api = "https://factchecktools.googleapis.com/v1alpha1/claims:search"
        signatory_url = "https://good.example/article"
        other_url = "https://shady.example/article"
        live = DictFetcher(
            pages={"muslim": search_payload([(signatory_url, "good.example"), (other_url, "shady.example")])},
            html={
                signatory_url: ingest.Response(200, ARTICLE_HTML),
                other_url: ingest.Response(200, ARTICLE_HTML),
            },
        )
        fixtures = tmp_path / "fixtures"
        fixtures.mkdir()
        recorder = ingest.FixtureTransport(fixtures, record_with=live)
        recorder(api, {"query": "muslim", "languageCode": "en", "pageSize": 50})
        recorder(signatory_url, {})
        recorder(other_url, {})

        keywords = tmp_path / "keywords.json"
        keywords.write_text(json.dumps({"Muslims": ["muslim"]}), encoding="utf-8")
        signatories = tmp_path / "signatories.txt"
        signatories.write_text("good.example\n", encoding="utf-8")
        flags = tmp_path / "flags.json"
        flags.write_text(
            json.dumps({signatory_url: {"group_focused": True, "counters_false_claim": True}}),
            encoding="utf-8",
        )
        out = tmp_path / "articles.jsonl"
        rc = run(
            "ingest-fc",
            "--keywords-file", keywords,
            "--fixtures-dir", fixtures,
            "--signatories-file", signatories,
            "--flags-file", flags,
            "--limit", "50",
            "--out", out,
        )
        assert rc == 0
        loaded = load_corpus(out)
        (article,) = loaded.articles.values()
        assert article.url == signatory_url
        assert article.is_signatory
        assert article.matched_keywords == ("muslim",)
        assert article.selection.group_focused

    def test_ingest_ngo(self, tmp_path):
        report_file = tmp_path / "rep.json"
        report_file.write_text(
            json.dumps(
                {
                    "id": "npc",
                    "source_url": "https://www.learningforjustice.org/x",
                    "target_group": "migrants",
                    "pairs": [{"myth": "m", "anti_stereotype": "a"}],
                }
            ),
            encoding="utf-8",
        )
        out = tmp_path / "ngo.jsonl"
        assert run("ingest-ngo", report_file, "--out", out) == 0
        assert len(load_corpus(out).reports) == 1

    def test_unknown_strategy_flag_rejected(self, replay_path):
        with pytest.raises(SystemExit):
            run("generate", "--corpus", replay_path, "--strategy", "bogus")
