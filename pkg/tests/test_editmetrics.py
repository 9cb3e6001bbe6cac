import random

import pytest

from cskit.corpus import AnnotatorRole, CSRecord, Strategy
from cskit.editmetrics import (
    EmptyReferenceError,
    edit_effort_report,
    hter_pair,
    lexdiff,
    tokenize,
)
from hter_fixture import PAIRS


def _rec(i, strategy, role, gen, ed):
    return CSRecord(
        id=f"x{i}",
        claim_id=f"c{i}",
        strategy=strategy,
        generated_text=gen,
        edited_text=ed,
        annotator_role=role,
    )


class TestTokenize:
    def test_punctuation_split(self):
        assert tokenize("Hello, world!").tokens == ("hello", ",", "world", "!")

    def test_empty(self):
        assert tokenize("").tokens == ()

    def test_apostrophe(self):
        assert tokenize("it's").tokens == ("it", "'", "s")

    def test_unicode_whitespace(self):
        assert tokenize("a b c").tokens == ("a", "b", "c")

    def test_reproducible_from_source(self):
        ts = tokenize("Some TEXT, here.")
        assert tokenize(ts.source_text) == ts


class TestHterPair:
    def test_unmodified(self):
        assert hter_pair("same text here", "same text here") == 0.0

    def test_two_insertions(self):
        gen = " ".join(f"w{i}" for i in range(10))
        ed = gen + " extra words"
        assert hter_pair(gen, ed) == pytest.approx(2 / 12)

    def test_empty_edited_rejected(self):
        with pytest.raises(EmptyReferenceError):
            hter_pair("something", "   ")

    def test_hand_computed_fixture(self):
        for gen, ed, expected in PAIRS:
            assert hter_pair(gen, ed) == pytest.approx(expected, abs=1e-12), (gen, ed)


class TestEditEffortReport:
    def test_all_unmodified(self):
        recs = [
            _rec(i, Strategy.FC, AnnotatorRole.FC, "the same text", "the same text")
            for i in range(4)
        ]
        (report,) = edit_effort_report(recs)
        assert report.n == 4
        assert report.p_mod == 0.0
        assert report.hter == 0.0
        assert report.hter_m is None

    def test_half_modified_means(self):
        # pair one untouched, pair two has 4 of 10 words replaced -> 0.4
        gen = " ".join(f"w{i}" for i in range(10))
        ed = "a b c d " + " ".join(f"w{i}" for i in range(4, 10))
        recs = [
            _rec(0, Strategy.NGO, AnnotatorRole.NGO, gen, gen),
            _rec(1, Strategy.NGO, AnnotatorRole.NGO, gen, ed),
        ]
        (report,) = edit_effort_report(recs)
        assert report.p_mod == pytest.approx(50.0)
        assert report.hter == pytest.approx(0.2)
        assert report.hter_m == pytest.approx(0.4)

    def test_grouping_and_reorder_invariance(self):
        recs = [
            _rec(0, Strategy.FC, AnnotatorRole.FC, "a b c", "a b d"),
            _rec(1, Strategy.MIX, AnnotatorRole.FC, "a b c", "a b c"),
            _rec(2, Strategy.MIX, AnnotatorRole.NGO, "a b c", "x y z"),
        ]
        forward = edit_effort_report(recs)
        backward = edit_effort_report(list(reversed(recs)))
        assert forward == backward
        keys = [(r.config, r.role) for r in forward]
        assert keys == [
            (Strategy.FC, AnnotatorRole.FC),
            (Strategy.MIX, AnnotatorRole.FC),
            (Strategy.MIX, AnnotatorRole.NGO),
        ]

    def test_unedited_records_skipped(self):
        recs = [
            CSRecord(id="g", claim_id="c", strategy=Strategy.FC, generated_text="a b"),
            _rec(1, Strategy.FC, AnnotatorRole.FC, "a b", "a b"),
        ]
        (report,) = edit_effort_report(recs)
        assert report.n == 1

    def test_replay_shape(self, replay_corpus):
        reports = {(r.config, r.role): r for r in edit_effort_report(replay_corpus.records.values())}
        assert reports[(Strategy.FC, AnnotatorRole.FC)].n == 108
        assert reports[(Strategy.NGO, AnnotatorRole.NGO)].n == 108
        assert reports[(Strategy.MIX, AnnotatorRole.FC)].n == 32
        assert reports[(Strategy.MIX, AnnotatorRole.NGO)].n == 76
        assert reports[(Strategy.FC, AnnotatorRole.FC)].p_mod == pytest.approx(100 * 49 / 108)
        assert reports[(Strategy.NGO, AnnotatorRole.NGO)].p_mod == pytest.approx(100 * 79 / 108)


class TestLexdiff:
    def test_no_changes(self):
        recs = [_rec(0, Strategy.FC, AnnotatorRole.FC, "a claim here", "a claim here")]
        report = lexdiff(recs, 1)
        assert report.added == [] and report.removed == []

    def test_hand_counts(self):
        recs = [_rec(0, Strategy.FC, AnnotatorRole.FC, "the claim is false", "this is wrong")]
        report = lexdiff(recs, 1)
        assert report.removed == [("claim", 1), ("false", 1), ("the", 1)]
        assert report.added == [("this", 1), ("wrong", 1)]

    def test_ranking_by_delta_then_alpha(self):
        recs = [
            _rec(0, Strategy.FC, AnnotatorRole.FC, "b b b a a c", "z z z y y x"),
        ]
        report = lexdiff(recs, 1)
        assert report.removed == [("b", 3), ("a", 2), ("c", 1)]
        assert report.added == [("z", 3), ("y", 2), ("x", 1)]

    def test_bigrams(self):
        recs = [_rec(0, Strategy.NGO, AnnotatorRole.NGO, "it is important to recognize", "we should note")]
        report = lexdiff(recs, 2)
        assert ("important to", 1) in report.removed
        assert ("we should", 1) in report.added

    def test_stopword_free(self):
        recs = [_rec(0, Strategy.FC, AnnotatorRole.FC, "the claim is false", "the claim is wrong")]
        report = lexdiff(recs, 1, drop_stopwords=True)
        assert report.removed == [("false", 1)]
        assert report.added == [("wrong", 1)]

    def test_punctuation_excluded(self):
        recs = [_rec(0, Strategy.FC, AnnotatorRole.FC, "done.", "done!")]
        report = lexdiff(recs, 1)
        assert report.added == [] and report.removed == []

    def test_bad_order_rejected(self):
        with pytest.raises(ValueError):
            lexdiff([], 4)
