import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from caploop.document import (
    CaptionDocument,
    Conflict,
    CorrectionEvent,
    Delta,
    HighlightKind,
    Span,
    apply_delta,
)


def correction(eid, start, end, original, replacement, base_version, kind=HighlightKind.CORRECTED):
    return CorrectionEvent(
        id=eid,
        span=Span(start, end),
        original=tuple(original),
        replacement=tuple(replacement),
        kind=kind,
        author="h1",
        base_version=base_version,
    )


def flag(eid, start, end, original, base_version):
    return correction(eid, start, end, original, (), base_version, kind=HighlightKind.UNCERTAIN)


class TestAppend:
    def test_first_append(self):
        doc = CaptionDocument()
        delta = doc.append_segment(["hello", "world"])
        assert doc.version == 1
        assert doc.texts() == ["hello", "world"]
        assert delta == Delta(1, 0, 0, ("hello", "world"), "asr")

    def test_delta_starts_at_previous_length(self):
        doc = CaptionDocument()
        doc.append_segment(["a"])
        doc.append_segment(["b"])
        doc.append_segment(["c"])
        delta = doc.append_segment(["ok"])
        assert doc.version == 4
        assert delta.start == 3

    def test_empty_rejected(self):
        doc = CaptionDocument()
        doc.append_segment(["a"])
        with pytest.raises(ValueError):
            doc.append_segment([])
        assert doc.version == 1

    def test_whitespace_word_rejected(self):
        doc = CaptionDocument()
        with pytest.raises(ValueError):
            doc.append_segment(["two words"])

    def test_lengths_add_up_and_history_untouched(self):
        rng = random.Random(7)
        doc = CaptionDocument()
        total = 0
        for _ in range(10):
            k = rng.randint(1, 5)
            doc.append_segment([f"w{rng.randint(0, 99)}" for _ in range(k)])
            total += k
        assert len(doc.tokens) == total
        assert doc.history == []


class TestApplyCorrection:
    def test_word_replacement_and_highlight(self):
        doc = CaptionDocument()
        doc.append_segment(["she", "picked", "up", "the", "fok"])
        ev = correction("c1", 4, 5, ["fok"], ["fork"], base_version=1)
        delta = doc.apply_correction(ev)
        assert isinstance(delta, Delta)
        assert doc.texts() == ["she", "picked", "up", "the", "fork"]
        assert doc.render()[4] == ("fork", HighlightKind.CORRECTED)
        assert doc.tokens[4].origin == "corrected"
        assert doc.version == 2

    def test_uncertain_flag_keeps_tokens(self):
        doc = CaptionDocument()
        doc.append_segment(["maybe", "this"])
        before = doc.texts()
        delta = doc.apply_correction(flag("f1", 0, 1, ["maybe"], base_version=1))
        assert isinstance(delta, Delta)
        assert doc.texts() == before
        assert doc.version == 2
        assert doc.render()[0] == ("maybe", HighlightKind.UNCERTAIN)

    def test_concurrent_same_span_single_winner(self):
        # serialize both orders; exactly one applies either way
        for order in ([0, 1], [1, 0]):
            doc = CaptionDocument()
            doc.append_segment(["a", "b", "c"])
            events = [
                correction("c1", 1, 2, ["b"], ["x"], base_version=1),
                correction("c2", 1, 2, ["b"], ["y"], base_version=1),
            ]
            first = doc.apply_correction(events[order[0]])
            second = doc.apply_correction(events[order[1]])
            assert isinstance(first, Delta)
            assert isinstance(second, Conflict)
            assert second.reason == "stale_span"
            assert doc.version == 2

    def test_rebase_applies_when_span_untouched(self):
        doc = CaptionDocument()
        doc.append_segment(["a", "b", "c", "d"])
        doc.apply_correction(correction("c1", 0, 1, ["a"], ["aa"], base_version=1))
        # made against v1, but tokens under [2,3) are untouched
        stale = correction("c2", 2, 3, ["c"], ["cc"], base_version=1)
        delta = doc.apply_correction(stale)
        assert isinstance(delta, Delta)
        assert doc.texts() == ["aa", "b", "cc", "d"]

    def test_rebase_shifts_after_length_change(self):
        doc = CaptionDocument()
        doc.append_segment(["a", "b", "c"])
        doc.apply_correction(correction("c1", 0, 1, ["a"], ["a1", "a2"], base_version=1))
        stale = correction("c2", 2, 3, ["c"], ["cc"], base_version=1)
        delta = doc.apply_correction(stale)
        assert isinstance(delta, Delta)
        assert delta.start == 3  # shifted by the earlier 1->2 replacement
        assert doc.texts() == ["a1", "a2", "b", "cc"]

    def test_original_mismatch_conflicts(self):
        doc = CaptionDocument()
        doc.append_segment(["a", "b"])
        res = doc.apply_correction(correction("c1", 0, 1, ["zz"], ["x"], base_version=1))
        assert isinstance(res, Conflict)
        assert res.reason == "original_mismatch"
        assert doc.version == 1

    def test_invalid_span_rejected(self):
        doc = CaptionDocument()
        doc.append_segment(["a"])
        with pytest.raises(ValueError):
            doc.apply_correction(correction("c1", 0, 5, ["a"], ["x"], base_version=1))
        with pytest.raises(ValueError):
            doc.apply_correction(correction("c2", 0, 1, ["a"], ["x"], base_version=9))

    def test_rejections_leave_state_identical(self):
        doc = CaptionDocument()
        doc.append_segment(["a", "b"])
        doc.apply_correction(correction("c0", 0, 1, ["a"], ["x"], base_version=1))
        fp = doc.fingerprint()
        doc.apply_correction(correction("c1", 0, 1, ["wrong"], ["y"], base_version=2))
        with pytest.raises(ValueError):
            doc.apply_correction(correction("c2", 0, 9, ["x", "b"], ["y"], base_version=2))
        assert doc.fingerprint() == fp

    def test_replacement_may_change_length(self):
        doc = CaptionDocument()
        doc.append_segment(["ann", "harbor", "is", "nice"])
        ev = correction("c1", 0, 2, ["ann", "harbor"], ["ann", "arbor", "michigan"], base_version=1)
        doc.apply_correction(ev)
        assert doc.texts() == ["ann", "arbor", "michigan", "is", "nice"]
        assert [t.index for t in doc.tokens] == [0, 1, 2, 3, 4]

    def test_event_kind_invariants(self):
        with pytest.raises(ValueError):
            correction("c1", 0, 1, ["a"], [], base_version=1)  # corrected needs replacement
        with pytest.raises(ValueError):
            flag("f1", 0, 1, ["a"], 1).__class__(  # uncertain must not replace
                id="f2", span=Span(0, 1), original=("a",), replacement=("b",),
                kind=HighlightKind.UNCERTAIN, author="h1", base_version=1,
            )


class TestCollectCorrections:
    def test_empty(self):
        doc = CaptionDocument()
        doc.append_segment(["a"])
        assert doc.collect_corrections(0) == []

    def test_filters_uncertain(self):
        doc = CaptionDocument()
        doc.append_segment(["a", "b", "c", "d", "e"])
        for i, eid in enumerate(["c1", "c2", "c3"]):
            doc.apply_correction(correction(eid, i, i + 1, [doc.texts()[i]], [f"x{i}"], base_version=doc.version))
        doc.apply_correction(flag("f1", 3, 4, ["d"], base_version=doc.version))
        doc.apply_correction(flag("f2", 4, 5, ["e"], base_version=doc.version))
        got = doc.collect_corrections(0)
        assert [e.id for e in got] == ["c1", "c2", "c3"]

    def test_since_version_cut(self):
        doc = CaptionDocument()
        doc.append_segment(["a", "b", "c"])
        versions = []
        for i, eid in enumerate(["c1", "c2", "c3"]):
            doc.apply_correction(correction(eid, i, i + 1, [doc.texts()[i]], [f"x{i}"], base_version=doc.version))
            versions.append(doc.version)
        got = doc.collect_corrections(versions[1])
        assert [e.id for e in got] == ["c3"]

    def test_ahead_rejected(self):
        doc = CaptionDocument()
        doc.append_segment(["a"])
        with pytest.raises(ValueError):
            doc.collect_corrections(5)

    def test_count_matches_accepted(self):
        doc = CaptionDocument()
        doc.append_segment(["a", "b"])
        doc.apply_correction(correction("c1", 0, 1, ["a"], ["x"], base_version=1))
        doc.apply_correction(correction("dup", 0, 1, ["a"], ["y"], base_version=1))  # conflicts
        assert len(doc.collect_corrections(0)) == 1


class TestRender:
    def test_empty(self):
        assert CaptionDocument().render() == []

    def test_unmarked_tokens_are_plain(self):
        doc = CaptionDocument()
        doc.append_segment(["a", "b", "c"])
        doc.apply_correction(correction("c1", 1, 2, ["b"], ["x"], base_version=1))
        rendered = doc.render()
        assert rendered[0] == ("a", None)
        assert rendered[1] == ("x", HighlightKind.CORRECTED)
        assert rendered[2] == ("c", None)

    def test_latest_mark_wins(self):
        doc = CaptionDocument()
        doc.append_segment(["a", "b"])
        doc.apply_correction(flag("f1", 0, 2, ["a", "b"], base_version=1))
        doc.apply_correction(correction("c1", 0, 1, ["a"], ["x"], base_version=2))
        rendered = doc.render()
        assert rendered[0] == ("x", HighlightKind.CORRECTED)
        assert rendered[1] == ("b", HighlightKind.UNCERTAIN)


words_st = st.lists(st.sampled_from(["alpha", "beta", "gamma", "delta"]), min_size=1, max_size=4)


@st.composite
def edit_scripts(draw):
    """A random list of (op, payload) operations to drive a document."""
    n = draw(st.integers(min_value=1, max_value=12))
    return [draw(st.integers(min_value=0, max_value=2)) for _ in range(n)], draw(st.randoms(use_true_random=False))


class TestReplayProperty:
    @given(edit_scripts())
    @settings(max_examples=120)
    def test_replay_reproduces_state(self, script):
        ops, rng = script
        doc = CaptionDocument()
        counter = 0
        for op in ops:
            if op == 0 or not doc.tokens:
                doc.append_segment([f"w{rng.randint(0, 9)}" for _ in range(rng.randint(1, 4))])
                continue
            i = rng.randrange(len(doc.tokens))
            j = min(len(doc.tokens), i + rng.randint(1, 2))
            counter += 1
            if op == 1:
                ev = correction(
                    f"c{counter}", i, j, doc.texts()[i:j],
                    [f"r{rng.randint(0, 9)}" for _ in range(rng.randint(1, 3))],
                    base_version=doc.version,
                )
            else:
                ev = flag(f"f{counter}", i, j, doc.texts()[i:j], base_version=doc.version)
            res = doc.apply_correction(ev)
            assert isinstance(res, Delta)
        replayed = CaptionDocument.replay(doc.mutations)
        assert replayed.fingerprint() == doc.fingerprint()

    @given(edit_scripts())
    @settings(max_examples=60)
    def test_version_counts_mutations(self, script):
        ops, rng = script
        doc = CaptionDocument()
        accepted = 0
        for op in ops:
            if op == 0 or not doc.tokens:
                doc.append_segment([f"w{rng.randint(0, 9)}"])
                accepted += 1
            else:
                i = rng.randrange(len(doc.tokens))
                ev = correction(f"c{accepted}", i, i + 1, doc.texts()[i : i + 1], ["z"], base_version=doc.version)
                if isinstance(doc.apply_correction(ev), Delta):
                    accepted += 1
        assert doc.version == accepted

    def test_accepted_correction_tokens_match_replacement(self):
        doc = CaptionDocument()
        doc.append_segment(["a", "b", "c"])
        ev = correction("c1", 1, 3, ["b", "c"], ["p", "q", "r"], base_version=1)
        delta = doc.apply_correction(ev)
        assert tuple(doc.texts()[delta.start : delta.start + len(ev.replacement)]) == ev.replacement


class TestApplyDelta:
    def test_client_mirror_tracks_document(self):
        doc = CaptionDocument()
        tokens: list[tuple[str, str]] = []
        highlights: list[tuple[int, int, str]] = []
        deltas = [doc.append_segment(["a", "b", "c", "d"])]
        deltas.append(doc.apply_correction(correction("c1", 1, 2, ["b"], ["x", "y"], base_version=1)))
        deltas.append(doc.apply_correction(flag("f1", 0, 1, ["a"], base_version=2)))
        deltas.append(doc.apply_correction(correction("c2", 4, 5, ["d"], ["dd"], base_version=3)))
        for d in deltas:
            tokens, highlights = apply_delta(tokens, highlights, d)
        assert [t for t, _ in tokens] == doc.texts()
        assert [(s, e, k) for s, e, k in highlights] == [
            (s.start, s.end, k.value) for s, k in doc.highlights
        ]
