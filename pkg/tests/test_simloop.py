import random
import statistics

import pytest

from caploop.document import HighlightKind
from caploop.simloop import (
    DEFAULT_VOCAB,
    SimConfig,
    build_confusion,
    corrupt_word,
    make_scripts,
    run_simulation,
    simulated_corrector,
)


SMALL_VOCAB = DEFAULT_VOCAB[:60]


def small_config(**kw):
    # scripts over a reduced vocabulary so every word still appears in every
    # script, mirroring the coverage property of the default generator
    scripts = make_scripts(
        random.Random(kw.pop("script_seed", 11)),
        kw.pop("sessions", 3),
        kw.pop("words_per_script", 120),
        vocab=SMALL_VOCAB,
    )
    defaults = dict(scripts=scripts, confused_word_count=10, workdir=None)
    defaults.update(kw)
    return SimConfig(**defaults)


class TestScriptGeneration:
    def test_every_vocab_word_covered(self):
        rng = random.Random(0)
        scripts = make_scripts(rng, 2, 600)
        for script in scripts:
            assert set(DEFAULT_VOCAB) <= set(script)
            assert len(script) == 600

    def test_corrupt_word_leaves_vocabulary(self):
        rng = random.Random(1)
        vocab = frozenset(DEFAULT_VOCAB)
        for word in list(DEFAULT_VOCAB)[:50]:
            bad = corrupt_word(word, rng, vocab)
            assert bad != word
            assert bad not in vocab
            assert bad == bad.lower() and " " not in bad

    def test_build_confusion_size_and_determinism(self):
        vocab = sorted(DEFAULT_VOCAB)
        a = build_confusion(random.Random("x"), vocab, 25)
        b = build_confusion(random.Random("x"), vocab, 25)
        assert a == b
        assert len(a) == 25

    def test_confusion_count_capped(self):
        with pytest.raises(ValueError):
            build_confusion(random.Random(0), ["one", "two"], 3)


class TestSimulatedCorrector:
    def test_full_recall_single_substitution(self):
        events = simulated_corrector(["a", "b", "c"], ["a", "x", "c"], 1.0, random.Random(0))
        assert len(events) == 1
        ev = events[0]
        assert ev.span.start == 1 and ev.span.end == 2
        assert ev.original == ("x",)
        assert ev.replacement == ("b",)
        assert ev.kind == HighlightKind.CORRECTED

    def test_identical_no_corrections(self):
        assert simulated_corrector(["a", "b"], ["a", "b"], 1.0, random.Random(0)) == []

    def test_seeded_recall_reproducible_and_binomial(self):
        ref = [f"w{i}" for i in range(100)]
        hyp = [f"x{i}" for i in range(100)]  # 100 substitutions
        first = simulated_corrector(ref, hyp, 0.5, random.Random(7))
        second = simulated_corrector(ref, hyp, 0.5, random.Random(7))
        assert [e.id for e in first] == [e.id for e in second]
        counts = [
            len(simulated_corrector(ref, hyp, 0.5, random.Random(seed))) for seed in range(30)
        ]
        assert abs(statistics.fmean(counts) - 50) <= 10

    def test_zero_recall_emits_nothing(self):
        ref = [f"w{i}" for i in range(50)]
        hyp = [f"x{i}" for i in range(50)]
        assert simulated_corrector(ref, hyp, 0.0, random.Random(1)) == []


class TestRunSimulation:
    def test_full_recall_reaches_zero(self, tmp_path):
        traj = run_simulation(small_config(corrector_recall=1.0, workdir=str(tmp_path)))
        wers = [s.wer for s in traj.per_session]
        assert all(b <= a + 1e-12 for a, b in zip(wers, wers[1:]))
        assert wers[-1] == 0.0
        assert traj.remaining_confusions == 0

    def test_zero_recall_static(self, tmp_path):
        traj = run_simulation(small_config(corrector_recall=0.0, workdir=str(tmp_path)))
        wers = [s.wer for s in traj.per_session]
        assert wers == traj.baseline_static
        assert all(s.corrections == 0 for s in traj.per_session)
        assert all(s.recordings == 0 for s in traj.per_session)

    def test_no_confusions_all_zero(self, tmp_path):
        traj = run_simulation(small_config(confused_word_count=0, workdir=str(tmp_path)))
        assert all(s.wer == 0.0 for s in traj.per_session)
        assert traj.baseline_static == [0.0] * 3
        assert traj.baseline_generic == [0.0] * 3
        assert traj.baseline_one_round == 0.0

    def test_reproducible(self, tmp_path):
        cfg_a = small_config(corrector_recall=0.6, confusion_seed=5, workdir=str(tmp_path / "a"))
        cfg_b = small_config(corrector_recall=0.6, confusion_seed=5, workdir=str(tmp_path / "b"))
        ta, tb = run_simulation(cfg_a), run_simulation(cfg_b)
        assert ta.per_session == tb.per_session
        assert ta.baseline_static == tb.baseline_static
        assert ta.baseline_generic == tb.baseline_generic
        assert ta.baseline_one_round == tb.baseline_one_round
        assert ta.confused_words == tb.confused_words

    def test_partial_recall_improves(self, tmp_path):
        traj = run_simulation(small_config(corrector_recall=0.7, confusion_seed=2, workdir=str(tmp_path)))
        assert traj.per_session[-1].wer < traj.per_session[0].wer

    def test_baseline_ordering(self, tmp_path):
        traj = run_simulation(small_config(corrector_recall=0.7, confusion_seed=3, workdir=str(tmp_path)))
        final = traj.per_session[-1].wer
        assert final <= traj.baseline_static[-1]
        assert final <= traj.baseline_generic[-1]
        assert final <= traj.baseline_one_round

    def test_one_round_baseline_between(self, tmp_path):
        traj = run_simulation(small_config(corrector_recall=0.5, confusion_seed=9, workdir=str(tmp_path)))
        # one-round correction fixes about half the session-1 errors
        assert traj.baseline_one_round < traj.per_session[0].wer
        assert traj.baseline_one_round > 0.0

    def test_recording_burden_accounted(self, tmp_path):
        traj = run_simulation(small_config(corrector_recall=1.0, workdir=str(tmp_path)))
        s1 = traj.per_session[0]
        assert s1.recordings > 0
        assert s1.recorded_seconds > 0
        # 0.4 s per clause word, clauses within 5..15 words
        assert s1.recordings * 0.4 * 5 <= s1.recorded_seconds <= s1.recordings * 0.4 * 15

    def test_generic_baseline_at_least_as_good_as_static(self, tmp_path):
        traj = run_simulation(small_config(confusion_seed=4, workdir=str(tmp_path)))
        for g, s in zip(traj.baseline_generic, traj.baseline_static):
            assert g <= s

    def test_manifest_seam_exercised(self, tmp_path):
        run_simulation(small_config(corrector_recall=1.0, workdir=str(tmp_path)))
        manifests = list(tmp_path.glob("session-*/manifest/manifest.jsonl"))
        wavs = list(tmp_path.glob("session-*/*.wav"))
        assert manifests and wavs

    def test_external_trainer_path(self, tmp_path):
        import sys

        cfg = small_config(
            corrector_recall=1.0,
            trainer="external",
            trainer_cmd=(sys.executable, "-m", "caploop.trainer_cli"),
            workdir=str(tmp_path),
        )
        import os

        old = os.environ.get("PYTHONPATH")
        src = str(__import__("pathlib").Path(__file__).resolve().parents[1] / "src")
        os.environ["PYTHONPATH"] = src if not old else f"{src}{os.pathsep}{old}"
        try:
            traj = run_simulation(cfg)
        finally:
            if old is None:
                os.environ.pop("PYTHONPATH", None)
            else:
                os.environ["PYTHONPATH"] = old
        assert traj.per_session[-1].wer == 0.0
