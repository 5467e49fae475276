"""Closed-loop simulator: scripted sessions through the mock engine, a
seeded corrector, fallback clause prompts, synthetic recordings, and
between-session training, with the three comparison baselines.

Deterministic end to end: the same config (seed included) yields a
bit-identical trajectory. Corruptions are chosen outside the script
vocabulary so every recognition error surfaces as a plain substitution the
corrector can see.
"""

import random
import tempfile
from dataclasses import dataclass
from pathlib import Path

from caploop.adapt import (
    ExternalTrainer,
    Hyperparams,
    RecordingMeta,
    ReferenceTrainer,
    assemble_dataset,
    export_manifest,
    silence_wav,
)
from caploop.clausegen import ClauseRequest, generate_clause
from caploop.document import CaptionDocument, CorrectionEvent, Delta, HighlightKind, Span
from caploop.evalkit import SessionStats, align, wer
from caploop.transcribe import EngineState, ModelRegistry, Transcriber, mock_recognize, silence

DEFAULT_VOCAB = tuple(
    """the a an and or but if then of to in on at by for with from about into over after
    before under between through during morning afternoon evening night today tomorrow
    yesterday week month year time hour minute moment season spring summer autumn winter
    rain snow sun wind cloud weather warm cold cool hot nice bad good great small big
    little long short new old young early late first last next other same different many
    few more most some any every each all both only just also very really quite almost
    always usually often sometimes rarely never again still yet already soon now here
    there home house room kitchen table chair door window garden yard street road town
    city park school office store market shop library station train bus car bike walk
    run drive ride travel trip visit stay leave arrive return come go get take bring
    carry hold keep put set place open close start stop begin finish end work play rest
    sleep wake eat drink cook bake wash clean fix make build buy sell pay spend save
    give send receive find lose look watch see hear listen speak talk say tell ask
    answer read write draw paint sing dance laugh smile cry think know learn teach
    remember forget plan hope wish want need like love enjoy prefer try help meet join
    share show explain describe discuss agree decide choose change move turn wait call
    phone message letter email news story book page word name friend family mother
    father parent sister brother child baby neighbor teacher student doctor nurse
    people person group team party dinner lunch breakfast coffee tea water milk juice
    bread butter cheese egg fruit apple orange banana grape lemon salad soup rice pasta
    meat chicken fish vegetable potato tomato onion carrot pepper salt sugar honey cake
    cookie chocolate dog cat bird horse garden flower tree leaf grass river lake ocean
    beach mountain hill forest field farm animal music song movie game sport ball foot
    hand head eye ear nose mouth face hair arm leg heart mind body health happy sad
    tired busy free ready sure certain careful quiet loud bright dark heavy light soft
    hard easy difficult simple clear fresh clean dirty wet dry full empty high low fast
    slow""".split()
)


@dataclass(frozen=True)
class SimConfig:
    scripts: tuple[tuple[str, ...], ...] | None = None  # None: generate defaults
    sessions: int = 5
    words_per_script: int = 600
    confusion_seed: int = 0
    confused_word_count: int = 40
    corrector_recall: float = 1.0
    trainer: str = "reference"  # reference | external
    trainer_cmd: tuple[str, ...] = ()
    generic_preremoved_fraction: float = 0.2
    seconds_per_word: float = 0.4
    workdir: str | None = None

    def __post_init__(self):
        if not 0.0 <= self.corrector_recall <= 1.0:
            raise ValueError("corrector_recall must be within [0, 1]")
        if self.scripts is not None and not self.scripts:
            raise ValueError("scripts may not be empty")
        if self.trainer not in ("reference", "external"):
            raise ValueError(f"unknown trainer {self.trainer!r}")


@dataclass
class Trajectory:
    per_session: list[SessionStats]
    baseline_static: list[float]
    baseline_generic: list[float]
    baseline_one_round: float
    confused_words: tuple[str, ...]
    remaining_confusions: int  # size of the final engine's table


def make_scripts(rng: random.Random, sessions: int, words_per_script: int, vocab=DEFAULT_VOCAB):
    """Scripted readings: every vocabulary word appears in every script when
    it fits, so adaptation coverage does not depend on luck."""
    scripts = []
    for _ in range(sessions):
        if words_per_script >= len(vocab):
            words = list(vocab) + rng.choices(vocab, k=words_per_script - len(vocab))
        else:
            words = rng.sample(list(vocab), words_per_script)
        rng.shuffle(words)
        scripts.append(tuple(words))
    return tuple(scripts)


def corrupt_word(word: str, rng: random.Random, vocab: frozenset) -> str:
    """A misrecognized form: drop one character when the result stays out of
    the vocabulary, else pile on a suffix."""
    if len(word) > 2:
        starts = list(range(1, len(word)))
        rng.shuffle(starts)
        for i in starts:
            candidate = word[:i] + word[i + 1 :]
            if candidate and candidate != word and candidate not in vocab:
                return candidate
    candidate = word + "x"
    while candidate in vocab:
        candidate += "x"
    return candidate


def build_confusion(rng: random.Random, vocab, k: int) -> dict[str, str]:
    vocab = sorted(set(vocab))
    if k > len(vocab):
        raise ValueError(f"confused_word_count {k} exceeds vocabulary size {len(vocab)}")
    vocab_set = frozenset(vocab)
    chosen = rng.sample(vocab, k)
    return {w: corrupt_word(w, rng, vocab_set) for w in chosen}


def simulated_corrector(
    ref: list[str],
    hyp: list[str],
    recall: float,
    rng: random.Random,
    base_version: int = 0,
    id_prefix: str = "c",
    author: str = "sim-corrector",
) -> list[CorrectionEvent]:
    """One correction per substituted word, each emitted with probability
    `recall`; insertions and deletions are left alone."""
    events = []
    for op, ref_i, hyp_i in align(ref, hyp).ops:
        if op != "sub":
            continue
        if recall < 1.0 and rng.random() >= recall:
            continue
        events.append(
            CorrectionEvent(
                id=f"{id_prefix}{hyp_i}",
                span=Span(hyp_i, hyp_i + 1),
                original=(hyp[hyp_i],),
                replacement=(ref[ref_i],),
                kind=HighlightKind.CORRECTED,
                author=author,
                base_version=base_version,
            )
        )
    return events


def _transcribe_script(registry: ModelRegistry, script) -> tuple[str, ...]:
    transcriber = Transcriber(registry)
    transcriber.begin_utterance()
    step = 8  # words per chunk
    for i in range(0, len(script), step):
        transcriber.feed(silence(0.1), list(script[i : i + step]))
    return transcriber.finalize().words


def _static_wers(engine: EngineState, scripts) -> list[float]:
    return [wer(list(s), mock_recognize(engine, list(s))) for s in scripts]


def run_simulation(cfg: SimConfig) -> Trajectory:
    rng_scripts = random.Random(f"{cfg.confusion_seed}/scripts")
    scripts = cfg.scripts or make_scripts(rng_scripts, cfg.sessions, cfg.words_per_script)
    vocab = sorted({w for script in scripts for w in script})

    rng_confusion = random.Random(f"{cfg.confusion_seed}/confusion")
    confusion = build_confusion(rng_confusion, vocab, cfg.confused_word_count)
    base_engine = EngineState("mock", confusion, label="base")

    rng_generic = random.Random(f"{cfg.confusion_seed}/generic")
    pre_removed = rng_generic.sample(
        sorted(confusion), int(len(confusion) * cfg.generic_preremoved_fraction)
    )
    generic_engine = EngineState(
        "mock", {k: v for k, v in confusion.items() if k not in pre_removed}, label="generic"
    )

    if cfg.trainer == "external":
        trainer = ExternalTrainer(list(cfg.trainer_cmd))
    else:
        trainer = ReferenceTrainer()

    workdir = Path(cfg.workdir) if cfg.workdir else Path(tempfile.mkdtemp(prefix="caploop-sim-"))
    workdir.mkdir(parents=True, exist_ok=True)

    registry = ModelRegistry(base_engine)
    rng_corrector = random.Random(f"{cfg.confusion_seed}/corrector")
    per_session: list[SessionStats] = []
    baseline_one_round = 0.0

    for si, script in enumerate(scripts, start=1):
        script = list(script)
        hyp_words = list(_transcribe_script(registry, script))
        session_wer = wer(script, hyp_words)

        doc = CaptionDocument()
        if hyp_words:
            doc.append_segment(hyp_words)
        base_version = doc.version
        events = simulated_corrector(
            script, hyp_words, cfg.corrector_recall, rng_corrector,
            base_version=base_version, id_prefix=f"s{si}-c",
        )
        for event in events:
            result = doc.apply_correction(event)
            assert isinstance(result, Delta), f"simulated correction conflicted: {result}"

        if si == 1:
            corrected = doc.texts() or ["<silence>"]
            baseline_one_round = wer(script, corrected)

        corrections = doc.collect_corrections(base_version)
        seen_targets: set[frozenset] = set()
        prompts = []
        for n, event in enumerate(corrections):
            key = frozenset(w.lower() for w in event.replacement)
            if key in seen_targets:
                continue
            seen_targets.add(key)
            request = ClauseRequest(event.original, event.replacement, event.id)
            prompts.append(generate_clause(request, prompt_id=f"s{si}-rp{len(prompts)}"))

        session_dir = workdir / f"session-{si}"
        session_dir.mkdir(parents=True, exist_ok=True)
        recordings = []
        for prompt in prompts:
            prompt.status = "recorded"
            wav_path = session_dir / f"{prompt.id}.wav"
            duration = silence_wav(wav_path, cfg.seconds_per_word * len(prompt.clause.split()))
            recordings.append(
                RecordingMeta(prompt.id, str(wav_path), duration, "sim-speaker", wav_path.stat().st_size)
            )

        per_session.append(
            SessionStats(
                session_index=si,
                wer=session_wer,
                corrections=len(events),
                recordings=len(recordings),
                recorded_seconds=sum(r.duration_s for r in recordings),
            )
        )

        pairs = assemble_dataset(prompts, recordings)
        if pairs and si < len(scripts):
            manifest_dir = session_dir / "manifest"
            export_manifest(pairs, manifest_dir)
            new_engine = trainer.train(manifest_dir, registry.active.engine, Hyperparams())
            registry.swap_model(new_engine)

    return Trajectory(
        per_session=per_session,
        baseline_static=_static_wers(base_engine, scripts),
        baseline_generic=_static_wers(generic_engine, scripts),
        baseline_one_round=baseline_one_round,
        confused_words=tuple(sorted(confusion)),
        remaining_confusions=len(registry.active.engine.confusion),
    )
