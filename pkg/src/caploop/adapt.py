"""Assemble corrected-clause recordings into training datasets, run
fine-tune jobs through a trainer seam, and register the result.

Trainers consume an exported manifest directory; the in-process reference
trainer repairs the mock engine's confusion table, and the external trainer
invokes any conforming command out of process (manifest dir, base model
artifact, hyperparameter JSON in; new artifact path on stdout)."""

import json
import logging
import queue
import shutil
import subprocess
import threading
import wave
from dataclasses import dataclass, field
from pathlib import Path

from caploop.clausegen import STATUS_RECORDED, RecordingPrompt
from caploop.evalkit import normalize
from caploop.transcribe import (
    ENGINE_MOCK,
    EngineState,
    ModelRegistry,
    ModelVersion,
    load_engine,
    save_engine,
)

logger = logging.getLogger(__name__)

JOB_QUEUED = "queued"
JOB_RUNNING = "running"
JOB_DONE = "done"
JOB_FAILED = "failed"


@dataclass(frozen=True)
class Hyperparams:
    learning_rate: float = 1e-5
    batch_size: int = 8
    max_steps: int = 100

    def to_dict(self) -> dict:
        return {
            "learning_rate": self.learning_rate,
            "batch_size": self.batch_size,
            "max_steps": self.max_steps,
        }


@dataclass(frozen=True)
class RecordingMeta:
    prompt_id: str
    path: str  # WAV location on disk
    duration_s: float
    speaker: str
    size_bytes: int = 0

    def to_dict(self) -> dict:
        return {
            "prompt_id": self.prompt_id,
            "path": self.path,
            "duration_s": self.duration_s,
            "speaker": self.speaker,
            "size_bytes": self.size_bytes,
        }


@dataclass(frozen=True)
class TrainingPair:
    audio: str  # recording file reference
    text: str  # the validated clause, verbatim
    prompt_id: str
    speaker: str
    duration: float

    def __post_init__(self):
        if self.duration <= 0:
            raise ValueError(f"training pair {self.prompt_id} has non-positive duration")


@dataclass
class FinetuneJob:
    id: str
    dataset: list[TrainingPair]
    hyper: Hyperparams
    base: int  # model version the job trained from
    state: str = JOB_QUEUED
    result: int | None = None
    error: str | None = None
    _finished: threading.Event = field(default_factory=threading.Event, repr=False, compare=False)

    def wait(self, timeout: float | None = None) -> bool:
        return self._finished.wait(timeout)


class DatasetError(ValueError):
    pass


class ManifestError(ValueError):
    def __init__(self, message: str, missing: list[str] | None = None):
        super().__init__(message)
        self.missing = missing or []


def assemble_dataset(prompts: list[RecordingPrompt], recordings: list[RecordingMeta]) -> list[TrainingPair]:
    """One audio-text pair per recorded prompt; skipped and deleted prompts
    are excluded. The pair text is the prompt's clause verbatim."""
    by_id = {p.id: p for p in prompts}
    for rec in recordings:
        if rec.prompt_id not in by_id:
            raise DatasetError(f"recording references unknown prompt {rec.prompt_id!r}")
    pairs = []
    for rec in recordings:
        prompt = by_id[rec.prompt_id]
        if prompt.status != STATUS_RECORDED:
            continue
        pairs.append(
            TrainingPair(
                audio=rec.path,
                text=prompt.clause,
                prompt_id=prompt.id,
                speaker=rec.speaker,
                duration=rec.duration_s,
            )
        )
    return pairs


def wav_duration(path) -> float:
    with wave.open(str(path), "rb") as wav:
        return wav.getnframes() / wav.getframerate()


def write_wav(path, frames: bytes, sample_rate: int = 16000) -> None:
    """Write mono s16le frames as a WAV file."""
    with wave.open(str(path), "wb") as wav:
        wav.setnchannels(1)
        wav.setsampwidth(2)
        wav.setframerate(sample_rate)
        wav.writeframes(frames)


def silence_wav(path, seconds: float) -> float:
    """Synthesize a silent 16 kHz mono WAV of ~`seconds`; returns the exact
    duration."""
    frames = max(1, int(round(seconds * 16000)))
    write_wav(path, bytes(2 * frames))
    return frames / 16000


def check_wav_format(path) -> tuple[int, int, int]:
    """(channels, sample_width, frame_rate) of a WAV file."""
    with wave.open(str(path), "rb") as wav:
        return wav.getnchannels(), wav.getsampwidth(), wav.getframerate()


def export_manifest(pairs: list[TrainingPair], directory) -> Path:
    """Write audio files plus manifest.jsonl into `directory`.

    One line per pair with fields audio, text, prompt_id, speaker,
    duration_s; pairs are ordered by prompt_id so a re-export of identical
    input is byte-identical. Referenced WAVs must exist as 16 kHz mono s16le.
    """
    directory = Path(directory)
    missing = [p.prompt_id for p in pairs if not Path(p.audio).is_file()]
    if missing:
        raise ManifestError(f"missing audio files for prompts: {', '.join(sorted(missing))}", missing)
    audio_dir = directory / "audio"
    audio_dir.mkdir(parents=True, exist_ok=True)
    lines = []
    for pair in sorted(pairs, key=lambda p: p.prompt_id):
        channels, width, rate = check_wav_format(pair.audio)
        if (channels, width, rate) != (1, 2, 16000):
            raise ManifestError(
                f"{pair.prompt_id}: expected 16 kHz mono s16le WAV, got "
                f"{rate} Hz x{channels} width={width}"
            )
        dest = audio_dir / f"{pair.prompt_id}.wav"
        shutil.copyfile(pair.audio, dest)
        record = {
            "audio": f"audio/{pair.prompt_id}.wav",
            "text": pair.text,
            "prompt_id": pair.prompt_id,
            "speaker": pair.speaker,
            "duration_s": wav_duration(pair.audio),
        }
        lines.append(json.dumps(record, ensure_ascii=False, separators=(",", ":")))
    manifest = directory / "manifest.jsonl"
    manifest.write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
    return manifest


def read_manifest(directory) -> list[dict]:
    manifest = Path(directory) / "manifest.jsonl"
    out = []
    for line in manifest.read_text(encoding="utf-8").splitlines():
        if line.strip():
            out.append(json.loads(line))
    return out


def reference_train(engine: EngineState, pairs: list[TrainingPair]) -> EngineState:
    """Deterministic trainer contract for the mock engine: drop every
    confusion whose canonical word appears in any pair's text."""
    if engine.kind != ENGINE_MOCK:
        raise ValueError("reference_train requires a mock engine")
    covered: set[str] = set()
    for pair in pairs:
        covered.update(normalize(pair.text))
    confusion = {k: v for k, v in engine.confusion.items() if k not in covered}
    return EngineState(ENGINE_MOCK, confusion, label=engine.label)


class ReferenceTrainer:
    """In-process trainer: reads the exported manifest and repairs the mock
    engine's confusion table."""

    name = "reference"

    def train(self, manifest_dir, base: EngineState, hyper: Hyperparams) -> EngineState:
        rows = read_manifest(manifest_dir)
        pairs = [
            TrainingPair(
                audio=row["audio"],
                text=row["text"],
                prompt_id=row["prompt_id"],
                speaker=row.get("speaker", ""),
                duration=row.get("duration_s", 1.0),
            )
            for row in rows
        ]
        return reference_train(base, pairs)


class ExternalTrainer:
    """Out-of-process trainer adapter.

    Invokes `cmd <manifest_dir> <base_artifact> <hyper_json>`; the command
    must exit 0 and print the new model artifact path on its last stdout
    line. Artifacts are engine-state JSON for the mock engine and opaque
    paths for real backends."""

    def __init__(self, cmd: list[str], timeout: float = 600.0, env: dict | None = None):
        self.cmd = list(cmd)
        self.timeout = timeout
        self.env = env
        self.name = f"external:{self.cmd[0]}"

    def train(self, manifest_dir, base: EngineState, hyper: Hyperparams) -> EngineState:
        manifest_dir = Path(manifest_dir)
        base_artifact = manifest_dir / "base_engine.json"
        save_engine(base, base_artifact)
        argv = self.cmd + [str(manifest_dir), str(base_artifact), json.dumps(hyper.to_dict())]
        env = None
        if self.env is not None:
            import os

            env = dict(os.environ, **self.env)
        proc = subprocess.run(argv, capture_output=True, text=True, timeout=self.timeout, env=env)
        if proc.returncode != 0:
            raise RuntimeError(
                f"trainer exited {proc.returncode}: {proc.stderr.strip() or proc.stdout.strip()}"
            )
        lines = [ln for ln in proc.stdout.splitlines() if ln.strip()]
        if not lines:
            raise RuntimeError("trainer produced no artifact path on stdout")
        return load_engine(lines[-1].strip())


class FinetuneOrchestrator:
    """FIFO fine-tune queue: one job runs at a time, training happens on a
    background thread, and the finished model is hot-swapped into the
    registry. Failures leave the active model untouched."""

    def __init__(self, registry: ModelRegistry, trainer, workdir, on_event=None):
        self.registry = registry
        self.trainer = trainer
        self.workdir = Path(workdir)
        self.on_event = on_event
        self._queue: queue.Queue = queue.Queue()
        self._counter = 0
        self._lock = threading.Lock()
        self._worker = threading.Thread(target=self._run, daemon=True)
        self._worker.start()

    def schedule_finetune(
        self, pairs: list[TrainingPair], hyper: Hyperparams | None = None, base: int | None = None
    ) -> FinetuneJob:
        """Queue a job over `pairs`. Jobs chain from the model active when
        they start; a stale explicit `base` is re-resolved then."""
        if not pairs:
            raise DatasetError("refusing to schedule a fine-tune over an empty dataset")
        with self._lock:
            self._counter += 1
            job = FinetuneJob(
                id=f"job{self._counter}",
                dataset=list(pairs),
                hyper=hyper or Hyperparams(),
                base=base if base is not None else self.registry.active.id,
            )
        self._queue.put(job)
        return job

    def _run(self):
        while True:
            job = self._queue.get()
            if job is None:
                return
            self._execute(job)
            self._queue.task_done()

    def _execute(self, job: FinetuneJob):
        job.state = JOB_RUNNING
        active = self.registry.active
        if job.base != active.id:
            logger.info("job %s re-based from v%s to active v%s", job.id, job.base, active.id)
            job.base = active.id
        try:
            job_dir = self.workdir / job.id
            job_dir.mkdir(parents=True, exist_ok=True)
            export_manifest(job.dataset, job_dir)
            new_engine = self.trainer.train(job_dir, active.engine, job.hyper)
            version = self.registry.swap_model(new_engine)
            job.result = version.id
            job.state = JOB_DONE
            self._emit("model_updated", job, version)
        except Exception as exc:
            job.error = str(exc)
            job.state = JOB_FAILED
            logger.warning("fine-tune %s failed: %s", job.id, exc)
            self._emit("training_failed", job, None)
        finally:
            job._finished.set()

    def _emit(self, kind: str, job: FinetuneJob, version: ModelVersion | None):
        if self.on_event is not None:
            try:
                self.on_event(kind, job, version)
            except Exception:
                logger.exception("orchestrator event handler failed")

    def shutdown(self, wait: bool = True):
        self._queue.put(None)
        if wait:
            self._worker.join(timeout=10)
