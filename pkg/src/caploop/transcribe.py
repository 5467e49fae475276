"""Recognition-engine abstraction: chunked streaming transcriber, the
deterministic mock confusion-channel engine, and a model registry with
atomic hot-swap.

The mock engine is word-level: ground-truth words ride alongside the audio
(the simulation's channel), and each word is replaced through a confusion
table in a single pass. Real backends plug in behind the same transcriber
interface via an EngineAdapter that turns a finished utterance's PCM into
words.
"""

import json
import threading
import time
from array import array
from dataclasses import dataclass, field
from typing import Protocol

SAMPLE_RATE = 16000

ENGINE_MOCK = "mock"
ENGINE_EXTERNAL = "external"

PARTIAL = "partial"
FINAL = "final"


@dataclass(frozen=True)
class AudioChunk:
    samples: array  # array('h'), mono s16
    sample_rate: int = SAMPLE_RATE

    def __post_init__(self):
        if self.sample_rate != SAMPLE_RATE:
            raise ValueError(f"expected {SAMPLE_RATE} Hz audio, got {self.sample_rate}")
        if len(self.samples) == 0:
            raise ValueError("audio chunk may not be empty")

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate


def silence(seconds: float) -> AudioChunk:
    n = max(1, int(round(seconds * SAMPLE_RATE)))
    return AudioChunk(array("h", bytes(2 * n)))


@dataclass(frozen=True)
class Hypothesis:
    words: tuple[str, ...]
    stability: str  # partial | final
    utterance_id: str
    model_version: int  # version active when the utterance started
    empty: bool = False  # set on finals with no words


def _check_confusion_word(word: str, what: str):
    if not word or any(c.isspace() for c in word) or word != word.lower():
        raise ValueError(f"confusion {what} must be a single lowercase word: {word!r}")


@dataclass(frozen=True)
class EngineState:
    kind: str
    confusion: dict[str, str] = field(default_factory=dict)
    label: str = ""

    def __post_init__(self):
        if self.kind not in (ENGINE_MOCK, ENGINE_EXTERNAL):
            raise ValueError(f"unknown engine kind {self.kind!r}")
        object.__setattr__(self, "confusion", dict(self.confusion))
        for k, v in self.confusion.items():
            _check_confusion_word(k, "key")
            _check_confusion_word(v, "value")
            if k == v:
                raise ValueError(f"confusion entry maps {k!r} to itself")

    def to_dict(self) -> dict:
        return {"kind": self.kind, "confusion": dict(self.confusion), "label": self.label}

    @classmethod
    def from_dict(cls, data: dict) -> "EngineState":
        return cls(kind=data["kind"], confusion=data.get("confusion", {}), label=data.get("label", ""))


def save_engine(engine: EngineState, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(engine.to_dict(), fh, sort_keys=True, indent=2)


def load_engine(path) -> EngineState:
    with open(path, encoding="utf-8") as fh:
        return EngineState.from_dict(json.load(fh))


@dataclass(frozen=True)
class ModelVersion:
    id: int
    parent: int | None
    created_at: int  # wall clock ms
    engine: EngineState


def mock_recognize(engine: EngineState, spoken: list[str]) -> list[str]:
    """Pass each word through the confusion table once; no chaining."""
    if engine.kind != ENGINE_MOCK:
        raise ValueError("mock_recognize requires a mock engine")
    table = engine.confusion
    return [table.get(w, w) for w in spoken]


class ModelRegistry:
    """Versioned model store. Reads of the active version never block; swaps
    are serialized and atomic."""

    def __init__(self, base: EngineState):
        self._lock = threading.Lock()
        root = ModelVersion(1, None, int(time.time() * 1000), base)
        self._versions: dict[int, ModelVersion] = {1: root}
        self._active = root

    @property
    def active(self) -> ModelVersion:
        return self._active

    def get(self, version_id: int) -> ModelVersion:
        return self._versions[version_id]

    def swap_model(self, new: EngineState) -> ModelVersion:
        with self._lock:
            version = ModelVersion(
                max(self._versions) + 1, self._active.id, int(time.time() * 1000), new
            )
            self._versions[version.id] = version
            self._active = version
            return version

    def lineage(self) -> list[ModelVersion]:
        return [self._versions[k] for k in sorted(self._versions)]


class EngineAdapter(Protocol):
    """Contract for real recognition backends: turn a finished utterance's
    PCM into words using the model artifact at `model_artifact`."""

    def transcribe_utterance(self, pcm: bytes, model_artifact: str) -> list[str]: ...


class UtteranceError(ValueError):
    """Raised on out-of-order utterance operations."""


class Transcriber:
    """Chunked streaming transcriber for one speaker stream.

    An utterance is pinned to the model version active when it begins;
    hot-swaps apply from the next utterance. For the mock engine the caller
    feeds ground-truth words with each chunk; partials accumulate over them.
    """

    def __init__(self, registry: ModelRegistry, chunk_hop_s: float = 1.0, adapter: EngineAdapter | None = None):
        if chunk_hop_s <= 0:
            raise ValueError("chunk_hop_s must be positive")
        self.registry = registry
        self.chunk_hop_s = chunk_hop_s
        self.adapter = adapter
        self._counter = 0
        self._open: str | None = None
        self._pinned: ModelVersion | None = None
        self._spoken: list[str] = []
        self._pcm = bytearray()

    @property
    def open_utterance(self) -> str | None:
        return self._open

    def begin_utterance(self) -> str:
        if self._open is not None:
            raise UtteranceError(f"utterance {self._open} is still open")
        self._counter += 1
        self._open = f"u{self._counter}"
        self._pinned = self.registry.active
        self._spoken = []
        self._pcm = bytearray()
        return self._open

    def feed(self, chunk: AudioChunk, words: list[str] | None = None) -> list[Hypothesis]:
        if self._open is None:
            raise UtteranceError("no open utterance; audio after finalize is rejected")
        if chunk.sample_rate != SAMPLE_RATE:
            raise ValueError(f"expected {SAMPLE_RATE} Hz audio")
        self._pcm += chunk.samples.tobytes()
        if not words:
            return []
        self._spoken.extend(words)
        if self._pinned.engine.kind != ENGINE_MOCK:
            return []  # external engines decode at finalize through the adapter
        recognized = mock_recognize(self._pinned.engine, self._spoken)
        return [Hypothesis(tuple(recognized), PARTIAL, self._open, self._pinned.id)]

    def finalize(self) -> Hypothesis:
        if self._open is None:
            raise UtteranceError("no open utterance to finalize")
        utterance, pinned = self._open, self._pinned
        if pinned.engine.kind == ENGINE_MOCK:
            words = mock_recognize(pinned.engine, self._spoken)
        elif self.adapter is not None:
            words = self.adapter.transcribe_utterance(bytes(self._pcm), pinned.engine.label)
        else:
            words = []
        self._open = None
        self._pinned = None
        self._spoken = []
        self._pcm = bytearray()
        return Hypothesis(tuple(words), FINAL, utterance, pinned.id, empty=not words)
