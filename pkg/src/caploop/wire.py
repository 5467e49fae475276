"""Session wire protocol: JSON envelopes on text frames, raw PCM on binary
frames, and waveform-peak computation for UI feedback.

Binary frames are little-endian signed 16-bit mono at 16 kHz. Text frames
carry one JSON envelope each with a per-connection strictly increasing seq;
unknown envelope types and schema violations are protocol errors with a
code, never silently dropped.
"""

import json
import sys
from array import array
from dataclasses import dataclass, field

from caploop import kernels
from caploop.document import Delta, HighlightKind, Span
from caploop.transcribe import AudioChunk

PEAK_FULL_SCALE = 32768


class ProtocolError(ValueError):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


class SchemaError(ProtocolError):
    def __init__(self, message: str, field_name: str | None = None):
        super().__init__("schema_violation", message)
        self.field = field_name


class FramingError(ProtocolError):
    def __init__(self, message: str):
        super().__init__("bad_frame", message)


@dataclass(frozen=True)
class Envelope:
    type: str
    session_id: str
    seq: int
    payload: dict = field(default_factory=dict)


def _is_word_list(v):
    return isinstance(v, list) and all(isinstance(w, str) for w in v)


def _is_span(v):
    return (
        isinstance(v, dict)
        and isinstance(v.get("start"), int)
        and isinstance(v.get("end"), int)
    )


def _is_str(v):
    return isinstance(v, str)


def _is_int(v):
    return isinstance(v, int) and not isinstance(v, bool)


def _is_number(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _is_kind(v):
    return v in ("corrected", "uncertain")


def _is_prompt_list(v):
    return isinstance(v, list) and all(
        isinstance(p, dict) and isinstance(p.get("id"), str) and isinstance(p.get("clause"), str)
        for p in v
    )


# required payload fields per message type
MESSAGE_SCHEMAS: dict[str, dict] = {
    "hello": {"role": _is_str},
    "start_asr": {},
    "stop_asr": {},
    "correction": {
        "id": _is_str,
        "span": _is_span,
        "original": _is_word_list,
        "replacement": _is_word_list,
        "kind": _is_kind,
        "base_version": _is_int,
    },
    "caption_delta": {
        "version": _is_int,
        "start": _is_int,
        "removed": _is_int,
        "words": _is_word_list,
    },
    "prompts_ready": {"prompts": _is_prompt_list},
    "model_updated": {"version": _is_int},
    "recording_meta": {"prompt_id": _is_str, "duration_s": _is_number, "status": _is_str},
    "error": {"code": _is_str, "message": _is_str},
}

MESSAGE_TYPES = frozenset(MESSAGE_SCHEMAS)


def _validate_payload(msg_type: str, payload: dict):
    schema = MESSAGE_SCHEMAS[msg_type]
    for name, check in schema.items():
        if name not in payload:
            raise SchemaError(f"{msg_type} payload missing required field {name}", name)
        if not check(payload[name]):
            raise SchemaError(f"{msg_type} payload field {name} has the wrong shape", name)


def encode_message(env: Envelope) -> str:
    if env.type not in MESSAGE_TYPES:
        raise ProtocolError("unknown_type", f"unknown message type {env.type!r}")
    if not isinstance(env.seq, int) or env.seq < 0:
        raise ProtocolError("bad_seq", "seq must be a non-negative integer")
    _validate_payload(env.type, env.payload)
    return json.dumps(
        {"type": env.type, "session_id": env.session_id, "seq": env.seq, "payload": env.payload},
        ensure_ascii=False,
        separators=(",", ":"),
    )


def decode_message(text: str) -> Envelope:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProtocolError("bad_json", f"frame is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ProtocolError("bad_json", "frame must be a JSON object")
    msg_type = raw.get("type")
    if not isinstance(msg_type, str) or msg_type not in MESSAGE_TYPES:
        raise ProtocolError("unknown_type", f"unknown message type {msg_type!r}")
    session_id = raw.get("session_id")
    if not isinstance(session_id, str):
        raise SchemaError("session_id must be a string", "session_id")
    seq = raw.get("seq")
    if not isinstance(seq, int) or isinstance(seq, bool) or seq < 0:
        raise ProtocolError("bad_seq", "seq must be a non-negative integer")
    payload = raw.get("payload", {})
    if not isinstance(payload, dict):
        raise SchemaError("payload must be an object", "payload")
    _validate_payload(msg_type, payload)
    return Envelope(msg_type, session_id, seq, payload)


class SequenceGuard:
    """Per-connection check that seq strictly increases."""

    def __init__(self):
        self.last: int | None = None

    def validate(self, env: Envelope):
        if self.last is not None and env.seq <= self.last:
            raise ProtocolError(
                "seq_regression", f"seq {env.seq} is not greater than previous {self.last}"
            )
        self.last = env.seq


# -- correction / delta payload mapping -------------------------------------


def correction_payload(event) -> dict:
    return {
        "id": event.id,
        "span": {"start": event.span.start, "end": event.span.end},
        "original": list(event.original),
        "replacement": list(event.replacement),
        "kind": event.kind.value,
        "base_version": event.base_version,
        "author": event.author,
        "timestamp": event.timestamp,
    }


def correction_from_payload(payload: dict, author: str | None = None):
    from caploop.document import CorrectionEvent

    return CorrectionEvent(
        id=payload["id"],
        span=Span(payload["span"]["start"], payload["span"]["end"]),
        original=tuple(payload["original"]),
        replacement=tuple(payload["replacement"]),
        kind=HighlightKind(payload["kind"]),
        author=author if author is not None else payload.get("author", ""),
        base_version=payload["base_version"],
        timestamp=payload.get("timestamp", 0),
    )


def delta_payload(delta: Delta, preview: bool = False) -> dict:
    payload = {
        "version": delta.version,
        "start": delta.start,
        "removed": delta.removed,
        "words": list(delta.words),
        "origin": delta.origin,
    }
    if delta.highlight is not None:
        span, kind = delta.highlight
        payload["highlight"] = {"start": span.start, "end": span.end, "kind": kind.value}
    if preview:
        payload["preview"] = True
    return payload


def delta_from_payload(payload: dict) -> Delta:
    highlight = None
    if payload.get("highlight"):
        h = payload["highlight"]
        highlight = (Span(h["start"], h["end"]), HighlightKind(h["kind"]))
    return Delta(
        version=payload["version"],
        start=payload["start"],
        removed=payload["removed"],
        words=tuple(payload["words"]),
        origin=payload.get("origin", "asr"),
        highlight=highlight,
    )


# -- PCM framing -------------------------------------------------------------


def decode_pcm(data: bytes) -> AudioChunk:
    """Little-endian signed 16-bit mono at 16 kHz."""
    if not data:
        raise FramingError("empty PCM frame")
    if len(data) % 2:
        raise FramingError(f"PCM frame length {len(data)} is odd")
    samples = array("h")
    samples.frombytes(data)
    if sys.byteorder == "big":
        samples.byteswap()
    return AudioChunk(samples)


def encode_pcm(chunk: AudioChunk) -> bytes:
    samples = chunk.samples
    if sys.byteorder == "big":
        samples = array("h", samples)
        samples.byteswap()
    return samples.tobytes()


# -- waveform peaks -----------------------------------------------------------


@dataclass(frozen=True)
class WaveformPeaks:
    peaks: tuple[float, ...]  # normalized max-abs per window, each in [0, 1]
    window: int  # samples per peak


class PeakAccumulator:
    """Streaming max-abs peaks; equals the batch result for any chunking."""

    def __init__(self, window: int):
        if window < 1:
            raise ValueError("window must be >= 1")
        self.window = window
        self._pending = array("h")
        self._peaks: list[int] = []

    def feed(self, samples):
        if isinstance(samples, AudioChunk):
            samples = samples.samples
        buf = self._pending + array("h", samples)
        full = len(buf) // self.window * self.window
        if full:
            self._peaks.extend(kernels.window_max_abs(buf[:full], self.window))
        self._pending = buf[full:]

    def result(self) -> WaveformPeaks:
        peaks = list(self._peaks)
        if self._pending:
            peaks.append(max(abs(v) for v in self._pending))
        return WaveformPeaks(tuple(p / PEAK_FULL_SCALE for p in peaks), self.window)


def compute_peaks(chunks, window: int) -> WaveformPeaks:
    """Batch peaks over an iterable of AudioChunks (or raw sample sequences)."""
    acc = PeakAccumulator(window)
    for chunk in chunks:
        acc.feed(chunk)
    return acc.result()
