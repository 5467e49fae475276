"""Versioned collaborative caption document.

Transcribed segments are appended as tokens; partners edit them through
correction events that either replace a span (yellow) or flag it as
uncertain (red). Every accepted mutation bumps the version by one and yields
a broadcastable delta. Edits against a stale version are rebased when the
touched span is untouched since then, otherwise they come back as conflicts.
"""

import time
from dataclasses import dataclass
from enum import Enum

ORIGIN_ASR = "asr"
ORIGIN_CORRECTED = "corrected"


class HighlightKind(str, Enum):
    CORRECTED = "corrected"
    UNCERTAIN = "uncertain"


@dataclass(frozen=True)
class Span:
    start: int  # inclusive
    end: int  # exclusive

    def valid_for(self, length: int) -> bool:
        return 0 <= self.start < self.end <= length


@dataclass(frozen=True)
class Token:
    text: str
    index: int
    origin: str = ORIGIN_ASR


@dataclass(frozen=True)
class CorrectionEvent:
    id: str
    span: Span
    original: tuple[str, ...]
    replacement: tuple[str, ...]
    kind: HighlightKind
    author: str
    base_version: int
    timestamp: int = 0  # wall clock ms

    def __post_init__(self):
        object.__setattr__(self, "original", tuple(self.original))
        object.__setattr__(self, "replacement", tuple(self.replacement))
        if self.kind == HighlightKind.CORRECTED and not self.replacement:
            raise ValueError("corrected event needs a non-empty replacement")
        if self.kind == HighlightKind.UNCERTAIN and self.replacement:
            raise ValueError("uncertain event must not carry a replacement")
        for word in self.replacement:
            _check_word(word)


@dataclass(frozen=True)
class Delta:
    """One broadcastable document change: splice `words` over
    [start, start+removed) at the new `version`."""

    version: int
    start: int
    removed: int
    words: tuple[str, ...]
    origin: str
    highlight: tuple[Span, HighlightKind] | None = None


@dataclass(frozen=True)
class Conflict:
    event_id: str
    reason: str  # original_mismatch | stale_span


def _check_word(word: str):
    if not isinstance(word, str) or not word:
        raise ValueError("token text must be a non-empty string")
    if any(c.isspace() for c in word):
        raise ValueError(f"token text may not contain whitespace: {word!r}")


def now_ms() -> int:
    return int(time.time() * 1000)


class CaptionDocument:
    """Single-writer caption document; reads and snapshots are cheap."""

    def __init__(self):
        self.tokens: list[Token] = []
        self.version = 0
        # (span, kind) in application order; the latest mark on a token wins
        self.highlights: list[tuple[Span, HighlightKind]] = []
        # (event, applied span, version after application)
        self.history: list[tuple[CorrectionEvent, Span, int]] = []
        # full mutation log, replayable: ("append", words) | ("correction", event)
        self.mutations: list[tuple[str, object]] = []
        # token splices per accepted mutation: (version, start, removed, inserted)
        self._splices: list[tuple[int, int, int, int]] = []

    # -- mutations ---------------------------------------------------------

    def append_segment(self, words: list[str]) -> Delta:
        if not words:
            raise ValueError("cannot append an empty segment")
        for w in words:
            _check_word(w)
        start = len(self.tokens)
        for k, w in enumerate(words):
            self.tokens.append(Token(w, start + k, ORIGIN_ASR))
        self.version += 1
        self._splices.append((self.version, start, 0, len(words)))
        self.mutations.append(("append", tuple(words)))
        return Delta(self.version, start, 0, tuple(words), ORIGIN_ASR)

    def apply_correction(self, event: CorrectionEvent) -> Delta | Conflict:
        if event.base_version > self.version:
            raise ValueError(f"base_version {event.base_version} is ahead of document version {self.version}")
        base_texts = self._texts_at_version(event.base_version)
        if not event.span.valid_for(len(base_texts)):
            raise ValueError(f"span {event.span} invalid at version {event.base_version}")
        if tuple(base_texts[event.span.start : event.span.end]) != event.original:
            return Conflict(event.id, "original_mismatch")

        mapped = self._map_span_forward(event.span, event.base_version)
        if mapped is None:
            return Conflict(event.id, "stale_span")
        start, end = mapped

        if event.kind == HighlightKind.CORRECTED:
            inserted = len(event.replacement)
            self._remap_highlights(start, end, inserted)
            new_tokens = self.tokens[:start]
            for k, w in enumerate(event.replacement):
                new_tokens.append(Token(w, start + k, ORIGIN_CORRECTED))
            for tok in self.tokens[end:]:
                new_tokens.append(Token(tok.text, len(new_tokens), tok.origin))
            self.tokens = new_tokens
            span = Span(start, start + inserted)
            self.highlights.append((span, HighlightKind.CORRECTED))
            self.version += 1
            self._splices.append((self.version, start, end - start, inserted))
            self.history.append((event, span, self.version))
            self.mutations.append(("correction", event))
            return Delta(
                self.version, start, end - start, event.replacement, ORIGIN_CORRECTED,
                highlight=(span, HighlightKind.CORRECTED),
            )

        span = Span(start, end)
        self.highlights.append((span, HighlightKind.UNCERTAIN))
        self.version += 1
        self.history.append((event, span, self.version))
        self.mutations.append(("correction", event))
        return Delta(
            self.version, start, 0, (), ORIGIN_ASR,
            highlight=(span, HighlightKind.UNCERTAIN),
        )

    # -- queries -----------------------------------------------------------

    def collect_corrections(self, since_version: int) -> list[CorrectionEvent]:
        """Accepted corrected-kind events applied after since_version, in
        application order; uncertainty flags are excluded."""
        if since_version > self.version:
            raise ValueError(f"since_version {since_version} is ahead of document version {self.version}")
        return [
            event
            for event, _span, version in self.history
            if version > since_version and event.kind == HighlightKind.CORRECTED
        ]

    def render(self) -> list[tuple[str, HighlightKind | None]]:
        """One (word, highlight) entry per token; the latest covering mark wins."""
        out = []
        for tok in self.tokens:
            mark = None
            for span, kind in reversed(self.highlights):
                if span.start <= tok.index < span.end:
                    mark = kind
                    break
            out.append((tok.text, mark))
        return out

    def texts(self) -> list[str]:
        return [t.text for t in self.tokens]

    def snapshot(self) -> dict:
        return {
            "version": self.version,
            "tokens": [{"text": t.text, "origin": t.origin} for t in self.tokens],
            "highlights": [
                {"start": span.start, "end": span.end, "kind": kind.value}
                for span, kind in self.highlights
            ],
        }

    def fingerprint(self) -> tuple:
        """State identity for replay checks: tokens, highlights, version."""
        return (
            tuple((t.text, t.origin) for t in self.tokens),
            tuple((s.start, s.end, k.value) for s, k in self.highlights),
            self.version,
        )

    # -- replay ------------------------------------------------------------

    @classmethod
    def replay(cls, mutations) -> "CaptionDocument":
        doc = cls()
        for kind, data in mutations:
            if kind == "append":
                doc.append_segment(list(data))
            elif kind == "correction":
                result = doc.apply_correction(data)
                if isinstance(result, Conflict):
                    raise ValueError(f"replayed correction {data.id} conflicted: {result.reason}")
            else:
                raise ValueError(f"unknown mutation kind {kind!r}")
        return doc

    # -- internals ---------------------------------------------------------

    def _texts_at_version(self, version: int) -> list[str]:
        if version == self.version:
            return self.texts()
        doc = CaptionDocument()
        for kind, data in self.mutations:
            if doc.version == version:
                break
            if kind == "append":
                doc.append_segment(list(data))
            else:
                doc.apply_correction(data)
        return doc.texts()

    def _map_span_forward(self, span: Span, base_version: int) -> tuple[int, int] | None:
        """Track a span through splices applied after base_version; None when
        any of them touched the span's tokens."""
        start, end = span.start, span.end
        for version, s, removed, inserted in self._splices:
            if version <= base_version:
                continue
            if s + removed <= start:
                delta = inserted - removed
                start += delta
                end += delta
            elif s >= end:
                continue
            else:
                return None
        return start, end

    def _remap_highlights(self, start: int, end: int, inserted: int):
        delta = inserted - (end - start)
        remapped: list[tuple[Span, HighlightKind]] = []
        for span, kind in self.highlights:
            if span.end <= start:
                remapped.append((span, kind))
                continue
            if span.start >= end:
                remapped.append((Span(span.start + delta, span.end + delta), kind))
                continue
            # partial overlap with the replaced region: keep the outside parts
            if span.start < start:
                remapped.append((Span(span.start, start), kind))
            if span.end > end:
                remapped.append((Span(end + delta, span.end + delta), kind))
        self.highlights = remapped


def apply_delta(tokens: list[tuple[str, str]], highlights: list[tuple[int, int, str]], delta: Delta):
    """Client-side mirror of a document splice: apply `delta` to a plain
    (tokens, highlights) snapshot and return the new pair. Token entries are
    (text, origin); highlight entries are (start, end, kind)."""
    new_tokens = (
        tokens[: delta.start]
        + [(w, delta.origin) for w in delta.words]
        + tokens[delta.start + delta.removed :]
    )
    shift = len(delta.words) - delta.removed
    out: list[tuple[int, int, str]] = []
    if delta.removed or delta.words and delta.origin == ORIGIN_CORRECTED:
        start, end = delta.start, delta.start + delta.removed
        for hs, he, kind in highlights:
            if he <= start:
                out.append((hs, he, kind))
            elif hs >= end:
                out.append((hs + shift, he + shift, kind))
            else:
                if hs < start:
                    out.append((hs, start, kind))
                if he > end:
                    out.append((end + shift, he + shift, kind))
    else:
        out = list(highlights)
    if delta.highlight is not None:
        span, kind = delta.highlight
        out.append((span.start, span.end, kind.value))
    return new_tokens, out
