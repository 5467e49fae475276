"""Turn corrections into recordable clauses.

A remote completion endpoint gets the full instruction template; when it is
unreachable or returns something out of constraint, a deterministic carrier
template takes over so the loop never stalls on the network. Every prompt
persisted anywhere in the system passes validate_clause.
"""

import hashlib
import logging
from dataclasses import dataclass

import httpx

from caploop.evalkit import normalize

logger = logging.getLogger(__name__)

SOURCE_LLM = "llm"
SOURCE_FALLBACK = "fallback"

STATUS_PENDING = "pending"
STATUS_RECORDED = "recorded"
STATUS_SKIPPED = "skipped"
STATUS_DELETED = "deleted"
PROMPT_STATUSES = (STATUS_PENDING, STATUS_RECORDED, STATUS_SKIPPED, STATUS_DELETED)

MIN_WORDS = 5
MAX_WORDS = 15

CLAUSE_PROMPT_TEMPLATE = """You are generating short, spoken English clauses to help improve an automatic speech recognition (ASR) system. Based on a word that was misrecognized by ASR, your goal is to create a new clause (5-15 words) that:

--- Sounds natural in a daily conversation
--- Contains the corrected word in a prominent, clear context
--- Has a similar phonetic structure to the original sentence

Original words: "{original}"
Corrected words: "{corrected}"

Generate one new clause that can be used to help the ASR model learn this correction. Just reply with the clause (no quotes, no explanation)."""

# carrier sentences with one slot for the full corrected phrase; base word
# counts range 2..7 so phrases of 1..13 words can land inside 5-15
CARRIER_TEMPLATES = (
    "Please say the word {} again for me.",
    "I heard you say {} quite clearly today.",
    "Can you repeat {} one more time please.",
    "We talked about {} earlier this morning.",
    "She wrote {} on the whiteboard for everyone.",
    "The word {} came up during our meeting.",
    "He mentioned {} while we were having lunch.",
    "Everyone practiced saying {} before the break.",
    "They asked about {} at dinner last night.",
    "Please say {} one more time.",
    "Now try saying {} again slowly.",
    "She said {} to me.",
    "He said {} today.",
    "Say {} now.",
)


class ClauseError(ValueError):
    pass


class ClauseTransportError(RuntimeError):
    """Completion endpoint unreachable or returned an unusable body."""


@dataclass(frozen=True)
class ClauseRequest:
    original: tuple[str, ...]  # words as misrecognized; may be empty
    corrected: tuple[str, ...]
    correction_id: str

    def __post_init__(self):
        object.__setattr__(self, "original", tuple(self.original))
        object.__setattr__(self, "corrected", tuple(self.corrected))
        if not self.corrected:
            raise ClauseError("corrected words must be non-empty")


@dataclass
class RecordingPrompt:
    id: str
    clause: str
    target_words: tuple[str, ...]
    source: str  # llm | fallback
    status: str = STATUS_PENDING

    def __post_init__(self):
        self.target_words = tuple(self.target_words)
        if self.source not in (SOURCE_LLM, SOURCE_FALLBACK):
            raise ClauseError(f"unknown prompt source {self.source!r}")
        if self.status not in PROMPT_STATUSES:
            raise ClauseError(f"unknown prompt status {self.status!r}")
        violations = validate_clause(self.clause, list(self.target_words))
        if violations:
            raise ClauseError(f"clause violates constraints: {'; '.join(violations)}")

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "clause": self.clause,
            "target_words": list(self.target_words),
            "source": self.source,
            "status": self.status,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RecordingPrompt":
        return cls(
            id=data["id"],
            clause=data["clause"],
            target_words=tuple(data["target_words"]),
            source=data["source"],
            status=data.get("status", STATUS_PENDING),
        )


def build_prompt(req: ClauseRequest) -> str:
    """Instruction text for the completion endpoint; byte-stable."""
    return CLAUSE_PROMPT_TEMPLATE.replace("{original}", " ".join(req.original)).replace(
        "{corrected}", " ".join(req.corrected)
    )


def validate_clause(clause: str, target_words: list[str]) -> list[str]:
    """All constraint violations for a candidate clause; empty means ok.

    Words are whitespace tokens; target containment is checked after
    lowercasing and punctuation stripping.
    """
    violations = []
    count = len(clause.split())
    if count < MIN_WORDS:
        violations.append(f"too short ({count} words, need at least {MIN_WORDS})")
    elif count > MAX_WORDS:
        violations.append(f"too long ({count} words, limit {MAX_WORDS})")
    have = set(normalize(clause))
    for target in target_words:
        for word in normalize(target):
            if word not in have:
                violations.append(f"missing target word {word!r}")
    return violations


def fallback_clause(req: ClauseRequest) -> str:
    """Deterministic carrier sentence containing the full corrected phrase."""
    phrase = " ".join(req.corrected)
    n = len(phrase.split())
    candidates = [
        t for t in CARRIER_TEMPLATES if MIN_WORDS <= len(t.split()) - 1 + n <= MAX_WORDS
    ]
    if not candidates:
        raise ClauseError(
            f"no carrier clause can hold a {n}-word phrase within {MIN_WORDS}-{MAX_WORDS} words"
        )
    digest = int(hashlib.sha1(req.correction_id.encode("utf-8")).hexdigest(), 16)
    return candidates[digest % len(candidates)].format(phrase)


class CompletionClient:
    """Minimal completion-endpoint client: POST the prompt, read back text.

    Request body: {"model": ..., "prompt": ...}; response body: {"text": ...}.
    Bearer-token auth when an api_key is configured.
    """

    def __init__(self, url: str, model: str, api_key: str | None = None,
                 timeout: float = 10.0, client: httpx.Client | None = None):
        self.url = url
        self.model = model
        self.api_key = api_key
        self.timeout = timeout
        self._client = client

    def complete(self, prompt: str) -> str:
        headers = {}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        try:
            if self._client is not None:
                resp = self._client.post(
                    self.url, json={"model": self.model, "prompt": prompt},
                    headers=headers, timeout=self.timeout,
                )
            else:
                resp = httpx.post(
                    self.url, json={"model": self.model, "prompt": prompt},
                    headers=headers, timeout=self.timeout,
                )
            resp.raise_for_status()
            data = resp.json()
        except httpx.HTTPError as exc:
            raise ClauseTransportError(f"completion request failed: {exc}") from exc
        except ValueError as exc:
            raise ClauseTransportError("completion response is not JSON") from exc
        text = data.get("text")
        if not isinstance(text, str) or not text.strip():
            raise ClauseTransportError("completion response carries no text")
        return text.strip()


def generate_clause(req: ClauseRequest, generator=None, prompt_id: str | None = None) -> RecordingPrompt:
    """Build a validated RecordingPrompt for one correction.

    generator is a CompletionClient (or anything with .complete) or None for
    the offline carrier templates. An invalid completion is retried once;
    transport failures and second misses fall back.
    """
    pid = prompt_id if prompt_id is not None else f"clause-{req.correction_id}"
    target = tuple(req.corrected)
    if generator is not None:
        instruction = build_prompt(req)
        for attempt in (1, 2):
            try:
                text = generator.complete(instruction)
            except ClauseTransportError as exc:
                logger.warning("clause generation fell back for %s: %s", req.correction_id, exc)
                break
            if not validate_clause(text, list(target)):
                return RecordingPrompt(pid, text, target, source=SOURCE_LLM)
            logger.warning(
                "completion for %s failed validation (attempt %d): %r", req.correction_id, attempt, text
            )
    return RecordingPrompt(pid, fallback_clause(req), target, source=SOURCE_FALLBACK)
