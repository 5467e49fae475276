"""Session persistence: an append-only JSONL event log plus WAV files under
one directory per session. Replaying a log reconstructs the session's
document, prompts, model lineage, phase, and participants exactly."""

import json
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

from caploop.clausegen import RecordingPrompt
from caploop.document import CaptionDocument, Conflict
from caploop.evalkit import SessionStats, normalize, wer
from caploop.transcribe import EngineState, ModelRegistry
from caploop.wire import correction_from_payload


@dataclass(frozen=True)
class SessionPaths:
    root: Path
    log: Path
    recordings_dir: Path
    jobs_dir: Path


class SessionStore:
    def __init__(self, root):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def _paths(self, session_id: str) -> SessionPaths:
        base = self.root / session_id
        return SessionPaths(
            root=base,
            log=base / "log.jsonl",
            recordings_dir=base / "recordings",
            jobs_dir=base / "jobs",
        )

    def create(self, session_id: str) -> SessionPaths:
        paths = self._paths(session_id)
        paths.recordings_dir.mkdir(parents=True, exist_ok=True)
        paths.jobs_dir.mkdir(parents=True, exist_ok=True)
        return paths

    def paths(self, session_id: str) -> SessionPaths:
        return self._paths(session_id)

    def list_sessions(self) -> list[str]:
        return sorted(p.name for p in self.root.iterdir() if (p / "log.jsonl").is_file())


class SessionLogWriter:
    """Append-only JSONL writer; one flushed line per event."""

    def __init__(self, path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def append(self, event_type: str, data: dict):
        line = json.dumps(
            {"ts": int(time.time() * 1000), "type": event_type, "data": data},
            ensure_ascii=False,
            separators=(",", ":"),
        )
        with self._lock:
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(line + "\n")


def read_log(path) -> list[dict]:
    entries = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                entries.append(json.loads(line))
    return entries


@dataclass
class ReplayedSession:
    session_id: str
    document: CaptionDocument
    prompts: dict[str, RecordingPrompt]  # insertion order = generation order
    lineage: list[tuple[int, int | None, dict]]  # (id, parent, engine dict)
    phase: str
    participants: list[tuple[str, str]]
    scripts: list[list[str]] = field(default_factory=list)  # one per captioning round


def replay_session(entries: list[dict]) -> ReplayedSession:
    """Rebuild session state from its event log; raises on any entry that
    does not apply cleanly (a log produced by this service always does)."""
    session_id = ""
    document = CaptionDocument()
    prompts: dict[str, RecordingPrompt] = {}
    registry: ModelRegistry | None = None
    phase = "idle"
    participants: list[tuple[str, str]] = []
    scripts: list[list[str]] = []

    for entry in entries:
        etype, data = entry["type"], entry["data"]
        if etype == "session_created":
            session_id = data["id"]
            registry = ModelRegistry(EngineState.from_dict(data["base_engine"]))
        elif etype == "participant_joined":
            participants.append((data["participant"], data["role"]))
        elif etype == "phase_changed":
            phase = data["phase"]
        elif etype == "asr_started":
            scripts.append(list(data.get("script") or []))
        elif etype == "segment_appended":
            document.append_segment(list(data["words"]))
            if document.version != data["version"]:
                raise ValueError(
                    f"replay diverged: version {document.version} != logged {data['version']}"
                )
        elif etype in ("correction_applied", "flag_applied"):
            event = correction_from_payload(data["event"])
            result = document.apply_correction(event)
            if isinstance(result, Conflict):
                raise ValueError(f"replayed correction {event.id} conflicted: {result.reason}")
        elif etype == "correction_conflict":
            pass  # informational; no state change
        elif etype == "prompts_generated":
            for raw in data["prompts"]:
                prompt = RecordingPrompt.from_dict(raw)
                prompts[prompt.id] = prompt
        elif etype == "prompt_status":
            prompts[data["prompt_id"]].status = data["status"]
        elif etype == "recording_saved":
            prompts[data["prompt_id"]].status = "recorded"
        elif etype == "training_started":
            pass
        elif etype == "model_updated":
            version = registry.swap_model(EngineState.from_dict(data["engine"]))
            if version.id != data["version"] or version.parent != data["parent"]:
                raise ValueError(
                    f"replay lineage diverged: got v{version.id}<-{version.parent}, "
                    f"logged v{data['version']}<-{data['parent']}"
                )
        elif etype == "training_failed":
            pass
        elif etype in ("asr_stopped", "segment_empty", "recording_cancelled"):
            pass
        else:
            raise ValueError(f"unknown log entry type {etype!r}")

    lineage = [
        (v.id, v.parent, v.engine.to_dict()) for v in (registry.lineage() if registry else [])
    ]
    return ReplayedSession(session_id, document, prompts, lineage, phase, participants, scripts)


def session_stats_from_log(entries: list[dict]) -> tuple[str, list[SessionStats]]:
    """Per-round stats for the improvement report. Each captioning round
    (asr_started..asr_stopped) becomes one session; WER is computable only
    when the round carried a reference script."""
    label = ""
    rounds: list[dict] = []
    current: dict | None = None
    for entry in entries:
        etype, data = entry["type"], entry["data"]
        if etype == "session_created":
            label = data["id"]
        elif etype == "asr_started":
            current = {"script": list(data.get("script") or []), "words": [],
                       "corrections": 0, "recordings": 0, "seconds": 0.0}
            rounds.append(current)
        elif etype == "segment_appended" and current is not None:
            current["words"].extend(data["words"])
        elif etype == "asr_stopped":
            current = None
        elif etype == "correction_applied" and rounds:
            rounds[-1]["corrections"] += 1
        elif etype == "recording_saved" and rounds:
            rounds[-1]["recordings"] += 1
            rounds[-1]["seconds"] += float(data.get("duration_s", 0.0))
    stats = []
    for i, r in enumerate(rounds, start=1):
        # the same normalization is applied to every engine and baseline
        ref = normalize(" ".join(r["script"]))
        hyp = normalize(" ".join(r["words"]))
        score = wer(ref, hyp) if ref else float("nan")
        stats.append(
            SessionStats(
                session_index=i,
                wer=score,
                corrections=r["corrections"],
                recordings=r["recordings"],
                recorded_seconds=r["seconds"],
            )
        )
    return label, stats
