"""Session lifecycle: one speaker plus any number of correctors drive the
loop idle -> captioning -> recording -> training -> idle. All mutations are
serialized through the session lock; the fine-tune queue reports back from
its worker thread through the same lock."""

import io
import logging
import threading
import uuid
import wave
from dataclasses import dataclass

from caploop.adapt import (
    ExternalTrainer,
    FinetuneJob,
    FinetuneOrchestrator,
    Hyperparams,
    RecordingMeta,
    ReferenceTrainer,
    assemble_dataset,
)
from caploop.clausegen import (
    STATUS_DELETED,
    STATUS_PENDING,
    STATUS_RECORDED,
    STATUS_SKIPPED,
    ClauseRequest,
    RecordingPrompt,
    generate_clause,
)
from caploop.document import CaptionDocument, Conflict, CorrectionEvent, Delta
from caploop.storage import SessionLogWriter, SessionPaths
from caploop.transcribe import EngineState, Hypothesis, ModelRegistry, Transcriber
from caploop.wire import correction_payload, decode_pcm

logger = logging.getLogger(__name__)

PHASE_IDLE = "idle"
PHASE_CAPTIONING = "captioning"
PHASE_RECORDING = "recording"
PHASE_TRAINING = "training"

ROLE_SPEAKER = "speaker"
ROLE_CORRECTOR = "corrector"


class SessionError(Exception):
    def __init__(self, code: str, message: str, http_status: int = 400):
        super().__init__(message)
        self.code = code
        self.http_status = http_status


@dataclass
class RoundInfo:
    prompt_ids: list[str]
    since_version: int


class SessionState:
    def __init__(
        self,
        session_id: str,
        paths: SessionPaths,
        base_engine: EngineState,
        hyper: Hyperparams | None = None,
        clause_generator=None,
        trainer=None,
        chunk_hop_s: float = 1.0,
        seconds_per_word: float = 0.4,
        on_event=None,  # callable(kind: str, data: dict), may fire from the trainer thread
    ):
        self.id = session_id
        self.paths = paths
        self.document = CaptionDocument()
        self.registry = ModelRegistry(base_engine)
        self.prompts: dict[str, RecordingPrompt] = {}
        self.recordings: dict[str, RecordingMeta] = {}
        self.participants: list[tuple[str, str]] = []
        self.phase = PHASE_IDLE
        self.hyper = hyper or Hyperparams()
        self.clause_generator = clause_generator
        self.seconds_per_word = seconds_per_word
        self.chunk_hop_s = chunk_hop_s
        self.on_event = on_event
        self.current_round: RoundInfo | None = None
        self.last_job: FinetuneJob | None = None

        self._lock = threading.RLock()
        self._last_round_version = 0
        self._participant_counter = 0
        self._prompt_counter = 0
        self._transcriber: Transcriber | None = None
        self._script: list[str] = []
        self._words_fed = 0
        self._audio_seconds = 0.0
        self._log = SessionLogWriter(paths.log)
        self._orchestrator = FinetuneOrchestrator(
            self.registry, trainer or ReferenceTrainer(), paths.jobs_dir, on_event=self._training_event
        )
        self._log.append("session_created", {"id": session_id, "base_engine": base_engine.to_dict()})

    # -- participants --------------------------------------------------------

    def join(self, role: str) -> str:
        with self._lock:
            if role not in (ROLE_SPEAKER, ROLE_CORRECTOR):
                raise SessionError("bad_role", f"unknown role {role!r}")
            if role == ROLE_SPEAKER and any(r == ROLE_SPEAKER for _, r in self.participants):
                raise SessionError("speaker_taken", "this session already has a speaker")
            self._participant_counter += 1
            pid = f"p{self._participant_counter}"
            self.participants.append((pid, role))
            self._log.append("participant_joined", {"participant": pid, "role": role})
            return pid

    def role_of(self, participant: str) -> str | None:
        for pid, role in self.participants:
            if pid == participant:
                return role
        return None

    # -- captioning ----------------------------------------------------------

    def start_asr(self, script: list[str] | None = None):
        with self._lock:
            self._require_phase(PHASE_IDLE, "start_asr")
            self._transcriber = Transcriber(self.registry, self.chunk_hop_s)
            self._transcriber.begin_utterance()
            self._script = list(script or [])
            self._words_fed = 0
            self._audio_seconds = 0.0
            self._set_phase(PHASE_CAPTIONING)
            self._log.append(
                "asr_started",
                {"model_version": self.registry.active.id, "script": self._script},
            )

    def feed_pcm(self, data: bytes) -> list[Hypothesis]:
        with self._lock:
            self._require_phase(PHASE_CAPTIONING, "audio")
            chunk = decode_pcm(data)
            self._audio_seconds += chunk.duration
            words: list[str] = []
            if self._script:
                # release scripted ground truth at the configured speaking pace
                target = min(len(self._script), int(self._audio_seconds / self.seconds_per_word))
                if target > self._words_fed:
                    words = self._script[self._words_fed : target]
                    self._words_fed = target
            return self._transcriber.feed(chunk, words)

    def stop_asr(self) -> tuple[Hypothesis, Delta | None]:
        with self._lock:
            self._require_phase(PHASE_CAPTIONING, "stop_asr")
            final = self._transcriber.finalize()
            delta = None
            if final.words:
                delta = self.document.append_segment(list(final.words))
                self._log.append(
                    "segment_appended",
                    {
                        "words": list(final.words),
                        "version": delta.version,
                        "utterance": final.utterance_id,
                        "model_version": final.model_version,
                    },
                )
            else:
                self._log.append("segment_empty", {"utterance": final.utterance_id})
            self._transcriber = None
            self._set_phase(PHASE_IDLE)
            self._log.append("asr_stopped", {})
            return final, delta

    # -- corrections ----------------------------------------------------------

    def apply_correction(self, event: CorrectionEvent) -> Delta | Conflict:
        with self._lock:
            result = self.document.apply_correction(event)
            if isinstance(result, Conflict):
                self._log.append(
                    "correction_conflict", {"event_id": event.id, "reason": result.reason}
                )
                return result
            kind = "correction_applied" if event.replacement else "flag_applied"
            self._log.append(kind, {"event": correction_payload(event), "version": result.version})
            return result

    # -- recording ------------------------------------------------------------

    def start_recording(self) -> list[RecordingPrompt]:
        with self._lock:
            self._require_phase(PHASE_IDLE, "start_recording")
            corrections = self.document.collect_corrections(self._last_round_version)
            if not corrections:
                raise SessionError("no_corrections", "no corrections since the last round")
            seen: set[frozenset] = set()
            prompts: list[RecordingPrompt] = []
            for event in corrections:
                key = frozenset(w.lower() for w in event.replacement)
                if key in seen:
                    continue
                seen.add(key)
                self._prompt_counter += 1
                request = ClauseRequest(event.original, event.replacement, event.id)
                prompts.append(
                    generate_clause(request, self.clause_generator, prompt_id=f"rp{self._prompt_counter}")
                )
            for prompt in prompts:
                self.prompts[prompt.id] = prompt
            self.current_round = RoundInfo([p.id for p in prompts], self._last_round_version)
            self._last_round_version = self.document.version
            self._set_phase(PHASE_RECORDING)
            self._log.append(
                "prompts_generated",
                {
                    "prompts": [p.to_dict() for p in prompts],
                    "since_version": self.current_round.since_version,
                },
            )
            return prompts

    def upload_recording(self, prompt_id: str, wav_bytes: bytes, speaker: str = "") -> RecordingMeta:
        with self._lock:
            self._require_phase(PHASE_RECORDING, "upload_recording")
            prompt = self.prompts.get(prompt_id)
            if prompt is None:
                raise SessionError("unknown_prompt", f"no prompt {prompt_id!r}", http_status=404)
            if prompt.status == STATUS_DELETED:
                raise SessionError("prompt_deleted", f"prompt {prompt_id} was deleted")
            try:
                with wave.open(io.BytesIO(wav_bytes), "rb") as parsed:
                    channels = parsed.getnchannels()
                    width = parsed.getsampwidth()
                    rate = parsed.getframerate()
                    frames = parsed.getnframes()
            except wave.Error as exc:
                raise SessionError("bad_format", f"expected a 16 kHz mono s16le WAV: {exc}")
            if (channels, width, rate) != (1, 2, 16000):
                raise SessionError(
                    "bad_format",
                    f"expected 16 kHz mono s16le WAV, got {rate} Hz x{channels} width={width}",
                )
            path = self.paths.recordings_dir / f"{prompt_id}.wav"
            path.write_bytes(wav_bytes)  # re-upload replaces the previous take
            duration = frames / rate
            meta = RecordingMeta(prompt_id, str(path), duration, speaker, len(wav_bytes))
            self.recordings[prompt_id] = meta
            prompt.status = STATUS_RECORDED
            self._log.append(
                "recording_saved",
                {
                    "prompt_id": prompt_id,
                    "file": path.name,
                    "duration_s": duration,
                    "size_bytes": len(wav_bytes),
                    "speaker": speaker,
                },
            )
            return meta

    def set_prompt_status(self, prompt_id: str, status: str) -> RecordingPrompt:
        with self._lock:
            self._require_phase(PHASE_RECORDING, "prompt status change")
            prompt = self.prompts.get(prompt_id)
            if prompt is None:
                raise SessionError("unknown_prompt", f"no prompt {prompt_id!r}", http_status=404)
            if status not in (STATUS_PENDING, STATUS_SKIPPED, STATUS_DELETED):
                raise SessionError("bad_status", f"cannot set prompt status {status!r}")
            prompt.status = status
            self._log.append("prompt_status", {"prompt_id": prompt_id, "status": status})
            return prompt

    def cancel_recording(self):
        """Leave the recording phase without training (e.g. every prompt was
        skipped); the round's corrections stay eligible for the next round."""
        with self._lock:
            self._require_phase(PHASE_RECORDING, "cancel_recording")
            if self.current_round is not None:
                self._last_round_version = self.current_round.since_version
                for pid in self.current_round.prompt_ids:
                    if self.prompts[pid].status == STATUS_PENDING:
                        self.prompts[pid].status = STATUS_SKIPPED
                        self._log.append("prompt_status", {"prompt_id": pid, "status": STATUS_SKIPPED})
            self.current_round = None
            self._log.append("recording_cancelled", {})
            self._set_phase(PHASE_IDLE)

    # -- training ---------------------------------------------------------------

    def finish_recording_and_train(self) -> FinetuneJob:
        with self._lock:
            self._require_phase(PHASE_RECORDING, "train")
            round_info = self.current_round
            prompt_objs = [self.prompts[pid] for pid in (round_info.prompt_ids if round_info else [])]
            recorded = [p for p in prompt_objs if p.status == STATUS_RECORDED]
            if not recorded:
                raise SessionError("no_recordings", "no recorded prompts in this round")
            pairs = assemble_dataset(recorded, [self.recordings[p.id] for p in recorded])
            job = self._orchestrator.schedule_finetune(pairs, self.hyper)
            self.last_job = job
            self._set_phase(PHASE_TRAINING)
            self._log.append(
                "training_started",
                {"job": job.id, "base": job.base, "prompt_ids": [p.id for p in recorded]},
            )
            return job

    def _training_event(self, kind: str, job: FinetuneJob, version):
        # runs on the orchestrator worker thread
        with self._lock:
            if kind == "model_updated":
                self._log.append(
                    "model_updated",
                    {
                        "version": version.id,
                        "parent": version.parent,
                        "engine": version.engine.to_dict(),
                        "job": job.id,
                    },
                )
                payload = {"version": version.id, "parent": version.parent, "job": job.id}
            else:
                self._log.append("training_failed", {"job": job.id, "error": job.error})
                payload = {"job": job.id, "error": job.error}
            self._set_phase(PHASE_IDLE)
        self._emit(kind, payload)

    # -- queries -----------------------------------------------------------------

    def snapshot(self) -> dict:
        with self._lock:
            return {
                "id": self.id,
                "phase": self.phase,
                "participants": [{"id": pid, "role": role} for pid, role in self.participants],
                "active_model": {
                    "version": self.registry.active.id,
                    "parent": self.registry.active.parent,
                },
                "document": self.document.snapshot(),
                "prompts": [p.to_dict() for p in self.prompts.values()],
                "last_job": None
                if self.last_job is None
                else {"id": self.last_job.id, "state": self.last_job.state, "result": self.last_job.result},
            }

    def wait_for_training(self, timeout: float = 10.0) -> bool:
        job = self.last_job
        return job.wait(timeout) if job else True

    def close(self):
        self._orchestrator.shutdown(wait=False)

    # -- internals -----------------------------------------------------------------

    def _require_phase(self, phase: str, what: str):
        if self.phase != phase:
            raise SessionError(
                "bad_phase", f"{what} requires phase {phase}, session is {self.phase}"
            )

    def _set_phase(self, phase: str):
        self.phase = phase
        self._log.append("phase_changed", {"phase": phase})

    def _emit(self, kind: str, data: dict):
        if self.on_event is not None:
            try:
                self.on_event(kind, data)
            except Exception:
                logger.exception("session event handler failed")


class SessionManager:
    """All live sessions plus the shared construction knobs."""

    def __init__(self, store, base_engine_factory, hyper=None, clause_generator=None,
                 trainer_factory=None, chunk_hop_s: float = 1.0, seconds_per_word: float = 0.4):
        self.store = store
        self.base_engine_factory = base_engine_factory
        self.hyper = hyper or Hyperparams()
        self.clause_generator = clause_generator
        self.trainer_factory = trainer_factory or ReferenceTrainer
        self.chunk_hop_s = chunk_hop_s
        self.seconds_per_word = seconds_per_word
        self.sessions: dict[str, SessionState] = {}
        self._lock = threading.Lock()

    def create(self, on_event=None) -> SessionState:
        session_id = uuid.uuid4().hex[:12]
        paths = self.store.create(session_id)
        state = SessionState(
            session_id,
            paths,
            self.base_engine_factory(),
            hyper=self.hyper,
            clause_generator=self.clause_generator,
            trainer=self.trainer_factory(),
            chunk_hop_s=self.chunk_hop_s,
            seconds_per_word=self.seconds_per_word,
            on_event=on_event,
        )
        with self._lock:
            self.sessions[session_id] = state
        return state

    def get(self, session_id: str) -> SessionState:
        state = self.sessions.get(session_id)
        if state is None:
            raise SessionError("unknown_session", f"no session {session_id!r}", http_status=404)
        return state

    def close_all(self):
        for state in self.sessions.values():
            state.close()


def make_trainer(trainer: str, trainer_cmd):
    if trainer == "external":
        if not trainer_cmd:
            raise ValueError("external trainer requires trainer_cmd")
        return ExternalTrainer(list(trainer_cmd))
    return ReferenceTrainer()
