"""HTTP + WebSocket service wiring the session loop to the wire protocol.

Text WS frames carry JSON envelopes, binary frames carry the speaker's PCM.
Domain rejections (wrong phase, conflicts) come back as error envelopes and
leave the connection open; protocol violations close it with an application
code."""

import asyncio
import json
import logging
from contextlib import asynccontextmanager

from fastapi import FastAPI, File, Form, UploadFile, WebSocket
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, PlainTextResponse

from caploop import __version__, kernels
from caploop.clausegen import CompletionClient
from caploop.config import ServiceConfig
from caploop.document import Delta
from caploop.sessions import (
    PHASE_CAPTIONING,
    ROLE_SPEAKER,
    SessionError,
    SessionManager,
    SessionState,
    make_trainer,
)
from caploop.storage import SessionStore
from caploop.transcribe import EngineState
from caploop.wire import (
    Envelope,
    ProtocolError,
    SequenceGuard,
    correction_from_payload,
    decode_message,
    delta_payload,
    encode_message,
)

logger = logging.getLogger(__name__)


class Hub:
    """Per-session fan-out of envelopes to connected websockets."""

    def __init__(self):
        self._conns: dict[str, dict[WebSocket, dict]] = {}

    def register(self, session_id: str, ws: WebSocket) -> dict:
        info = {"seq": 0, "participant": None, "role": None}
        self._conns.setdefault(session_id, {})[ws] = info
        return info

    def unregister(self, session_id: str, ws: WebSocket):
        self._conns.get(session_id, {}).pop(ws, None)

    def connections(self, session_id: str) -> list[tuple[WebSocket, dict]]:
        return list(self._conns.get(session_id, {}).items())

    async def send(self, session_id: str, ws: WebSocket, msg_type: str, payload: dict):
        info = self._conns.get(session_id, {}).get(ws)
        if info is None:
            return
        info["seq"] += 1
        frame = encode_message(Envelope(msg_type, session_id, info["seq"], payload))
        try:
            await ws.send_text(frame)
        except Exception:
            self.unregister(session_id, ws)

    async def broadcast(self, session_id: str, msg_type: str, payload: dict):
        await asyncio.gather(
            *(self.send(session_id, ws, msg_type, payload) for ws, _ in self.connections(session_id)),
            return_exceptions=True,
        )


def _base_engine_factory(config: ServiceConfig):
    def factory() -> EngineState:
        confusion = {}
        if config.base_confusion:
            with open(config.base_confusion, encoding="utf-8") as fh:
                confusion = json.load(fh)
        return EngineState("mock", confusion, label=config.engine_label)

    return factory


def create_app(config: ServiceConfig | None = None) -> FastAPI:
    config = config or ServiceConfig.load()

    clause_generator = None
    if config.completion_url:
        clause_generator = CompletionClient(
            config.completion_url,
            config.completion_model,
            api_key=config.completion_api_key,
            timeout=config.completion_timeout,
        )
    manager = SessionManager(
        SessionStore(config.data_dir),
        _base_engine_factory(config),
        hyper=config.hyperparams(),
        clause_generator=clause_generator,
        trainer_factory=lambda: make_trainer(config.trainer, config.trainer_cmd),
        chunk_hop_s=config.chunk_hop_s,
        seconds_per_word=config.seconds_per_word,
    )
    hub = Hub()

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        app.state.loop = asyncio.get_running_loop()
        yield
        manager.close_all()

    app = FastAPI(title="caploop", version=__version__, lifespan=lifespan)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=list(config.cors_origins),
        allow_methods=["*"],
        allow_headers=["*"],
    )
    app.state.manager = manager
    app.state.hub = hub
    app.state.config = config
    app.state.loop = None

    @app.exception_handler(SessionError)
    async def _session_error(request, err: SessionError):
        return JSONResponse(
            status_code=err.http_status, content={"error": {"code": err.code, "message": str(err)}}
        )

    def _session_events(session_id: str):
        """Bridge training-thread completions onto the event loop."""

        def on_event(kind: str, data: dict):
            loop = app.state.loop
            if loop is None or loop.is_closed():
                return
            if kind == "model_updated":
                coro = hub.broadcast(session_id, "model_updated", data)
            else:
                coro = hub.broadcast(
                    session_id, "error",
                    {"code": "training_failed", "message": data.get("error") or "training failed"},
                )
            loop.call_soon_threadsafe(lambda: asyncio.ensure_future(coro))

        return on_event

    # -- HTTP ----------------------------------------------------------------

    @app.get("/health")
    async def health():
        return {"status": "ok", "version": __version__, "kernel_backend": kernels.BACKEND}

    @app.post("/sessions", status_code=201)
    async def create_session():
        state = manager.create()
        state.on_event = _session_events(state.id)
        return state.snapshot()

    @app.get("/sessions/{session_id}")
    async def get_session(session_id: str):
        return manager.get(session_id).snapshot()

    @app.get("/sessions/{session_id}/log")
    async def get_log(session_id: str):
        state = manager.get(session_id)
        return PlainTextResponse(state.paths.log.read_text(encoding="utf-8"))

    @app.get("/sessions/{session_id}/prompts")
    async def get_prompts(session_id: str):
        state = manager.get(session_id)
        return [p.to_dict() for p in state.prompts.values()]

    @app.post("/sessions/{session_id}/prompts", status_code=201)
    async def generate_prompts(session_id: str):
        state = manager.get(session_id)
        prompts = state.start_recording()
        await hub.broadcast(session_id, "prompts_ready", {"prompts": [p.to_dict() for p in prompts]})
        return [p.to_dict() for p in prompts]

    @app.delete("/sessions/{session_id}/prompts")
    async def cancel_recording(session_id: str):
        state = manager.get(session_id)
        state.cancel_recording()
        await hub.broadcast(session_id, "prompts_ready", {"prompts": [], "cancelled": True})
        return {"phase": state.phase}

    @app.patch("/sessions/{session_id}/prompts/{prompt_id}")
    async def patch_prompt(session_id: str, prompt_id: str, body: dict):
        state = manager.get(session_id)
        prompt = state.set_prompt_status(prompt_id, body.get("status", ""))
        meta = state.recordings.get(prompt_id)
        await hub.broadcast(
            session_id, "recording_meta",
            {
                "prompt_id": prompt_id,
                "duration_s": meta.duration_s if meta else 0.0,
                "status": prompt.status,
            },
        )
        return prompt.to_dict()

    @app.post("/sessions/{session_id}/recordings", status_code=201)
    async def upload_recording(session_id: str, prompt_id: str = Form(...), file: UploadFile = File(...)):
        state = manager.get(session_id)
        speaker = next((pid for pid, role in state.participants if role == ROLE_SPEAKER), "")
        meta = state.upload_recording(prompt_id, await file.read(), speaker=speaker)
        await hub.broadcast(
            session_id, "recording_meta",
            {
                "prompt_id": meta.prompt_id,
                "duration_s": meta.duration_s,
                "status": "recorded",
                "size_bytes": meta.size_bytes,
            },
        )
        return meta.to_dict()

    @app.post("/sessions/{session_id}/train", status_code=202)
    async def train(session_id: str):
        state = manager.get(session_id)
        job = state.finish_recording_and_train()
        return {"job": job.id, "state": job.state, "base": job.base}

    # -- WebSocket -------------------------------------------------------------

    async def _dispatch(state: SessionState, ws: WebSocket, info: dict, env: Envelope):
        session_id = state.id
        if env.type == "hello":
            try:
                participant = state.join(env.payload["role"])
            except SessionError as err:
                await hub.send(session_id, ws, "error", {"code": err.code, "message": str(err)})
                return
            info["participant"] = participant
            info["role"] = env.payload["role"]
            roster = [{"id": pid, "role": role} for pid, role in state.participants]
            await hub.send(
                session_id, ws, "hello",
                {
                    "role": info["role"],
                    "participant": participant,
                    "participants": roster,
                    "snapshot": state.snapshot(),
                },
            )
            for other_ws, other in hub.connections(session_id):
                if other_ws is not ws and other["participant"]:
                    await hub.send(
                        session_id, other_ws, "hello",
                        {"role": info["role"], "participant": participant, "participants": roster},
                    )
            return

        if info["participant"] is None:
            await hub.send(session_id, ws, "error", {"code": "not_joined", "message": "send hello first"})
            return

        if env.type == "correction":
            event = correction_from_payload(env.payload, author=info["participant"])
            result = state.apply_correction(event)
            if isinstance(result, Delta):
                await hub.broadcast(session_id, "caption_delta", delta_payload(result))
            else:
                await hub.send(
                    session_id, ws, "error",
                    {"code": "conflict", "message": result.reason, "ref": event.id},
                )
            return

        if env.type == "start_asr":
            self_role_guard(info)
            state.start_asr(env.payload.get("script"))
            await hub.broadcast(session_id, "start_asr", {"phase": state.phase})
            return

        if env.type == "stop_asr":
            self_role_guard(info)
            final, delta = state.stop_asr()
            if delta is not None:
                await hub.broadcast(session_id, "caption_delta", delta_payload(delta))
            await hub.broadcast(session_id, "stop_asr", {"phase": state.phase, "empty": final.empty})
            return

        await hub.send(
            session_id, ws, "error",
            {"code": "unexpected_type", "message": f"{env.type} is not accepted from clients"},
        )

    def self_role_guard(info: dict):
        if info["role"] != ROLE_SPEAKER:
            raise SessionError("role_required", "only the speaker controls the recognizer")

    @app.websocket("/ws/{session_id}")
    async def ws_endpoint(ws: WebSocket, session_id: str):
        await ws.accept()
        try:
            state = manager.get(session_id)
        except SessionError:
            await ws.close(code=4404, reason="unknown_session")
            return
        info = hub.register(session_id, ws)
        guard = SequenceGuard()
        try:
            while True:
                message = await ws.receive()
                if message["type"] == "websocket.disconnect":
                    break
                text = message.get("text")
                blob = message.get("bytes")
                try:
                    if text is not None:
                        env = decode_message(text)
                        guard.validate(env)
                        await _dispatch(state, ws, info, env)
                    elif blob is not None:
                        if info["role"] != ROLE_SPEAKER or state.phase != PHASE_CAPTIONING:
                            raise SessionError("bad_phase", "binary audio needs a captioning speaker")
                        partials = state.feed_pcm(blob)
                        if partials:
                            doc = state.document
                            await hub.broadcast(
                                session_id, "caption_delta",
                                {
                                    "version": doc.version,
                                    "start": len(doc.tokens),
                                    "removed": 0,
                                    "words": list(partials[-1].words),
                                    "origin": "asr",
                                    "preview": True,
                                },
                            )
                except SessionError as err:
                    await hub.send(session_id, ws, "error", {"code": err.code, "message": str(err)})
                except ProtocolError as err:
                    await hub.send(session_id, ws, "error", {"code": err.code, "message": str(err)})
                    await ws.close(code=4400, reason=err.code)
                    break
        finally:
            hub.unregister(session_id, ws)

    return app
