// Browser entry point: two screens (captioning, recording) gated by the
// session phase. Correctors select tokens and submit yellow corrections or
// red uncertainty flags; the speaker drives ASR and records clause prompts
// with live waveform feedback.

import { draftError, CorrectionFlow, EditDraft } from "./editor";
import { floatToInt16, int16ToPcmBytes, resampleLinear } from "./audio";
import { CaptionState, HighlightKind, PromptView } from "./state";
import { ClipRecorder, MicCapture, setPromptStatus, uploadRecording } from "./recorder";
import { SessionSocket } from "./wsClient";

const apiBase = (window as any).CAPLOOP_API ?? "";
const wsBase = apiBase.replace(/^http/, "ws") || `ws://${location.host}`;

const state = new CaptionState();
const flow = new CorrectionFlow(state);

let socket: SessionSocket | null = null;
let role: "speaker" | "corrector" = "corrector";
let sessionId = "";
let selection: { start: number; end: number } | null = null;
let capture: MicCapture | null = null;
let recorder: ClipRecorder | null = null;
let recordingPromptId: string | null = null;
let lastTake: { promptId: string; wav: ArrayBuffer } | null = null;

const $ = (id: string) => document.getElementById(id)!;

function setStatus(text: string) {
  $("status").textContent = text;
}

function renderCaptions() {
  const host = $("captions");
  host.innerHTML = "";
  for (const tok of flow.renderCaptions()) {
    const span = document.createElement("span");
    span.textContent = tok.text + " ";
    span.className = `tok tok-${tok.style}`;
    if (tok.index !== null) {
      const index = tok.index;
      span.dataset.index = String(index);
      span.onclick = () => {
        if (selection && selection.start === index && selection.end === index + 1) {
          selection = null; // click again to clear
        } else if (selection && index === selection.end) {
          selection = { start: selection.start, end: index + 1 }; // extend right
        } else {
          selection = { start: index, end: index + 1 };
        }
        renderCaptions();
      };
      if (selection && selection.start <= index && index < selection.end) {
        span.classList.add("tok-selected");
      }
    }
    host.appendChild(span);
  }
  $("version").textContent = `v${state.version} · model ${state.modelVersion} · ${state.phase}`;
}

function renderPrompts() {
  const host = $("prompts");
  host.innerHTML = "";
  for (const prompt of state.prompts) {
    host.appendChild(promptRow(prompt));
  }
  $("recording-screen").classList.toggle("hidden", state.phase !== "recording");
  $("captioning-screen").classList.toggle("hidden", state.phase === "recording");
}

function promptRow(prompt: PromptView): HTMLElement {
  const row = document.createElement("div");
  row.className = `prompt prompt-${prompt.status}`;
  const text = document.createElement("div");
  text.className = "prompt-clause";
  text.textContent = prompt.clause;
  const meta = document.createElement("span");
  meta.className = "prompt-status";
  meta.textContent = ` [${prompt.status}]`;
  text.appendChild(meta);
  row.appendChild(text);

  const canvas = document.createElement("canvas");
  canvas.width = 480;
  canvas.height = 48;
  canvas.className = "waveform";
  row.appendChild(canvas);

  const controls = document.createElement("div");
  const recordBtn = button("Record", async () => {
    if (recordingPromptId) return;
    recordingPromptId = prompt.id;
    capture = new MicCapture();
    try {
      await capture.start((chunk, rate) => {
        if (!recorder) recorder = new ClipRecorder(rate); // first chunk defines the rate
        recorder.push(chunk);
        drawPeaks(canvas, recorder.livePeaks().peaks);
      });
      setStatus(`recording ${prompt.id}...`);
    } catch (err) {
      recordingPromptId = null;
      setStatus(`microphone unavailable: ${err}. Grant mic access and retry.`);
    }
  });
  const stopBtn = button("Stop", async () => {
    if (recordingPromptId !== prompt.id || !recorder) return;
    await capture?.stop();
    const take = recorder.finish();
    lastTake = { promptId: prompt.id, wav: take.wav };
    drawPeaks(canvas, take.peaks.peaks);
    setStatus(`took ${take.durationS.toFixed(1)}s; upload or re-record`);
    recorder = null;
    recordingPromptId = null;
  });
  const uploadBtn = button("Upload", async () => {
    if (!lastTake || lastTake.promptId !== prompt.id) {
      setStatus("record a take first");
      return;
    }
    try {
      await uploadRecording(apiBase, sessionId, prompt.id, lastTake.wav);
      setStatus(`${prompt.id} uploaded`);
    } catch (err) {
      setStatus(`upload failed, take kept locally: ${err}`);
    }
  });
  const skipBtn = button("Skip", () => setPromptStatus(apiBase, sessionId, prompt.id, "skipped"));
  const deleteBtn = button("Delete", () => setPromptStatus(apiBase, sessionId, prompt.id, "deleted"));
  for (const b of [recordBtn, stopBtn, uploadBtn, skipBtn, deleteBtn]) controls.appendChild(b);
  row.appendChild(controls);
  return row;
}

function button(label: string, onClick: () => void): HTMLButtonElement {
  const b = document.createElement("button");
  b.textContent = label;
  b.onclick = onClick;
  return b;
}

export function drawPeaks(canvas: HTMLCanvasElement, peaks: number[]) {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.fillStyle = "#3a7";
  const barWidth = Math.max(1, canvas.width / Math.max(1, peaks.length));
  peaks.forEach((p, i) => {
    const h = Math.max(1, p * canvas.height);
    ctx.fillRect(i * barWidth, (canvas.height - h) / 2, barWidth - 0.5, h);
  });
}

async function join() {
  sessionId = ($("session-id") as HTMLInputElement).value.trim();
  role = ($("role") as HTMLSelectElement).value as typeof role;
  if (!sessionId) {
    const resp = await fetch(`${apiBase}/sessions`, { method: "POST" });
    sessionId = (await resp.json()).id;
    ($("session-id") as HTMLInputElement).value = sessionId;
  }
  socket = new SessionSocket(wsBase, sessionId);
  socket.on("hello", (env) => {
    const snap = env.payload.snapshot as any;
    if (snap) {
      state.loadSnapshot(snap.document);
      state.phase = snap.phase;
      state.modelVersion = snap.active_model.version;
      state.setPrompts(snap.prompts ?? []);
    }
    setStatus(`joined as ${env.payload.participant ?? "?"}`);
    renderCaptions();
    renderPrompts();
  });
  socket.on("caption_delta", async (env) => {
    const result = state.applyDelta(env.payload as any);
    if (result === "gap") {
      const snap = await (await fetch(`${apiBase}/sessions/${sessionId}`)).json();
      state.loadSnapshot(snap.document);
    }
    flow.reconcile();
    renderCaptions();
  });
  socket.on("prompts_ready", (env) => {
    state.phase = "recording";
    const prompts = (env.payload.prompts as PromptView[]) ?? [];
    if (prompts.length) state.setPrompts(state.prompts.concat(prompts));
    if (env.payload.cancelled) state.phase = "idle";
    renderPrompts();
  });
  socket.on("recording_meta", (env) => {
    state.updatePrompt(env.payload.prompt_id as string, env.payload.status as string);
    renderPrompts();
  });
  socket.on("model_updated", (env) => {
    state.modelVersion = env.payload.version as number;
    state.phase = "idle";
    setStatus(`model updated to v${state.modelVersion}`);
    renderCaptions();
    renderPrompts();
  });
  socket.on("start_asr", () => {
    state.phase = "captioning";
    renderCaptions();
  });
  socket.on("stop_asr", () => {
    state.phase = "idle";
    renderCaptions();
  });
  socket.on("error", (env) => {
    const code = env.payload.code as string;
    if (code === "conflict") {
      const draft = flow.onConflict(env.payload.ref as string);
      renderCaptions();
      if (draft) {
        ($("replacement") as HTMLInputElement).value = draft.replacement;
        selection = { start: draft.start, end: draft.end };
        setStatus("someone edited that span first; adjust and resubmit");
      }
    } else {
      setStatus(`error ${code}: ${env.payload.message}`);
    }
  });
  await socket.connect();
  socket.hello(role);
  $("speaker-controls").classList.toggle("hidden", role !== "speaker");
}

function submitCorrection(kind: HighlightKind) {
  if (!socket || !selection) {
    setStatus("select a word first");
    return;
  }
  const draft: EditDraft = {
    start: selection.start,
    end: selection.end,
    replacement: kind === "corrected" ? ($("replacement") as HTMLInputElement).value : "",
    kind,
  };
  const problem = draftError(state, draft);
  if (problem) {
    setStatus(problem);
    return;
  }
  const env = flow.submit(draft, sessionId, socket.nextSeq());
  socket.sendPrebuilt(env);
  selection = null;
  ($("replacement") as HTMLInputElement).value = "";
  renderCaptions();
}

async function startAsr() {
  socket?.sendEnvelope("start_asr", {});
  capture = new MicCapture();
  await capture.start((chunk, rate) => {
    const pcm = int16ToPcmBytes(floatToInt16(resampleLinear(chunk, rate)));
    socket?.sendPcm(pcm);
  });
}

async function stopAsr() {
  await capture?.stop();
  socket?.sendEnvelope("stop_asr", {});
}

export function wire() {
  $("join").onclick = () => void join();
  $("correct").onclick = () => submitCorrection("corrected");
  $("flag").onclick = () => submitCorrection("uncertain");
  $("start-asr").onclick = () => void startAsr();
  $("stop-asr").onclick = () => void stopAsr();
  $("start-recording").onclick = async () => {
    await fetch(`${apiBase}/sessions/${sessionId}/prompts`, { method: "POST" });
  };
  $("train").onclick = async () => {
    await fetch(`${apiBase}/sessions/${sessionId}/train`, { method: "POST" });
    state.phase = "training";
    renderCaptions();
  };
}

if (typeof document !== "undefined" && document.readyState !== "loading") {
  wire();
} else if (typeof document !== "undefined") {
  document.addEventListener("DOMContentLoaded", wire);
}
