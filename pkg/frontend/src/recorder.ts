// Clause recorder: microphone capture -> 16 kHz mono PCM with live peaks,
// WAV upload over HTTP. The capture plumbing is browser-only; ClipRecorder
// itself is pure and unit-tested with injected chunks.

import { encodeWavPcm16, floatToInt16, resampleLinear, TARGET_RATE } from "./audio";
import { PeakAccumulator, WaveformPeaks } from "./peaks";

export class ClipRecorder {
  private chunks: Float32Array[] = [];
  private peaksAcc: PeakAccumulator;

  constructor(private sourceRate: number, peakWindow = 1600) {
    this.peaksAcc = new PeakAccumulator(peakWindow);
  }

  push(chunk: Float32Array): void {
    this.chunks.push(chunk.slice());
    this.peaksAcc.feed(floatToInt16(resampleLinear(chunk, this.sourceRate)));
  }

  livePeaks(): WaveformPeaks {
    return this.peaksAcc.result();
  }

  finish(): { wav: ArrayBuffer; samples: Int16Array; durationS: number; peaks: WaveformPeaks } {
    let total = 0;
    for (const c of this.chunks) total += c.length;
    const joined = new Float32Array(total);
    let offset = 0;
    for (const c of this.chunks) {
      joined.set(c, offset);
      offset += c.length;
    }
    const samples = floatToInt16(resampleLinear(joined, this.sourceRate));
    return {
      wav: encodeWavPcm16(samples),
      samples,
      durationS: samples.length / TARGET_RATE,
      peaks: this.livePeaks(),
    };
  }
}

export interface UploadResult {
  prompt_id: string;
  duration_s: number;
}

export async function uploadRecording(
  apiBase: string,
  sessionId: string,
  promptId: string,
  wav: ArrayBuffer,
  fetchFn: typeof fetch = fetch,
): Promise<UploadResult> {
  const form = new FormData();
  form.append("prompt_id", promptId);
  form.append("file", new Blob([wav], { type: "audio/wav" }), `${promptId}.wav`);
  const resp = await fetchFn(`${apiBase}/sessions/${sessionId}/recordings`, {
    method: "POST",
    body: form,
  });
  if (!resp.ok) {
    const body = await resp.text();
    throw new Error(`upload failed (${resp.status}): ${body}`);
  }
  return (await resp.json()) as UploadResult;
}

export async function setPromptStatus(
  apiBase: string,
  sessionId: string,
  promptId: string,
  status: "skipped" | "deleted" | "pending",
  fetchFn: typeof fetch = fetch,
): Promise<void> {
  const resp = await fetchFn(`${apiBase}/sessions/${sessionId}/prompts/${promptId}`, {
    method: "PATCH",
    headers: { "content-type": "application/json" },
    body: JSON.stringify({ status }),
  });
  if (!resp.ok) throw new Error(`status change failed (${resp.status})`);
}

// Browser-only capture: feeds Float32 chunks from the microphone into a
// ClipRecorder until stop() is called.
export class MicCapture {
  private context: AudioContext | null = null;
  private stream: MediaStream | null = null;
  private node: ScriptProcessorNode | null = null;

  async start(onChunk: (chunk: Float32Array, rate: number) => void): Promise<number> {
    this.stream = await navigator.mediaDevices.getUserMedia({ audio: true });
    this.context = new AudioContext();
    const source = this.context.createMediaStreamSource(this.stream);
    this.node = this.context.createScriptProcessor(4096, 1, 1);
    const rate = this.context.sampleRate;
    this.node.onaudioprocess = (ev) => onChunk(ev.inputBuffer.getChannelData(0), rate);
    source.connect(this.node);
    this.node.connect(this.context.destination);
    return rate;
  }

  async stop(): Promise<void> {
    this.node?.disconnect();
    this.stream?.getTracks().forEach((t) => t.stop());
    await this.context?.close();
    this.node = null;
    this.stream = null;
    this.context = null;
  }
}
