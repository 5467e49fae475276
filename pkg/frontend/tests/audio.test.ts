import { describe, expect, it } from "vitest";

import { encodeWavPcm16, floatToInt16, int16ToPcmBytes, parseWavHeader, resampleLinear } from "../src/audio";
import { ClipRecorder } from "../src/recorder";

describe("conversion to the server contract", () => {
  it("encodes a parseable 16 kHz mono 16-bit WAV", () => {
    const samples = new Int16Array(16000); // 1 s silence
    const wav = encodeWavPcm16(samples);
    const info = parseWavHeader(wav);
    expect(info).toEqual({ rate: 16000, channels: 1, bits: 16, frames: 16000 });
    expect(wav.byteLength).toBe(44 + 32000);
  });

  it("float conversion clamps and scales", () => {
    const out = floatToInt16(new Float32Array([0, 1, -1, 2, -2, 0.5]));
    expect(Array.from(out)).toEqual([0, 32767, -32768, 32767, -32768, 16384]);
  });

  it("resampling halves a 32 kHz buffer", () => {
    const input = new Float32Array(3200).fill(0.25);
    const out = resampleLinear(input, 32000, 16000);
    expect(out.length).toBe(1600);
    expect(out[0]).toBeCloseTo(0.25, 6);
    expect(out[out.length - 1]).toBeCloseTo(0.25, 6);
  });

  it("identity resample copies", () => {
    const input = new Float32Array([0.1, 0.2, 0.3]);
    const out = resampleLinear(input, 16000, 16000);
    expect(Array.from(out)).toEqual(Array.from(input));
    expect(out).not.toBe(input);
  });

  it("pcm bytes are little-endian", () => {
    const bytes = new Uint8Array(int16ToPcmBytes(new Int16Array([-32768])));
    expect(Array.from(bytes)).toEqual([0x00, 0x80]);
  });
});

describe("clip recorder", () => {
  it("turns 48 kHz float chunks into a 16 kHz take with flat silence peaks", () => {
    const rec = new ClipRecorder(48000, 160);
    for (let i = 0; i < 10; i++) rec.push(new Float32Array(4800)); // 1 s total
    const take = rec.finish();
    expect(take.durationS).toBeCloseTo(1.0, 2);
    const info = parseWavHeader(take.wav);
    expect(info.rate).toBe(16000);
    expect(info.channels).toBe(1);
    expect(take.peaks.peaks.every((p) => p === 0)).toBe(true); // silence -> flat waveform
  });

  it("live peaks reflect loud chunks", () => {
    const rec = new ClipRecorder(16000, 10);
    rec.push(new Float32Array(100).fill(1.0));
    const peaks = rec.livePeaks().peaks;
    expect(Math.max(...peaks)).toBeCloseTo(32767 / 32768, 5);
  });
});
