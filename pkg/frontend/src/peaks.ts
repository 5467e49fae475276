// Waveform peaks with the exact semantics of the server's peak function:
// max absolute sample per window, normalized by 32768, trailing partial
// window included. The shared golden vectors pin equality.

export interface WaveformPeaks {
  peaks: number[];
  window: number;
}

export class PeakAccumulator {
  private pending: number[] = [];
  private peaks: number[] = [];

  constructor(public readonly window: number) {
    if (window < 1) throw new Error("window must be >= 1");
  }

  feed(samples: ArrayLike<number>): void {
    for (let i = 0; i < samples.length; i++) this.pending.push(samples[i]);
    while (this.pending.length >= this.window) {
      const chunk = this.pending.splice(0, this.window);
      let peak = 0;
      for (const v of chunk) {
        const a = v < 0 ? -v : v;
        if (a > peak) peak = a;
      }
      this.peaks.push(peak);
    }
  }

  result(): WaveformPeaks {
    const peaks = this.peaks.slice();
    if (this.pending.length > 0) {
      let peak = 0;
      for (const v of this.pending) {
        const a = v < 0 ? -v : v;
        if (a > peak) peak = a;
      }
      peaks.push(peak);
    }
    return { peaks: peaks.map((p) => p / 32768), window: this.window };
  }
}

export function computePeaks(samples: ArrayLike<number>, window: number): WaveformPeaks {
  const acc = new PeakAccumulator(window);
  acc.feed(samples);
  return acc.result();
}
