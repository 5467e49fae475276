// Caption view state: the client-side mirror of the server's document,
// updated only from server broadcasts. Out-of-order deltas are discarded by
// version; a gap means the client must resynchronize from a snapshot.

export type Origin = "asr" | "corrected";
export type HighlightKind = "corrected" | "uncertain";

export interface Token {
  text: string;
  origin: Origin;
}

export interface Highlight {
  start: number;
  end: number;
  kind: HighlightKind;
}

export interface DeltaPayload {
  version: number;
  start: number;
  removed: number;
  words: string[];
  origin?: Origin;
  highlight?: Highlight;
  preview?: boolean;
}

export interface PromptView {
  id: string;
  clause: string;
  target_words: string[];
  source: string;
  status: string;
}

export interface SnapshotPayload {
  version: number;
  tokens: { text: string; origin: Origin }[];
  highlights: Highlight[];
}

export type DeltaResult = "applied" | "stale" | "gap";

export interface DisplayToken {
  text: string;
  style: "plain" | "corrected" | "uncertain" | "preview";
  index: number | null; // null for preview words (not yet committed)
}

// One document splice on plain snapshot data; shared by the authoritative
// state and the optimistic overlay. Keeps the same highlight-remap rules as
// the server: marks before the cut stay, marks after shift, overlaps clip.
export function spliceSnapshot(
  tokens: Token[],
  highlights: Highlight[],
  delta: { start: number; removed: number; words: string[]; origin?: Origin; highlight?: Highlight },
): { tokens: Token[]; highlights: Highlight[] } {
  const origin: Origin = delta.origin ?? "asr";
  const inserted: Token[] = delta.words.map((text) => ({ text, origin }));
  const nextTokens = tokens
    .slice(0, delta.start)
    .concat(inserted, tokens.slice(delta.start + delta.removed));

  let nextHighlights: Highlight[];
  if (delta.removed > 0 || (delta.words.length > 0 && origin === "corrected")) {
    const shift = delta.words.length - delta.removed;
    const start = delta.start;
    const end = delta.start + delta.removed;
    nextHighlights = [];
    for (const h of highlights) {
      if (h.end <= start) {
        nextHighlights.push(h);
      } else if (h.start >= end) {
        nextHighlights.push({ start: h.start + shift, end: h.end + shift, kind: h.kind });
      } else {
        if (h.start < start) nextHighlights.push({ start: h.start, end: start, kind: h.kind });
        if (h.end > end) nextHighlights.push({ start: end + shift, end: h.end + shift, kind: h.kind });
      }
    }
  } else {
    nextHighlights = highlights.slice();
  }
  if (delta.highlight) {
    nextHighlights.push({ ...delta.highlight });
  }
  return { tokens: nextTokens, highlights: nextHighlights };
}

export class CaptionState {
  tokens: Token[] = [];
  highlights: Highlight[] = [];
  version = 0;
  preview: string[] = [];
  prompts: PromptView[] = [];
  modelVersion = 1;
  phase = "idle";

  loadSnapshot(snap: SnapshotPayload): void {
    this.tokens = snap.tokens.map((t) => ({ text: t.text, origin: t.origin }));
    this.highlights = snap.highlights.map((h) => ({ ...h }));
    this.version = snap.version;
    this.preview = [];
  }

  applyDelta(delta: DeltaPayload): DeltaResult {
    if (delta.preview) {
      if (delta.version < this.version) return "stale";
      this.preview = delta.words.slice();
      return "applied";
    }
    if (delta.version <= this.version) return "stale"; // duplicate or out of order
    if (delta.version !== this.version + 1) return "gap"; // resync from snapshot
    const next = spliceSnapshot(this.tokens, this.highlights, delta);
    this.tokens = next.tokens;
    this.highlights = next.highlights;
    this.version = delta.version;
    this.preview = [];
    return "applied";
  }

  highlightAt(index: number, highlights?: Highlight[]): HighlightKind | null {
    const marks = highlights ?? this.highlights;
    for (let i = marks.length - 1; i >= 0; i--) {
      if (marks[i].start <= index && index < marks[i].end) return marks[i].kind;
    }
    return null;
  }

  // Display model: committed tokens styled by their winning mark, then the
  // in-flight preview words.
  renderCaptions(): DisplayToken[] {
    const out: DisplayToken[] = this.tokens.map((tok, i) => ({
      text: tok.text,
      style: this.highlightAt(i) ?? "plain",
      index: i,
    }));
    for (const word of this.preview) {
      out.push({ text: word, style: "preview", index: null });
    }
    return out;
  }

  setPrompts(prompts: PromptView[]): void {
    this.prompts = prompts.map((p) => ({ ...p }));
  }

  updatePrompt(id: string, status: string): void {
    const prompt = this.prompts.find((p) => p.id === id);
    if (prompt) prompt.status = status;
  }
}
