// Correction drafting with optimistic local echo. Pending edits render as an
// overlay on the authoritative state; a server delta that changes the drafted
// span (normally: our own correction coming back) retires the pending entry,
// and a conflict reply reverts it while preserving the draft for retry.

import { Envelope } from "./protocol";
import { CaptionState, DisplayToken, Highlight, HighlightKind, spliceSnapshot, Token } from "./state";

export interface EditDraft {
  start: number; // token span over the rendered version, end exclusive
  end: number;
  replacement: string; // whitespace-separated words; empty for uncertainty flags
  kind: HighlightKind;
}

interface PendingEdit {
  id: string;
  baseVersion: number;
  start: number;
  end: number;
  original: string[];
  replacement: string[];
  kind: HighlightKind;
}

let counter = 0;

export function draftError(state: CaptionState, draft: EditDraft): string | null {
  if (!(0 <= draft.start && draft.start < draft.end && draft.end <= state.tokens.length)) {
    return "selection is out of range";
  }
  const words = draft.replacement.trim().split(/\s+/).filter((w) => w.length > 0);
  if (draft.kind === "corrected" && words.length === 0) {
    return "a correction needs replacement text";
  }
  if (draft.kind === "uncertain" && words.length > 0) {
    return "an uncertainty flag carries no replacement";
  }
  return null;
}

export class CorrectionFlow {
  private pending: PendingEdit[] = [];

  constructor(private state: CaptionState) {}

  get pendingCount(): number {
    return this.pending.length;
  }

  // Build the outbound envelope and apply the optimistic overlay. The draft
  // is validated against the rendered version; base_version pins it for the
  // server's conflict check.
  submit(draft: EditDraft, sessionId: string, seq: number): Envelope {
    const problem = draftError(this.state, draft);
    if (problem) throw new Error(problem);
    const words = draft.replacement.trim().split(/\s+/).filter((w) => w.length > 0);
    const original = this.state.tokens.slice(draft.start, draft.end).map((t) => t.text);
    counter += 1;
    const edit: PendingEdit = {
      id: `e${Date.now().toString(36)}-${counter}`,
      baseVersion: this.state.version,
      start: draft.start,
      end: draft.end,
      original,
      replacement: words,
      kind: draft.kind,
    };
    this.pending.push(edit);
    return {
      type: "correction",
      session_id: sessionId,
      seq,
      payload: {
        id: edit.id,
        span: { start: edit.start, end: edit.end },
        original: edit.original,
        replacement: edit.replacement,
        kind: edit.kind,
        base_version: edit.baseVersion,
      },
    };
  }

  // After any authoritative delta: drop pending edits whose span no longer
  // reads as drafted (either our edit landed or someone else's took it).
  reconcile(): void {
    this.pending = this.pending.filter((edit) => {
      const current = this.state.tokens.slice(edit.start, edit.end).map((t) => t.text);
      return current.length === edit.original.length && current.every((w, i) => w === edit.original[i]);
    });
  }

  // Conflict reply for a pending edit: revert the optimistic echo and hand
  // the draft back for retry against the fresh version.
  onConflict(ref: string): EditDraft | null {
    const edit = this.pending.find((e) => e.id === ref);
    if (!edit) return null;
    this.pending = this.pending.filter((e) => e.id !== ref);
    return {
      start: edit.start,
      end: edit.end,
      replacement: edit.replacement.join(" "),
      kind: edit.kind,
    };
  }

  // Authoritative state plus the pending overlay, for rendering.
  overlay(): { tokens: Token[]; highlights: Highlight[] } {
    let tokens = this.state.tokens;
    let highlights = this.state.highlights;
    for (const edit of this.pending) {
      if (edit.kind === "corrected") {
        const next = spliceSnapshot(tokens, highlights, {
          start: edit.start,
          removed: edit.end - edit.start,
          words: edit.replacement,
          origin: "corrected",
          highlight: { start: edit.start, end: edit.start + edit.replacement.length, kind: "corrected" },
        });
        tokens = next.tokens;
        highlights = next.highlights;
      } else {
        highlights = highlights.concat([{ start: edit.start, end: edit.end, kind: "uncertain" }]);
      }
    }
    return { tokens, highlights };
  }

  renderCaptions(): DisplayToken[] {
    const { tokens, highlights } = this.overlay();
    const out: DisplayToken[] = tokens.map((tok, i) => {
      let style: DisplayToken["style"] = "plain";
      for (let k = highlights.length - 1; k >= 0; k--) {
        if (highlights[k].start <= i && i < highlights[k].end) {
          style = highlights[k].kind;
          break;
        }
      }
      return { text: tok.text, style, index: i };
    });
    for (const word of this.state.preview) {
      out.push({ text: word, style: "preview", index: null });
    }
    return out;
  }
}
