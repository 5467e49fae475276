import { readFileSync } from "node:fs";
import { describe, expect, it } from "vitest";

import { decodeMessage, encodeMessage, Envelope, ProtocolError, SequenceGuard } from "../src/protocol";

const golden = JSON.parse(readFileSync(new URL("./golden/envelopes.json", import.meta.url), "utf-8"));

describe("envelope codec", () => {
  it("decodes every golden frame produced by the server", () => {
    for (const c of golden) {
      const env = decodeMessage(c.frame);
      expect(env.type).toBe(c.type);
      expect(env.session_id).toBe(c.session_id);
      expect(env.seq).toBe(c.seq);
      expect(env.payload).toEqual(c.payload);
    }
  });

  it("round-trips every golden envelope", () => {
    for (const c of golden) {
      const env: Envelope = { type: c.type, session_id: c.session_id, seq: c.seq, payload: c.payload };
      expect(decodeMessage(encodeMessage(env))).toEqual(env);
    }
  });

  it("rejects unknown types", () => {
    expect(() => decodeMessage('{"type":"mystery","session_id":"s","seq":1,"payload":{}}')).toThrowError(
      ProtocolError,
    );
  });

  it("names the missing field", () => {
    try {
      decodeMessage(
        '{"type":"correction","session_id":"s","seq":1,"payload":{"id":"c1","original":[],"replacement":[],"kind":"corrected","base_version":0}}',
      );
      expect.unreachable();
    } catch (err: any) {
      expect(err.code).toBe("schema_violation");
      expect(err.field).toBe("span");
    }
  });

  it("rejects bad json and negative seq", () => {
    expect(() => decodeMessage("{nope")).toThrowError(ProtocolError);
    expect(() => decodeMessage('{"type":"hello","session_id":"s","seq":-1,"payload":{"role":"speaker"}}')).toThrowError(
      ProtocolError,
    );
  });

  it("guards per-connection seq monotonicity", () => {
    const guard = new SequenceGuard();
    guard.validate({ type: "hello", session_id: "s", seq: 3, payload: { role: "speaker" } });
    expect(() =>
      guard.validate({ type: "hello", session_id: "s", seq: 3, payload: { role: "speaker" } }),
    ).toThrowError(ProtocolError);
    guard.validate({ type: "hello", session_id: "s", seq: 4, payload: { role: "speaker" } });
  });
});
