// Wire protocol mirror: JSON envelopes on text frames, strict per-connection
// seq, schema checks per message type. Must stay in lockstep with the server;
// the golden envelope vectors pin the byte-level behavior.

export type MessageType =
  | "hello"
  | "start_asr"
  | "stop_asr"
  | "correction"
  | "caption_delta"
  | "prompts_ready"
  | "model_updated"
  | "recording_meta"
  | "error";

export interface Envelope {
  type: MessageType;
  session_id: string;
  seq: number;
  payload: Record<string, unknown>;
}

export class ProtocolError extends Error {
  constructor(public code: string, message: string) {
    super(message);
    this.name = "ProtocolError";
  }
}

export class SchemaError extends ProtocolError {
  constructor(message: string, public field: string) {
    super("schema_violation", message);
    this.name = "SchemaError";
  }
}

type Check = (v: unknown) => boolean;

const isStr: Check = (v) => typeof v === "string";
const isInt: Check = (v) => typeof v === "number" && Number.isInteger(v);
const isNumber: Check = (v) => typeof v === "number" && Number.isFinite(v);
const isWordList: Check = (v) => Array.isArray(v) && v.every((w) => typeof w === "string");
const isSpan: Check = (v) =>
  typeof v === "object" && v !== null && isInt((v as any).start) && isInt((v as any).end);
const isKind: Check = (v) => v === "corrected" || v === "uncertain";
const isPromptList: Check = (v) =>
  Array.isArray(v) &&
  v.every((p) => typeof p === "object" && p !== null && isStr((p as any).id) && isStr((p as any).clause));

const SCHEMAS: Record<MessageType, Record<string, Check>> = {
  hello: { role: isStr },
  start_asr: {},
  stop_asr: {},
  correction: {
    id: isStr,
    span: isSpan,
    original: isWordList,
    replacement: isWordList,
    kind: isKind,
    base_version: isInt,
  },
  caption_delta: { version: isInt, start: isInt, removed: isInt, words: isWordList },
  prompts_ready: { prompts: isPromptList },
  model_updated: { version: isInt },
  recording_meta: { prompt_id: isStr, duration_s: isNumber, status: isStr },
  error: { code: isStr, message: isStr },
};

export const MESSAGE_TYPES = Object.keys(SCHEMAS) as MessageType[];

function validatePayload(type: MessageType, payload: Record<string, unknown>): void {
  for (const [field, check] of Object.entries(SCHEMAS[type])) {
    if (!(field in payload)) {
      throw new SchemaError(`${type} payload missing required field ${field}`, field);
    }
    if (!check(payload[field])) {
      throw new SchemaError(`${type} payload field ${field} has the wrong shape`, field);
    }
  }
}

export function encodeMessage(env: Envelope): string {
  if (!(env.type in SCHEMAS)) {
    throw new ProtocolError("unknown_type", `unknown message type ${env.type}`);
  }
  if (!Number.isInteger(env.seq) || env.seq < 0) {
    throw new ProtocolError("bad_seq", "seq must be a non-negative integer");
  }
  validatePayload(env.type, env.payload);
  return JSON.stringify({
    type: env.type,
    session_id: env.session_id,
    seq: env.seq,
    payload: env.payload,
  });
}

export function decodeMessage(text: string): Envelope {
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch (err) {
    throw new ProtocolError("bad_json", `frame is not valid JSON: ${err}`);
  }
  if (typeof raw !== "object" || raw === null || Array.isArray(raw)) {
    throw new ProtocolError("bad_json", "frame must be a JSON object");
  }
  const obj = raw as Record<string, unknown>;
  const type = obj.type;
  if (typeof type !== "string" || !(type in SCHEMAS)) {
    throw new ProtocolError("unknown_type", `unknown message type ${String(type)}`);
  }
  if (typeof obj.session_id !== "string") {
    throw new SchemaError("session_id must be a string", "session_id");
  }
  if (!Number.isInteger(obj.seq) || (obj.seq as number) < 0) {
    throw new ProtocolError("bad_seq", "seq must be a non-negative integer");
  }
  const payload = (obj.payload ?? {}) as Record<string, unknown>;
  if (typeof payload !== "object" || payload === null || Array.isArray(payload)) {
    throw new SchemaError("payload must be an object", "payload");
  }
  validatePayload(type as MessageType, payload);
  return { type: type as MessageType, session_id: obj.session_id, seq: obj.seq as number, payload };
}

export class SequenceGuard {
  private last: number | null = null;

  validate(env: Envelope): void {
    if (this.last !== null && env.seq <= this.last) {
      throw new ProtocolError("seq_regression", `seq ${env.seq} is not greater than ${this.last}`);
    }
    this.last = env.seq;
  }
}
