// Thin session socket: joins with hello, tracks in/out seq, decodes and
// routes envelopes. The WebSocket constructor is injectable so node tests
// can drive it with the `ws` package.

import { decodeMessage, encodeMessage, Envelope, MessageType, SequenceGuard } from "./protocol";

export interface SocketLike {
  send(data: string | ArrayBuffer): void;
  close(): void;
  onmessage: ((ev: { data: unknown }) => void) | null;
  onopen: (() => void) | null;
  onclose: ((ev: { code: number; reason: string }) => void) | null;
  onerror: ((ev: unknown) => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;

export type EnvelopeHandler = (env: Envelope) => void;

export class SessionSocket {
  private socket: SocketLike | null = null;
  private outSeq = 0;
  private guard = new SequenceGuard();
  private handlers = new Map<MessageType, EnvelopeHandler[]>();
  onClose: ((code: number, reason: string) => void) | null = null;
  onProtocolError: ((err: unknown) => void) | null = null;

  constructor(
    private baseUrl: string,
    private sessionId: string,
    private factory: SocketFactory = (url) => new WebSocket(url) as unknown as SocketLike,
  ) {}

  on(type: MessageType, handler: EnvelopeHandler): void {
    const list = this.handlers.get(type) ?? [];
    list.push(handler);
    this.handlers.set(type, list);
  }

  connect(): Promise<void> {
    return new Promise((resolve, reject) => {
      const socket = this.factory(`${this.baseUrl}/ws/${this.sessionId}`);
      this.socket = socket;
      socket.onopen = () => resolve();
      socket.onerror = (err) => reject(err);
      socket.onclose = (ev) => this.onClose?.(ev.code, ev.reason);
      socket.onmessage = (ev) => {
        if (typeof ev.data !== "string") return; // no binary frames flow server->client
        let env: Envelope;
        try {
          env = decodeMessage(ev.data);
          this.guard.validate(env);
        } catch (err) {
          this.onProtocolError?.(err);
          return;
        }
        for (const handler of this.handlers.get(env.type) ?? []) handler(env);
      };
    });
  }

  sendEnvelope(type: MessageType, payload: Record<string, unknown>): Envelope {
    if (!this.socket) throw new Error("socket not connected");
    this.outSeq += 1;
    const env: Envelope = { type, session_id: this.sessionId, seq: this.outSeq, payload };
    this.socket.send(encodeMessage(env));
    return env;
  }

  // The editor builds correction envelopes itself (it owns the optimistic
  // bookkeeping); this stamps the connection's next seq and ships it.
  nextSeq(): number {
    this.outSeq += 1;
    return this.outSeq;
  }

  sendPrebuilt(env: Envelope): void {
    if (!this.socket) throw new Error("socket not connected");
    this.socket.send(encodeMessage(env));
  }

  sendPcm(buf: ArrayBuffer): void {
    if (!this.socket) throw new Error("socket not connected");
    this.socket.send(buf);
  }

  hello(role: "speaker" | "corrector"): Envelope {
    return this.sendEnvelope("hello", { role });
  }

  close(): void {
    this.socket?.close();
  }
}
