// Gateway wire schema: versioned JSON over two WebSocket endpoints.
// Field names here are the contract with the Python gateway; see the
// package README for the server side.

export const PROTOCOL_VERSION = 1;

export type Channel = "normal" | "secure";

export type EventKind =
  | "public_msg"
  | "hidden_msg"
  | "transcript_frame"
  | "covers_needed"
  | "game_report";

export interface GatewayEvent {
  v: number;
  type: "event";
  event: EventKind;
  channel: Channel;
  payload: Record<string, unknown>;
}

export interface GatewayReply {
  v: number;
  type: "reply";
  id: number;
  cmd: string;
  ok: boolean;
  data?: Record<string, unknown>;
  error?: string;
}

export type GatewayMessage = GatewayEvent | GatewayReply;

export interface Command {
  v: number;
  type: "cmd";
  id: number;
  cmd: string;
  args: Record<string, unknown>;
}

export function makeCommand(id: number, cmd: string, args: Record<string, unknown>): Command {
  return { v: PROTOCOL_VERSION, type: "cmd", id, cmd, args };
}

export function parseMessage(raw: string): GatewayMessage {
  const msg = JSON.parse(raw) as GatewayMessage;
  if (msg.v !== PROTOCOL_VERSION) {
    throw new Error(`unsupported protocol version ${msg.v}`);
  }
  if (msg.type !== "event" && msg.type !== "reply") {
    throw new Error(`unknown message type ${(msg as { type: string }).type}`);
  }
  return msg;
}

// Kinds that must never appear on the normal endpoint, and payload fields
// whose presence there would mean the gateway is leaking enclave state.
const SECURE_ONLY_KINDS: EventKind[] = ["hidden_msg", "covers_needed"];
const SECURE_ONLY_FIELDS = ["watermark", "hmk", "hidden_secret"];

/**
 * Client-side guard: a message received on the normal endpoint must not
 * carry hidden-channel kinds or enclave-only fields. Throwing here is
 * deliberate - a leak is a bug worth crashing the demo for.
 */
export function assertNormalChannelClean(msg: GatewayMessage): void {
  const raw = JSON.stringify(msg);
  if (msg.type === "event") {
    if (SECURE_ONLY_KINDS.includes(msg.event)) {
      throw new Error(`secure-only event ${msg.event} on normal endpoint`);
    }
    if (msg.channel !== "normal") {
      throw new Error(`event labelled ${msg.channel} arrived on normal endpoint`);
    }
  }
  for (const field of SECURE_ONLY_FIELDS) {
    if (raw.includes(`"${field}"`)) {
      throw new Error(`field ${field} leaked onto normal endpoint`);
    }
  }
}
