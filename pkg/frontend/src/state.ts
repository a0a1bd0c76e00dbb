// Pane state and the reducers that feed it from gateway traffic.
// No crypto, no policy: the UI renders exactly what each endpoint says.

import type { GatewayEvent, GatewayReply } from "./protocol.js";

export interface ChatLine {
  direction: "in" | "out";
  seqNo: number;
  text: string;
}

export interface HiddenLine {
  contactId: string;
  text: string;
}

export interface FrameLine {
  direction: "in" | "out";
  frameHex: string;
}

export interface BatteryVerdict {
  verdict: string;
  tests: { name: string; p_value: number }[];
}

export interface PaneState {
  // public pane
  unlocked: boolean;
  chat: ChatLine[];
  // enclave pane: renders only while the secure surface answers
  enclaveActive: boolean;
  watermark: string;
  hiddenInbox: HiddenLine[];
  coversNeeded: number | null;
  coversHistory: number[];
  // adversary pane
  frames: FrameLine[];
  battery: BatteryVerdict | null;
  disclosure: { allMatch: boolean; matched: number; total: number } | null;
  lastError: string;
}

export function initialState(): PaneState {
  return {
    unlocked: false,
    chat: [],
    enclaveActive: false,
    watermark: "",
    hiddenInbox: [],
    coversNeeded: null,
    coversHistory: [],
    frames: [],
    battery: null,
    disclosure: null,
    lastError: "",
  };
}

export function applyEvent(state: PaneState, evt: GatewayEvent): void {
  const p = evt.payload as Record<string, never>;
  switch (evt.event) {
    case "public_msg":
      state.chat.push({
        direction: p["direction"] as "in" | "out",
        seqNo: p["seq_no"] as number,
        text: p["text"] as string,
      });
      break;
    case "transcript_frame":
      state.frames.push({
        direction: p["direction"] as "in" | "out",
        frameHex: p["frame_hex"] as string,
      });
      break;
    case "hidden_msg":
      state.enclaveActive = true;
      state.watermark = p["watermark"] as string;
      state.hiddenInbox.push({
        contactId: p["contact_id"] as string,
        text: p["text"] as string,
      });
      break;
    case "covers_needed":
      state.coversNeeded = p["remaining"] as number;
      state.coversHistory.push(p["remaining"] as number);
      break;
    case "game_report":
      break;
  }
}

export function applyReply(state: PaneState, reply: GatewayReply): void {
  if (!reply.ok) {
    // Gateway errors render verbatim; the uniform refusal is part of the story.
    state.lastError = reply.error ?? "error";
    if (reply.cmd === "inbox") state.enclaveActive = false;
    return;
  }
  state.lastError = "";
  const data = (reply.data ?? {}) as Record<string, never>;
  switch (reply.cmd) {
    case "unlock":
      state.unlocked = Boolean(data["verified"]);
      break;
    case "inbox": {
      state.enclaveActive = true;
      state.watermark = data["watermark"] as string;
      const msgs = data["messages"] as { contact_id: string; text: string }[];
      state.hiddenInbox = msgs.map((m) => ({ contactId: m.contact_id, text: m.text }));
      break;
    }
    case "hidden_send":
      // The covers_needed event stream owns the history; the reply only
      // refreshes the current value.
      state.coversNeeded = data["covers_needed"] as number;
      break;
    case "battery":
      state.battery = {
        verdict: data["verdict"] as string,
        tests: (data["tests"] ?? []) as { name: string; p_value: number }[],
      };
      break;
    case "disclose": {
      const v = data["verification"] as {
        all_match: boolean;
        matched: number;
        total: number;
      };
      state.disclosure = { allMatch: v.all_match, matched: v.matched, total: v.total };
      break;
    }
  }
}
