import { describe, expect, it } from "vitest";

import type { GatewayEvent, GatewayReply } from "../src/protocol.js";
import { applyEvent, applyReply, initialState } from "../src/state.js";
import { hexDump } from "../src/hex.js";

function evt(kind: GatewayEvent["event"], channel: "normal" | "secure", payload: object): GatewayEvent {
  return { v: 1, type: "event", event: kind, channel, payload: payload as never };
}

function reply(cmd: string, data: object, ok = true): GatewayReply {
  return ok
    ? { v: 1, type: "reply", id: 1, cmd, ok, data: data as never }
    : { v: 1, type: "reply", id: 1, cmd, ok, error: String((data as { error: string }).error) };
}

describe("pane state", () => {
  it("collects public chat and frames", () => {
    const s = initialState();
    applyEvent(s, evt("public_msg", "normal", { direction: "out", seq_no: 1, text: "hi" }));
    applyEvent(s, evt("public_msg", "normal", { direction: "in", seq_no: 1, text: "yo" }));
    applyEvent(s, evt("transcript_frame", "normal", { direction: "out", frame_hex: "aabb" }));
    expect(s.chat).toHaveLength(2);
    expect(s.frames).toEqual([{ direction: "out", frameHex: "aabb" }]);
  });

  it("enclave pane appears only once the secure surface answers", () => {
    const s = initialState();
    expect(s.enclaveActive).toBe(false);
    applyReply(s, reply("inbox", { watermark: "wm", messages: [] }));
    expect(s.enclaveActive).toBe(true);
    expect(s.watermark).toBe("wm");
    // a refusal on the inbox drops it back
    applyReply(s, reply("inbox", { error: "unavailable" }, false));
    expect(s.enclaveActive).toBe(false);
    expect(s.lastError).toBe("unavailable");
  });

  it("tracks the covers gauge through a frame drain", () => {
    const s = initialState();
    applyReply(s, reply("hidden_send", { covers_needed: 4 }));
    expect(s.coversNeeded).toBe(4);
    for (const remaining of [4, 3, 2, 1, 0]) {
      applyEvent(s, evt("covers_needed", "secure", { contact_id: "aa", remaining }));
    }
    expect(s.coversNeeded).toBe(0);
    expect(s.coversHistory).toEqual([4, 3, 2, 1, 0]);
  });

  it("hidden deliveries carry the watermark", () => {
    const s = initialState();
    applyEvent(s, evt("hidden_msg", "secure", { contact_id: "aa", text: "psst", watermark: "wm" }));
    expect(s.hiddenInbox).toEqual([{ contactId: "aa", text: "psst" }]);
    expect(s.watermark).toBe("wm");
  });

  it("records battery and disclosure verdicts", () => {
    const s = initialState();
    applyReply(s, reply("battery", { verdict: "pass", tests: [{ name: "monobit", p_value: 0.5 }] }));
    expect(s.battery?.verdict).toBe("pass");
    applyReply(s, reply("disclose", { verification: { all_match: true, matched: 4, total: 4 } }));
    expect(s.disclosure).toEqual({ allMatch: true, matched: 4, total: 4 });
  });
});

describe("hex dump", () => {
  it("renders offset, bytes and ascii gutter", () => {
    const dump = hexDump("48656c6c6f21");
    expect(dump).toContain("0000");
    expect(dump).toContain("48 65 6c 6c 6f 21");
    expect(dump).toContain("Hello!");
  });
});
