// DOM wiring for the three panes. All logic lives in state.ts/client.ts;
// this file only moves strings between the page and the gateway.

import { GatewayClient } from "./client.js";
import { hexDump } from "./hex.js";
import { applyEvent, applyReply, initialState, type PaneState } from "./state.js";
import type { GatewayReply } from "./protocol.js";

const state: PaneState = initialState();
let normal: GatewayClient | null = null;
let secure: GatewayClient | null = null;
let pairPeerId = "";
let pairSecret = "";

const $ = (id: string) => document.getElementById(id) as HTMLElement;
const input = (id: string) => document.getElementById(id) as HTMLInputElement;

function render(): void {
  // public pane
  $("chat-log").textContent = state.chat
    .map((l) => `${l.direction === "out" ? "→" : "←"} [${l.seqNo}] ${l.text}`)
    .join("\n");
  $("unlock-state").textContent = state.unlocked ? "unlocked" : "locked";

  // enclave pane: only rendered while the secure surface answers
  const enclave = $("enclave-pane");
  enclave.style.display = state.enclaveActive ? "block" : "none";
  $("watermark").textContent = state.watermark;
  $("hidden-inbox").textContent = state.hiddenInbox
    .map((m) => `[${m.contactId.slice(0, 8)}] ${m.text}`)
    .join("\n");
  $("covers-gauge").textContent =
    state.coversNeeded === null ? "-" : String(state.coversNeeded);
  $("covers-history").textContent = state.coversHistory.join(" → ");

  // adversary pane
  const latest = state.frames.slice(-6);
  $("frame-view").textContent = latest
    .map((f) => `${f.direction} ${f.frameHex.length / 2} octets\n${hexDump(f.frameHex)}`)
    .join("\n\n");
  $("frame-count").textContent = String(state.frames.length);
  $("battery-verdict").textContent = state.battery
    ? `${state.battery.verdict}  ` +
      state.battery.tests.map((t) => `${t.name}:p=${t.p_value.toFixed(3)}`).join("  ")
    : "-";
  $("disclosure-verdict").textContent = state.disclosure
    ? `${state.disclosure.matched}/${state.disclosure.total} envelopes reproduced; ` +
      (state.disclosure.allMatch ? "transcript fully explained" : "MISMATCH")
    : "-";
  $("error-line").textContent = state.lastError;
}

function track(reply: GatewayReply): GatewayReply {
  applyReply(state, reply);
  render();
  return reply;
}

async function connect(): Promise<void> {
  const base = input("gateway-url").value.trim();
  normal?.close();
  secure?.close();
  normal = new GatewayClient(`${base}/ws/normal`, "normal");
  secure = new GatewayClient(`${base}/ws/secure`, "secure");
  for (const client of [normal, secure]) {
    client.onEvent = (evt) => {
      applyEvent(state, evt);
      render();
    };
  }
  $("conn-state").textContent = `connected to ${base}`;
}

function onPairPasted(): void {
  try {
    const raw = JSON.parse(input("pair-json").value);
    pairPeerId = String(raw.peer_id ?? "");
    pairSecret = String(raw.hidden_secret ?? "");
    $("pair-state").textContent = `pair loaded: peer ${pairPeerId.slice(0, 8)}…`;
  } catch {
    $("pair-state").textContent = "not valid pair JSON";
  }
}

function wire(): void {
  $("connect-btn").onclick = () => void connect();
  input("pair-json").onchange = onPairPasted;

  $("unlock-btn").onclick = async () => {
    if (!normal) return;
    const reply = track(await normal.call("unlock", { password: input("password").value }));
    // Probing the secure surface is how the enclave pane appears (or not):
    // in public-only mode the inbox call refuses uniformly.
    if (reply.ok && secure) track(await secure.call("inbox", {}));
  };

  $("send-btn").onclick = async () => {
    if (!normal) return;
    track(await normal.call("send", { text: input("public-text").value }));
    input("public-text").value = "";
  };

  $("contact-btn").onclick = async () => {
    if (!secure || !pairPeerId) return;
    track(await secure.call("contact_add", { contact_id: pairPeerId, secret: pairSecret }));
  };

  $("hidden-send-btn").onclick = async () => {
    if (!secure || !pairPeerId) return;
    track(
      await secure.call("hidden_send", {
        contact_id: pairPeerId,
        text: input("hidden-text").value,
      })
    );
    input("hidden-text").value = "";
  };

  $("inbox-btn").onclick = async () => {
    if (secure) track(await secure.call("inbox", {}));
  };

  $("battery-btn").onclick = async () => {
    if (normal) track(await normal.call("battery", {}));
  };

  $("disclose-btn").onclick = async () => {
    if (secure)
      track(await secure.call("disclose", { password: input("disclose-password").value }));
  };

  render();
}

wire();
