// Duplex WebSocket client for one gateway endpoint. Replies resolve the
// matching pending command; events fan out to a handler. The WebSocket
// constructor is injectable so tests can run under node's `ws`.

import {
  assertNormalChannelClean,
  makeCommand,
  parseMessage,
  type Channel,
  type GatewayEvent,
  type GatewayReply,
} from "./protocol.js";

export interface WebSocketLike {
  onopen: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
  send(data: string): void;
  close(): void;
}

export type WebSocketFactory = (url: string) => WebSocketLike;

const defaultFactory: WebSocketFactory = (url) =>
  new (globalThis as { WebSocket: new (u: string) => WebSocketLike }).WebSocket(url);

export class GatewayClient {
  private ws: WebSocketLike;
  private nextId = 1;
  private pending = new Map<number, (reply: GatewayReply) => void>();
  private opened: Promise<void>;

  readonly channel: Channel;
  onEvent: ((evt: GatewayEvent) => void) | null = null;

  constructor(url: string, channel: Channel, factory: WebSocketFactory = defaultFactory) {
    this.channel = channel;
    this.ws = factory(url);
    this.opened = new Promise((resolve, reject) => {
      this.ws.onopen = () => resolve();
      this.ws.onerror = (e) => reject(e instanceof Error ? e : new Error("socket error"));
    });
    this.ws.onmessage = (ev) => this.dispatch(String(ev.data));
  }

  private dispatch(raw: string): void {
    const msg = parseMessage(raw);
    if (this.channel === "normal") {
      assertNormalChannelClean(msg);
    }
    if (msg.type === "reply") {
      const resolve = this.pending.get(msg.id);
      if (resolve) {
        this.pending.delete(msg.id);
        resolve(msg);
      }
      return;
    }
    this.onEvent?.(msg);
  }

  async call(cmd: string, args: Record<string, unknown> = {}): Promise<GatewayReply> {
    await this.opened;
    const id = this.nextId++;
    const reply = new Promise<GatewayReply>((resolve) => this.pending.set(id, resolve));
    this.ws.send(JSON.stringify(makeCommand(id, cmd, args)));
    return reply;
  }

  close(): void {
    this.ws.close();
  }
}
