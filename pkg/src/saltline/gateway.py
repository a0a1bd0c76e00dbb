"""Local gateway: the bridge between one device's enclave, its peer link,
and UI clients.

Two WebSocket endpoints mirror the two call surfaces:

* ``/ws/normal`` - everything the messaging app / normal world may see:
  unlock, public send, wire-frame transcript events, the statistics battery;
* ``/ws/secure`` - the enclave-direct channel: hidden contacts, hidden
  send/inbox (always carrying the anti-spoofing watermark), disclosure.

Message schema (versioned, field names contractual):

  command  {"v": 1, "type": "cmd", "id": N, "cmd": str, "args": {...}}
  reply    {"v": 1, "type": "reply", "id": N, "cmd": str, "ok": bool,
            "data": {...} | "error": str}
  event    {"v": 1, "type": "event", "event": kind, "channel": str,
            "payload": {...}}

Event kinds: public_msg, hidden_msg, transcript_frame, covers_needed,
game_report. hidden_msg and covers_needed only ever travel on the secure
endpoint.
"""

from __future__ import annotations

import asyncio
import json
import threading
from collections import deque
from dataclasses import dataclass

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from . import channel, games, stats
from .channel import ChannelProfile, SessionOutbox
from .enclave import Enclave, EnclaveError, LockedOutError, Mode, UniformRefusal
from .hidden import KeyMissingError
from .transport import Session

PROTOCOL_VERSION = 1
NORMAL = "normal"
SECURE = "secure"

_EVENT_KINDS = ("public_msg", "hidden_msg", "transcript_frame", "covers_needed", "game_report")
_SECURE_ONLY_KINDS = ("hidden_msg", "covers_needed")


@dataclass(frozen=True)
class PairInfo:
    """Out-of-band pairing material (models the QR-code ceremony)."""

    peer_id: bytes
    auth_key: bytes
    hidden_secret: bytes

    def to_json(self) -> str:
        return json.dumps(
            {
                "v": PROTOCOL_VERSION,
                "peer_id": self.peer_id.hex(),
                "auth_key": self.auth_key.hex(),
                "hidden_secret": self.hidden_secret.hex(),
            },
            indent=2,
        )

    @classmethod
    def from_json(cls, text: str) -> "PairInfo":
        raw = json.loads(text)
        return cls(
            bytes.fromhex(raw["peer_id"]),
            bytes.fromhex(raw["auth_key"]),
            bytes.fromhex(raw["hidden_secret"]),
        )

    @classmethod
    def generate(cls, rng=None) -> "PairInfo":
        from . import crypto

        return cls(
            crypto.prng_fill(8, rng),
            crypto.prng_fill(160, rng),
            crypto.prng_fill(128, rng),
        )


def event(kind: str, chan: str, payload: dict) -> dict:
    assert kind in _EVENT_KINDS
    assert chan == SECURE or kind not in _SECURE_ONLY_KINDS
    return {
        "v": PROTOCOL_VERSION,
        "type": "event",
        "event": kind,
        "channel": chan,
        "payload": payload,
    }


class EventBus:
    """Fans events out to per-connection asyncio queues, from any thread."""

    def __init__(self) -> None:
        self._subs: list[tuple[str, asyncio.Queue]] = []
        self._loop: asyncio.AbstractEventLoop | None = None
        self._lock = threading.Lock()

    def attach_loop(self, loop: asyncio.AbstractEventLoop) -> None:
        self._loop = loop

    def subscribe(self, chan: str) -> asyncio.Queue:
        q: asyncio.Queue = asyncio.Queue()
        with self._lock:
            self._subs.append((chan, q))
        return q

    def unsubscribe(self, q: asyncio.Queue) -> None:
        with self._lock:
            self._subs = [(c, s) for c, s in self._subs if s is not q]

    def publish(self, evt: dict) -> None:
        chan = evt["channel"]
        with self._lock:
            targets = [q for c, q in self._subs if c == chan]
            loop = self._loop
        if loop is None:
            return
        for q in targets:
            loop.call_soon_threadsafe(q.put_nowait, evt)


class GatewayService:
    """Glue: enclave calls, peer traffic pumping, event publication."""

    def __init__(
        self,
        enclave: Enclave,
        pair: PairInfo,
        profile: ChannelProfile,
    ) -> None:
        self.enclave = enclave
        self.pair = pair
        self.profile = profile
        self.bus = EventBus()
        self._session: Session | None = None
        self._outbox: SessionOutbox | None = None
        self._peer_ready = False
        self._pending_in: deque = deque()
        self._inbox_seen = 0
        self._reader: threading.Thread | None = None
        self._lock = threading.Lock()

    # -- wiring ---------------------------------------------------------

    def attach_session(self, session: Session) -> None:
        self._session = session
        self._outbox = SessionOutbox(session.session_id)
        self._reader = threading.Thread(target=self._read_loop, daemon=True)
        self._reader.start()

    def _ensure_peer(self) -> None:
        """Register the paired peer once the enclave is unlocked."""
        if not self._peer_ready and self.enclave.mode is not Mode.LOCKED:
            self.enclave.register_peer(self.pair.peer_id, self.pair.auth_key)
            self._peer_ready = True
            self._drain_pending()

    def _drain_pending(self) -> None:
        while self._pending_in:
            self._deliver(self._pending_in.popleft())

    def _read_loop(self) -> None:
        assert self._session is not None
        while True:
            try:
                env = self._session.recv()
            except Exception:
                break
            if env is None:
                break
            frame = env.to_bytes()
            self.bus.publish(
                event("transcript_frame", NORMAL, {"direction": "in", "frame_hex": frame.hex()})
            )
            with self._lock:
                if self._peer_ready and self.enclave.mode is not Mode.LOCKED:
                    self._deliver(env)
                else:
                    self._pending_in.append(env)

    def _deliver(self, env) -> None:
        try:
            pt = self.enclave.open_envelope(self.pair.peer_id, env)
        except EnclaveError:
            return
        except channel.ChannelError:
            return
        self.bus.publish(
            event(
                "public_msg",
                NORMAL,
                {
                    "direction": "in",
                    "seq_no": pt.seq_no,
                    "session_id": pt.session_id.hex(),
                    "text": pt.body.decode("utf-8", errors="replace"),
                },
            )
        )
        self._publish_hidden_arrivals()

    def _publish_hidden_arrivals(self) -> None:
        if self.enclave.mode is not Mode.PUBLIC_HIDDEN:
            return
        try:
            inbox = self.enclave.secure_read_inbox()
        except EnclaveError:
            return
        fresh = inbox.messages[self._inbox_seen :]
        self._inbox_seen = len(inbox.messages)
        for msg in fresh:
            self.bus.publish(
                event(
                    "hidden_msg",
                    SECURE,
                    {
                        "contact_id": msg.contact_id.hex(),
                        "text": msg.body.decode("utf-8", errors="replace"),
                        "watermark": inbox.watermark,
                    },
                )
            )

    # -- command handlers -------------------------------------------------

    def handle_normal(self, cmd: str, args: dict) -> dict:
        with self._lock:
            if cmd == "unlock":
                result = self.enclave.verify_password(str(args["password"]))
                if result.verified:
                    self._ensure_peer()
                return {"verified": result.verified}
            if cmd == "send":
                return self._send_public(str(args["text"]))
            if cmd == "battery":
                return self._battery()
            if cmd == "status":
                return {
                    "session": self._session is not None,
                    "peer_id": self.pair.peer_id.hex(),
                    "profile": self.profile.name,
                }
            raise UniformRefusal()

    def handle_secure(self, cmd: str, args: dict) -> dict:
        with self._lock:
            if cmd == "contact_add":
                self.enclave.secure_add_contact(
                    bytes.fromhex(args["contact_id"]), bytes.fromhex(args["secret"])
                )
                return {"added": args["contact_id"]}
            if cmd == "hidden_send":
                covers = self.enclave.secure_queue_hidden(
                    bytes.fromhex(args["contact_id"]), str(args["text"]).encode("utf-8")
                )
                self._publish_covers(args["contact_id"], covers)
                return {"covers_needed": covers}
            if cmd == "inbox":
                inbox = self.enclave.secure_read_inbox()
                self._inbox_seen = len(inbox.messages)
                return {
                    "watermark": inbox.watermark,
                    "messages": [
                        {
                            "contact_id": m.contact_id.hex(),
                            "text": m.body.decode("utf-8", errors="replace"),
                        }
                        for m in inbox.messages
                    ],
                }
            if cmd == "covers":
                remaining = self.enclave.secure_pending_covers(
                    bytes.fromhex(args["contact_id"])
                )
                return {"covers_needed": remaining}
            if cmd == "disclose":
                return self._disclose(str(args["password"]))
            raise UniformRefusal()

    def _send_public(self, text: str) -> dict:
        if self._outbox is None:
            raise UniformRefusal()
        self._ensure_peer()
        pt = self._outbox.next_plaintext(text.encode("utf-8"))
        env = self.enclave.seal(self.pair.peer_id, pt)
        assert self._session is not None
        self._session.send(env)
        frame = env.to_bytes()
        self.bus.publish(
            event("transcript_frame", NORMAL, {"direction": "out", "frame_hex": frame.hex()})
        )
        self.bus.publish(
            event(
                "public_msg",
                NORMAL,
                {
                    "direction": "out",
                    "seq_no": pt.seq_no,
                    "session_id": pt.session_id.hex(),
                    "text": text,
                },
            )
        )
        if self.enclave.mode is Mode.PUBLIC_HIDDEN:
            try:
                remaining = self.enclave.secure_pending_covers(self.pair.peer_id)
                self._publish_covers(self.pair.peer_id.hex(), remaining)
            except EnclaveError:
                pass
        return {"seq_no": pt.seq_no}

    def _publish_covers(self, contact_hex: str, remaining: int) -> None:
        self.bus.publish(
            event(
                "covers_needed",
                SECURE,
                {"contact_id": contact_hex, "remaining": remaining},
            )
        )

    def _battery(self) -> dict:
        """Battery over the wire bytes this endpoint has observed."""
        if self._session is None:
            raise UniformRefusal()
        frames = self._session.transcript.frames()
        data = b"".join(f[28:] for f in frames)  # ciphertext portions
        pieces = [data[i : i + 16] for i in range(0, len(data) - 16, 16)]
        if len(pieces) < stats.MIN_COINS:
            return {"verdict": "insufficient traffic", "pieces": len(pieces)}
        report = stats.stat_battery(pieces)
        return {
            "verdict": "pass" if report.passed else "fail",
            "alpha": report.alpha,
            "tests": [
                {"name": r.name, "statistic": r.statistic, "p_value": r.p_value}
                for r in report.results
            ],
        }

    def _disclose(self, password: str) -> dict:
        bundle = self.enclave.secure_disclose(password)
        transcript = (
            self._session.transcript.frames() if self._session is not None else []
        )
        verdict = games.verify_disclosure(bundle, transcript, self.profile.coin_width)
        return {
            "peer_keys": [
                {"peer_id": pid.hex(), "auth_key": key.hex()}
                for pid, key in bundle.peer_keys
            ],
            "messages": [
                {
                    "peer_id": m.peer_id.hex(),
                    "session_id": m.session_id.hex(),
                    "seq_no": m.seq_no,
                    "direction": m.direction,
                    "body": m.body.decode("utf-8", errors="replace"),
                    "coin_hex": m.coin.hex(),
                    "padding_hex": m.padding.hex(),
                    "envelope_digest": m.envelope_digest.hex(),
                }
                for m in bundle.messages
            ],
            "verification": {
                "total": verdict.total_records,
                "matched": verdict.matched,
                "mismatched_indices": list(verdict.mismatched_indices),
                "unmatched_frames": verdict.unmatched_frames,
                "all_match": verdict.all_match,
            },
        }


def _reply(msg: dict, ok: bool, data: dict | None = None, error: str | None = None) -> dict:
    out = {
        "v": PROTOCOL_VERSION,
        "type": "reply",
        "id": msg.get("id"),
        "cmd": msg.get("cmd"),
        "ok": ok,
    }
    if ok:
        out["data"] = data or {}
    else:
        out["error"] = error or "error"
    return out


def build_app(service: GatewayService) -> FastAPI:
    from contextlib import asynccontextmanager

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        service.bus.attach_loop(asyncio.get_running_loop())
        yield

    app = FastAPI(title="saltline gateway", lifespan=lifespan)

    async def _serve_socket(ws: WebSocket, chan: str, handler) -> None:
        await ws.accept()
        queue = service.bus.subscribe(chan)

        async def pump_events() -> None:
            while True:
                evt = await queue.get()
                await ws.send_json(evt)

        async def pump_commands() -> None:
            while True:
                msg = await ws.receive_json()
                cmd = str(msg.get("cmd", ""))
                args = msg.get("args") or {}
                try:
                    data = await asyncio.to_thread(handler, cmd, args)
                    await ws.send_json(_reply(msg, True, data=data))
                except LockedOutError as exc:
                    await ws.send_json(_reply(msg, False, error=str(exc)))
                except (EnclaveError, KeyMissingError, channel.ChannelError) as exc:
                    await ws.send_json(_reply(msg, False, error=str(exc)))
                except (KeyError, ValueError):
                    await ws.send_json(_reply(msg, False, error="unavailable"))

        tasks = [
            asyncio.create_task(pump_events()),
            asyncio.create_task(pump_commands()),
        ]
        try:
            done, pending = await asyncio.wait(tasks, return_when=asyncio.FIRST_COMPLETED)
            for t in pending:
                t.cancel()
            for t in done:
                exc = t.exception()
                if exc is not None and not isinstance(
                    exc, (WebSocketDisconnect, RuntimeError)
                ):
                    raise exc
        except WebSocketDisconnect:
            pass
        finally:
            service.bus.unsubscribe(queue)

    @app.websocket("/ws/normal")
    async def ws_normal(ws: WebSocket) -> None:
        await _serve_socket(ws, NORMAL, service.handle_normal)

    @app.websocket("/ws/secure")
    async def ws_secure(ws: WebSocket) -> None:
        await _serve_socket(ws, SECURE, service.handle_secure)

    @app.get("/healthz")
    async def healthz() -> dict:
        return {"ok": True}

    return app
