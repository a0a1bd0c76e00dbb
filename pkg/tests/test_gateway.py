"""Gateway service: WebSocket schema, channel separation, full demo flow."""

import json

import pytest
from fastapi.testclient import TestClient

from saltline.crypto import SeededRng
from saltline.enclave import Enclave, EnclaveConfig
from saltline.gateway import GatewayService, PairInfo, build_app
from saltline.transport import memory_pair

PWS = ("public-pass", "hidden-pass", "disclose-pass")
WATERMARK = "violet twelve"


@pytest.fixture()
def linked_services(tmp_path):
    pair = PairInfo.generate(SeededRng(77))
    services = []
    for name in ("alice", "bob"):
        cfg = EnclaveConfig(store_path=str(tmp_path / f"{name}.blob"), password_cost=4)
        enclave = Enclave.setup(cfg, *PWS, watermark=WATERMARK, rng=SeededRng(5))
        services.append(GatewayService(enclave, pair, cfg.profile))
    s_a, s_b = memory_pair(rng=SeededRng(6))
    services[0].attach_session(s_a)
    services[1].attach_session(s_b)
    return services


class Client:
    """Tiny duplex helper over the starlette test websocket."""

    def __init__(self, ws):
        self.ws = ws
        self.events = []
        self._next = 1

    def call(self, cmd, **args):
        msg_id = self._next
        self._next += 1
        self.ws.send_json({"v": 1, "type": "cmd", "id": msg_id, "cmd": cmd, "args": args})
        while True:
            msg = self.ws.receive_json()
            if msg.get("type") == "reply" and msg.get("id") == msg_id:
                return msg
            self.events.append(msg)

    def drain_events(self, want, timeout_msgs=50):
        """Receive until an event of kind `want` shows up."""
        for evt in self.events:
            if evt.get("event") == want:
                return evt
        for _ in range(timeout_msgs):
            msg = self.ws.receive_json()
            if msg.get("type") == "event":
                self.events.append(msg)
                if msg.get("event") == want:
                    return msg
        raise AssertionError(f"no {want} event observed")


def test_unlock_send_receive_public(linked_services):
    alice, bob = linked_services
    with TestClient(build_app(alice)) as ca, TestClient(build_app(bob)) as cb:
        with ca.websocket_connect("/ws/normal") as wa, cb.websocket_connect(
            "/ws/normal"
        ) as wb:
            a, b = Client(wa), Client(wb)
            r = a.call("unlock", password="public-pass")
            assert r["ok"] and r["data"]["verified"]
            assert b.call("unlock", password="public-pass")["data"]["verified"]
            assert a.call("send", text="hello from alice")["ok"]
            evt = b.drain_events("public_msg")
            assert evt["payload"]["text"] == "hello from alice"
            assert evt["payload"]["direction"] == "in"
            frame_evt = b.drain_events("transcript_frame")
            assert frame_evt["channel"] == "normal"


def test_wrong_password_and_unknown_cmd_uniform(linked_services):
    alice, _ = linked_services
    with TestClient(build_app(alice)) as ca:
        with ca.websocket_connect("/ws/normal") as wa:
            a = Client(wa)
            assert a.call("unlock", password="nope-nope")["data"] == {"verified": False}
            bad = a.call("frobnicate")
            assert not bad["ok"] and bad["error"] == "unavailable"


def test_hidden_flow_and_channel_separation(linked_services):
    alice, bob = linked_services
    with TestClient(build_app(alice)) as ca, TestClient(build_app(bob)) as cb:
        with ca.websocket_connect("/ws/normal") as wan, ca.websocket_connect(
            "/ws/secure"
        ) as was, cb.websocket_connect("/ws/normal") as wbn, cb.websocket_connect(
            "/ws/secure"
        ) as wbs:
            an, asec = Client(wan), Client(was)
            bn, bsec = Client(wbn), Client(wbs)

            # Secure surface refuses before hidden unlock, with a uniform shape.
            refusal = asec.call("inbox")
            assert not refusal["ok"] and refusal["error"] == "unavailable"

            assert an.call("unlock", password="hidden-pass")["data"]["verified"]
            assert bn.call("unlock", password="hidden-pass")["data"]["verified"]
            pair_hex = alice.pair.peer_id.hex()
            secret_hex = alice.pair.hidden_secret.hex()
            assert asec.call("contact_add", contact_id=pair_hex, secret=secret_hex)["ok"]
            assert bsec.call("contact_add", contact_id=pair_hex, secret=secret_hex)["ok"]

            # Watermark arrives on the secure surface only.
            inbox = bsec.call("inbox")["data"]
            assert inbox["watermark"] == WATERMARK and inbox["messages"] == []

            queued = asec.call("hidden_send", contact_id=pair_hex, text="meet at 9")
            assert queued["data"]["covers_needed"] == 3

            for i in range(3):
                assert an.call("send", text=f"public chatter {i}")["ok"]

            evt = bsec.drain_events("hidden_msg")
            assert evt["payload"]["text"] == "meet at 9"
            assert evt["payload"]["watermark"] == WATERMARK
            assert evt["channel"] == "secure"

            gauge = asec.drain_events("covers_needed")
            assert gauge["channel"] == "secure"

            # Channel separation audit: nothing hidden ever crossed normal.
            for evt in an.events + bn.events:
                raw = json.dumps(evt)
                assert evt.get("event") not in ("hidden_msg", "covers_needed")
                assert "watermark" not in raw and "hmk" not in raw
                assert "meet at 9" not in raw

            # Battery over observed wire bytes passes in hidden mode too.
            for i in range(3, 40):
                an.call("send", text=f"more chatter {i}")
            verdict = bn.call("battery")["data"]
            assert verdict["verdict"] == "pass"


def test_disclosure_over_gateway(linked_services):
    alice, bob = linked_services
    with TestClient(build_app(alice)) as ca:
        with ca.websocket_connect("/ws/normal") as wan, ca.websocket_connect(
            "/ws/secure"
        ) as was:
            an, asec = Client(wan), Client(was)
            an.call("unlock", password="public-pass")
            for i in range(4):
                an.call("send", text=f"plain {i}")
            out = asec.call("disclose", password="disclose-pass")
            assert out["ok"]
            ver = out["data"]["verification"]
            assert ver["all_match"] and ver["matched"] == 4
            assert len(out["data"]["messages"]) == 4
            # Bundle coins re-encrypt to the on-wire envelopes; no hidden keys.
            raw = json.dumps(out["data"])
            assert "hidden_secret" not in raw and "hmk" not in raw


def test_status_and_profile(linked_services):
    alice, _ = linked_services
    with TestClient(build_app(alice)) as ca:
        with ca.websocket_connect("/ws/normal") as wan:
            a = Client(wan)
            status = a.call("status")["data"]
            assert status["session"] and status["profile"] == "telegram-like"
