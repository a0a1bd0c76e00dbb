"""End-to-end demo: two gateway processes over TCP loopback.

Drives the exact operator flow: pair, init, serve on both sides, unlock
hidden, add the contact, queue "meet at 9", carry it under public chatter,
read it from the peer's secure inbox, then disclose and verify clean.
"""

import json
import socket
import subprocess
import sys
import time

import pytest


def free_port() -> int:
    s = socket.socket()
    s.bind(("127.0.0.1", 0))
    port = s.getsockname()[1]
    s.close()
    return port


def run_cli(*args: str, timeout: float = 30.0) -> dict | str:
    proc = subprocess.run(
        [sys.executable, "-m", "saltline.cli", *args],
        capture_output=True,
        text=True,
        timeout=timeout,
    )
    assert proc.returncode == 0, f"{args}: {proc.stdout}\n{proc.stderr}"
    out = proc.stdout.strip()
    try:
        return json.loads(out)
    except json.JSONDecodeError:
        return out


def wait_healthy(port: int, timeout: float = 15.0) -> None:
    import httpx

    deadline = time.time() + timeout
    while time.time() < deadline:
        try:
            if httpx.get(f"http://127.0.0.1:{port}/healthz", timeout=1.0).status_code == 200:
                return
        except httpx.HTTPError:
            time.sleep(0.2)
    raise AssertionError(f"gateway on {port} never became healthy")


@pytest.fixture()
def two_devices(tmp_path):
    pair_file = tmp_path / "pair.json"
    run_cli("pair", "--out", str(pair_file), "--seed", "1")
    stores = {}
    procs = []
    ws_ports = {}
    peer_port = free_port()
    try:
        for name in ("alice", "bob"):
            store = tmp_path / f"{name}.blob"
            stores[name] = store
            run_cli(
                "init",
                "--store", str(store),
                "--cost", "6",
                "--public-pw", "public-pass",
                "--hidden-pw", "hidden-pass",
                "--disclosure-pw", "disclose-pass",
                "--watermark", f"wm-{name}",
                "--seed", "7",
            )
            ws_ports[name] = free_port()
            link = (
                ["--listen-peer", f"127.0.0.1:{peer_port}"]
                if name == "alice"
                else ["--connect-peer", f"127.0.0.1:{peer_port}"]
            )
            procs.append(
                subprocess.Popen(
                    [
                        sys.executable, "-m", "saltline.cli", "serve",
                        "--store", str(store),
                        "--pair", str(pair_file),
                        "--listen", f"127.0.0.1:{ws_ports[name]}",
                        *link,
                    ],
                    stdout=subprocess.PIPE,
                    stderr=subprocess.STDOUT,
                    text=True,
                )
            )
        for name in ("alice", "bob"):
            wait_healthy(ws_ports[name])
        yield {
            "pair": str(pair_file),
            "alice": f"ws://127.0.0.1:{ws_ports['alice']}",
            "bob": f"ws://127.0.0.1:{ws_ports['bob']}",
        }
    finally:
        for p in procs:
            p.terminate()
        for p in procs:
            try:
                p.wait(timeout=5)
            except subprocess.TimeoutExpired:
                p.kill()


def test_end_to_end_demo(two_devices):
    pair = two_devices["pair"]
    alice = two_devices["alice"]
    bob = two_devices["bob"]

    # Unlock hidden mode on both devices.
    assert run_cli("unlock", "--gateway", alice, "--password", "hidden-pass")["verified"]
    assert run_cli("unlock", "--gateway", bob, "--password", "hidden-pass")["verified"]

    # Out-of-band contact exchange on both sides.
    run_cli("contact", "add", "--pair", pair, "--gateway", alice)
    run_cli("contact", "add", "--pair", pair, "--gateway", bob)

    # Queue the hidden message; 9 octets on the telegram profile need 3 covers.
    queued = run_cli("hidden", "send", "meet at 9", "--pair", pair, "--gateway", alice)
    assert queued["covers_needed"] == 3

    # Public chat proceeds; the hidden frame rides along.
    for i in range(3):
        assert "seq_no" in run_cli("send", f"public chat {i}", "--gateway", alice)

    # Give bob's reader a moment, then read the secure inbox.
    deadline = time.time() + 10
    inbox = {"messages": []}
    while time.time() < deadline and not inbox["messages"]:
        inbox = run_cli("hidden", "inbox", "--gateway", bob)
        if not inbox["messages"]:
            time.sleep(0.3)
    assert inbox["watermark"] == "wm-bob"
    assert [m["text"] for m in inbox["messages"]] == ["meet at 9"]

    # More public chatter so the battery has enough material.
    for i in range(10):
        run_cli("send", f"filler chatter {i}", "--gateway", alice)
        run_cli("send", f"reply chatter {i}", "--gateway", bob)

    battery = run_cli("battery", "--gateway", bob)
    assert battery["verdict"] == "pass", battery

    # Disclosure on the sender verifies clean against its own wire record.
    disclosure = run_cli("disclose", "--gateway", alice, "--password", "disclose-pass")
    ver = disclosure["verification"]
    assert ver["all_match"], ver
    assert ver["total"] == ver["matched"] > 0
    raw = json.dumps(disclosure)
    assert "hidden_secret" not in raw and "watermark" not in raw


def test_bandwidth_command():
    assert run_cli("bandwidth", "30", "telegram") == 4
    assert run_cli("bandwidth", "1", "signal") == 3
    assert run_cli("bandwidth", "49", "briar") == 4


def test_game_commands_run():
    out = run_cli(
        "game", "transcript", "--trials", "100", "--seed", "3", timeout=120.0
    )
    assert abs(out["advantage"]) < 0.2
    text = run_cli(
        "game", "execution", "--scripts", "3", "--seed", "11", timeout=120.0
    )
    assert "3/3 transcripts equal" in text
