"""Command-line entry points.

Device lifecycle: ``pair`` mints out-of-band pairing material, ``init`` runs
the setup ceremony against a store file, ``serve`` boots the device: enclave,
peer link over TCP loopback, and the WebSocket gateway for UIs.

Operator commands (unlock, send, hidden send, ...) are thin WebSocket clients
against a running gateway. ``game`` and ``bandwidth`` run the harness
directly, no service needed.
"""

from __future__ import annotations

import argparse
import getpass
import json
import sys
import threading
import time

from . import games, hidden
from .channel import PROFILES
from .crypto import SeededRng
from .enclave import Enclave, EnclaveConfig
from .gateway import PairInfo, GatewayService, build_app


def _profile(name: str):
    try:
        return PROFILES[name]
    except KeyError:
        raise SystemExit(f"unknown profile {name!r}; choose telegram|signal|briar")


def _password(args, attr: str, prompt: str) -> str:
    value = getattr(args, attr)
    return value if value else getpass.getpass(prompt)


def _rng(seed):
    return SeededRng(seed) if seed is not None else None


# ---------------------------------------------------------------------------
# device lifecycle
# ---------------------------------------------------------------------------


def cmd_pair(args) -> int:
    pair = PairInfo.generate(_rng(args.seed))
    with open(args.out, "w") as fh:
        fh.write(pair.to_json() + "\n")
    print(f"pairing material written to {args.out}; copy it to both devices")
    return 0


def cmd_init(args) -> int:
    cfg = EnclaveConfig(
        profile=_profile(args.profile),
        store_path=args.store,
        password_cost=args.cost,
    )
    enclave = Enclave.setup(
        cfg,
        _password(args, "public_pw", "public password: "),
        _password(args, "hidden_pw", "hidden password: "),
        _password(args, "disclosure_pw", "disclosure password: "),
        args.watermark or input("watermark text: "),
        rng=_rng(args.seed),
    )
    with open(args.store + ".devkey", "w") as fh:
        fh.write(enclave._master_key.hex() + "\n")
    print(f"initialized; store at {args.store} ({1 << 20} octets)")
    return 0


def _establish_peer_link(service: GatewayService, args) -> None:
    from . import transport

    def runner() -> None:
        if args.listen_peer:
            host, port = args.listen_peer.rsplit(":", 1)
            listener = transport.Listener(host, int(port))
            session = listener.accept()
        else:
            host, port = args.connect_peer.rsplit(":", 1)
            session = None
            for _ in range(100):
                try:
                    session = transport.connect(host, int(port))
                    break
                except OSError:
                    time.sleep(0.1)
            if session is None:
                print("could not reach peer", file=sys.stderr)
                return
        service.attach_session(session)
        print(f"peer link established (session {session.session_id.hex()})")

    threading.Thread(target=runner, daemon=True).start()


def cmd_serve(args) -> int:
    import uvicorn

    with open(args.store + ".devkey") as fh:
        master_key = bytes.fromhex(fh.read().strip())
    cfg = EnclaveConfig(
        profile=_profile(args.profile),
        store_path=args.store,
        unified_io=not args.legacy_interrupt_mode,
    )
    enclave = Enclave.load(cfg, master_key, rng=_rng(args.seed))
    with open(args.pair) as fh:
        pair = PairInfo.from_json(fh.read())
    service = GatewayService(enclave, pair, cfg.profile)
    _establish_peer_link(service, args)
    app = build_app(service)
    host, port = args.listen.rsplit(":", 1)
    try:
        uvicorn.run(app, host=host, port=int(port), log_level="warning")
    finally:
        enclave.save()
    return 0


# ---------------------------------------------------------------------------
# gateway clients
# ---------------------------------------------------------------------------


def _call_gateway(url: str, path: str, cmd: str, args_dict: dict) -> dict:
    from websockets.sync.client import connect as ws_connect

    with ws_connect(url.rstrip("/") + path) as ws:
        ws.send(
            json.dumps(
                {"v": 1, "type": "cmd", "id": 1, "cmd": cmd, "args": args_dict}
            )
        )
        while True:
            msg = json.loads(ws.recv(timeout=10))
            if msg.get("type") == "reply":
                return msg


def _print_reply(reply: dict) -> int:
    print(json.dumps(reply.get("data") if reply.get("ok") else reply, indent=2))
    return 0 if reply.get("ok") else 1


def cmd_unlock(args) -> int:
    pw = _password(args, "password", "password: ")
    return _print_reply(
        _call_gateway(args.gateway, "/ws/normal", "unlock", {"password": pw})
    )


def cmd_send(args) -> int:
    return _print_reply(
        _call_gateway(args.gateway, "/ws/normal", "send", {"text": args.text})
    )


def cmd_battery(args) -> int:
    return _print_reply(_call_gateway(args.gateway, "/ws/normal", "battery", {}))


def cmd_contact_add(args) -> int:
    with open(args.pair) as fh:
        pair = PairInfo.from_json(fh.read())
    return _print_reply(
        _call_gateway(
            args.gateway,
            "/ws/secure",
            "contact_add",
            {"contact_id": pair.peer_id.hex(), "secret": pair.hidden_secret.hex()},
        )
    )


def cmd_hidden_send(args) -> int:
    with open(args.pair) as fh:
        pair = PairInfo.from_json(fh.read())
    return _print_reply(
        _call_gateway(
            args.gateway,
            "/ws/secure",
            "hidden_send",
            {"contact_id": pair.peer_id.hex(), "text": args.text},
        )
    )


def cmd_hidden_inbox(args) -> int:
    return _print_reply(_call_gateway(args.gateway, "/ws/secure", "inbox", {}))


def cmd_disclose(args) -> int:
    pw = _password(args, "password", "disclosure password: ")
    return _print_reply(
        _call_gateway(args.gateway, "/ws/secure", "disclose", {"password": pw})
    )


# ---------------------------------------------------------------------------
# harness
# ---------------------------------------------------------------------------


def cmd_bandwidth(args) -> int:
    print(hidden.cover_count(args.n, _profile(args.profile)))
    return 0


def cmd_game_transcript(args) -> int:
    profile = _profile(args.profile)
    bodies = tuple(b"cover %04d" % i for i in range(args.public_messages))
    script = games.GameScript(
        public_bodies=bodies,
        hidden_message=b"h" * args.hidden_size,
        profile=profile,
        seed=args.seed,
    )
    result = games.run_transcript_game(
        script, args.trials, give_hmk=args.hmk_oracle
    )
    print(
        json.dumps(
            {
                "trials": result.trials,
                "wins": result.wins,
                "win_rate": result.win_rate,
                "advantage": result.advantage,
                "ci": [result.ci_low, result.ci_high],
                "adversary": "hmk_oracle" if args.hmk_oracle else "stat_battery",
            },
            indent=2,
        )
    )
    return 0


def cmd_game_execution(args) -> int:
    unified = not args.legacy_interrupt_mode
    divergent = 0
    for i in range(args.scripts):
        script = games.make_random_script(args.seed + i, length=args.length)
        verdict = games.run_execution_game(
            script, _profile(args.profile), unified_io=unified
        )
        status = "equal" if verdict.equal else f"diverged@{verdict.divergence_index}"
        print(f"script {i:03d} seed={args.seed + i} hidden_io={script.has_hidden_io} {status}")
        if not verdict.equal:
            divergent += 1
    print(f"{args.scripts - divergent}/{args.scripts} transcripts equal")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="saltline")
    sub = p.add_subparsers(dest="command", required=True)

    pair = sub.add_parser("pair", help="mint out-of-band pairing material")
    pair.add_argument("--out", required=True)
    pair.add_argument("--seed", type=int)
    pair.set_defaults(fn=cmd_pair)

    init = sub.add_parser("init", help="run the setup ceremony")
    init.add_argument("--store", required=True)
    init.add_argument("--profile", default="telegram")
    init.add_argument("--cost", type=int, default=14)
    init.add_argument("--public-pw", dest="public_pw")
    init.add_argument("--hidden-pw", dest="hidden_pw")
    init.add_argument("--disclosure-pw", dest="disclosure_pw")
    init.add_argument("--watermark")
    init.add_argument("--seed", type=int)
    init.set_defaults(fn=cmd_init)

    serve = sub.add_parser("serve", help="run the device gateway")
    serve.add_argument("--store", required=True)
    serve.add_argument("--pair", required=True)
    serve.add_argument("--listen", default="127.0.0.1:8750", help="WebSocket bind")
    group = serve.add_mutually_exclusive_group(required=True)
    group.add_argument("--listen-peer")
    group.add_argument("--connect-peer")
    serve.add_argument("--profile", default="telegram")
    serve.add_argument("--seed", type=int)
    serve.add_argument("--legacy-interrupt-mode", action="store_true")
    serve.set_defaults(fn=cmd_serve)

    unlock = sub.add_parser("unlock", help="enter a password, select a mode")
    unlock.add_argument("--gateway", default="ws://127.0.0.1:8750")
    unlock.add_argument("--password")
    unlock.set_defaults(fn=cmd_unlock)

    send = sub.add_parser("send", help="send a public message")
    send.add_argument("text")
    send.add_argument("--gateway", default="ws://127.0.0.1:8750")
    send.set_defaults(fn=cmd_send)

    battery = sub.add_parser("battery", help="run the stat battery on observed wire traffic")
    battery.add_argument("--gateway", default="ws://127.0.0.1:8750")
    battery.set_defaults(fn=cmd_battery)

    contact = sub.add_parser("contact", help="contact management")
    contact_sub = contact.add_subparsers(dest="subcommand", required=True)
    c_add = contact_sub.add_parser("add", help="add a hidden contact from a pair file")
    c_add.add_argument("--pair", required=True)
    c_add.add_argument("--gateway", default="ws://127.0.0.1:8750")
    c_add.set_defaults(fn=cmd_contact_add)

    hidden_cmd = sub.add_parser("hidden", help="hidden channel operations")
    hidden_sub = hidden_cmd.add_subparsers(dest="subcommand", required=True)
    h_send = hidden_sub.add_parser("send")
    h_send.add_argument("text")
    h_send.add_argument("--pair", required=True)
    h_send.add_argument("--gateway", default="ws://127.0.0.1:8750")
    h_send.set_defaults(fn=cmd_hidden_send)
    h_inbox = hidden_sub.add_parser("inbox")
    h_inbox.add_argument("--gateway", default="ws://127.0.0.1:8750")
    h_inbox.set_defaults(fn=cmd_hidden_inbox)

    disclose = sub.add_parser("disclose", help="controlled disclosure of public traffic")
    disclose.add_argument("--gateway", default="ws://127.0.0.1:8750")
    disclose.add_argument("--password")
    disclose.set_defaults(fn=cmd_disclose)

    game = sub.add_parser("game", help="run an indistinguishability game")
    game_sub = game.add_subparsers(dest="subcommand", required=True)
    gt = game_sub.add_parser("transcript")
    gt.add_argument("--trials", type=int, default=1000)
    gt.add_argument("--seed", type=int, default=0)
    gt.add_argument("--profile", default="telegram")
    gt.add_argument("--public-messages", type=int, default=8)
    gt.add_argument("--hidden-size", type=int, default=24)
    gt.add_argument("--hmk-oracle", action="store_true")
    gt.set_defaults(fn=cmd_game_transcript)
    ge = game_sub.add_parser("execution")
    ge.add_argument("--scripts", type=int, default=50)
    ge.add_argument("--length", type=int, default=20)
    ge.add_argument("--seed", type=int, default=0)
    ge.add_argument("--profile", default="telegram")
    ge.add_argument("--legacy-interrupt-mode", action="store_true")
    ge.set_defaults(fn=cmd_game_execution)

    bw = sub.add_parser("bandwidth", help="covers needed for an n-octet hidden message")
    bw.add_argument("n", type=int)
    bw.add_argument("profile")
    bw.set_defaults(fn=cmd_bandwidth)

    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
