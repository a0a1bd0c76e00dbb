"""Full two-party exchange over a real byte stream, with deliberate
reordering, then disclosure verified against the captured wire.

Run:  python demos/05_two_party_wire.py
"""

import random
import tempfile
from pathlib import Path

from saltline import Enclave, EnclaveConfig, PublicPlaintext
from saltline.games import verify_disclosure
from saltline.transport import ReorderBuffer, memory_pair

workdir = Path(tempfile.mkdtemp(prefix="wire-demo-"))
PEER = b"\x01" * 8
AUTH = b"\x66" * 160
SECRET = bytes(range(128))


def device(name: str) -> Enclave:
    e = Enclave.setup(
        EnclaveConfig(store_path=str(workdir / f"{name}.blob"), password_cost=6),
        "public-pass", "hidden-pass", "disclose-pass",
        watermark=f"wm-{name}",
    )
    e.verify_password("hidden-pass")
    e.register_peer(PEER, AUTH)
    e.secure_add_contact(PEER, SECRET)
    return e


alice, bob = device("alice"), device("bob")
wire_a, wire_b = memory_pair()

print("=== alice queues a hidden message and chats normally ===")
covers = alice.secure_queue_hidden(PEER, b"the package is in locker 9")
print(f"covers needed: {covers}")

sender = ReorderBuffer(wire_a, window=4, rng=random.Random(3))
chatter = [
    b"did you watch the match", b"unbelievable finish", b"we should go sometime",
    b"saturday works", b"bring marta too", b"ok, noon then",
]
for i, body in enumerate(chatter[: covers + 2], start=1):
    sender.send(alice.seal(PEER, PublicPlaintext(wire_a.session_id, i, body)))
sender.flush()
print(f"sent {covers + 2} public messages, delivery shuffled in windows of 4")

print("\n=== bob reads: public text for the app, hidden text for the eye ===")
for _ in range(covers + 2):
    env = wire_b.recv()
    pt = bob.open_envelope(PEER, env)
    print(f"  public in (seq {pt.seq_no}): {pt.body.decode()}")
inbox = bob.secure_read_inbox()
print(f"secure inbox [{inbox.watermark}]: {[m.body.decode() for m in inbox.messages]}")

print("\n=== the coercer arrives; alice disclosed everything public ===")
bundle = alice.secure_disclose("disclose-pass")
frames = wire_a.transcript.frames("out")
verdict = verify_disclosure(bundle, frames, coin_width=15)
print(f"records: {verdict.total_records}, re-encryptions matching the wire: {verdict.matched}")
print(f"mismatches: {list(verdict.mismatched_indices)} -> the transcript is fully explained")
print("every coin in the bundle is a plausible random salt; nothing says")
print("some of them were a hidden message.")
