"""The enclave: passwords select modes, secrets never cross the boundary,
and the execution transcript looks the same either way.

Run:  python demos/03_enclave_modes.py
"""

import tempfile
from pathlib import Path

from saltline import Enclave, EnclaveConfig, PublicPlaintext
from saltline.enclave import UniformRefusal

workdir = Path(tempfile.mkdtemp(prefix="enclave-demo-"))
PEER = b"\x01" * 8
AUTH = b"\x66" * 160
SECRET = bytes(range(128))

print("=== setup ceremony: three passwords and a watermark ===")
alice = Enclave.setup(
    EnclaveConfig(store_path=str(workdir / "alice.blob"), password_cost=6),
    "public-pass", "hidden-pass", "disclose-pass",
    watermark="emerald heron",
)
print(f"store reserved: {Path(alice.config.store_path).stat().st_size} octets (constant forever)")

print("\n=== the response to unlock never reveals the mode ===")
r1 = alice.verify_password("public-pass")
print(f"public password  -> verified={r1.verified}, response bytes {r1.to_bytes().hex()}")
r2 = alice.verify_password("hidden-pass")
print(f"hidden password  -> verified={r2.verified}, response bytes {r2.to_bytes().hex()}")
print("identical responses; only the enclave knows which mode it entered.")

print("\n=== hidden surface exists only in hidden mode ===")
alice.register_peer(PEER, AUTH)
alice.secure_add_contact(PEER, SECRET)
covers = alice.secure_queue_hidden(PEER, b"meet at 9")
print(f"queued 'meet at 9': {covers} cover messages needed")

alice.verify_password("public-pass")  # drop back to public-only
try:
    alice.secure_read_inbox()
except UniformRefusal as exc:
    print(f"inbox in public mode: {exc} (same shape as any unknown command)")

print("\n=== sealing looks identical in both modes ===")
alice.verify_password("hidden-pass")
envs = []
for i in range(covers):
    envs.append(alice.seal(PEER, PublicPlaintext(b"\x07" * 8, i + 1, b"see you there")))
print(f"sent {len(envs)} public messages; sizes: {[len(e.to_bytes()) for e in envs]}")

print("\n=== the receiving enclave reassembles inside the secure world ===")
bob = Enclave.setup(
    EnclaveConfig(store_path=str(workdir / "bob.blob"), password_cost=6),
    "public-pass", "hidden-pass", "disclose-pass",
    watermark="violet twelve",
)
bob.verify_password("hidden-pass")
bob.register_peer(PEER, AUTH)
bob.secure_add_contact(PEER, SECRET)
for env in envs:
    pt = bob.open_envelope(PEER, env)   # only the public text crosses back
inbox = bob.secure_read_inbox()
print(f"watermark (anti-spoofing): {inbox.watermark!r}")
for m in inbox.messages:
    print(f"hidden inbox: {m.body!r}")

print("\n=== the normal world saw only shapes ===")
for ev in bob.transcript[-4:]:
    print(f"  t={ev.t:2d} {ev.call:16s} params={ev.param_sizes} response={ev.response_size}")

print("\n=== controlled disclosure ===")
bundle = alice.secure_disclose("disclose-pass")
print(f"disclosed {len(bundle.messages)} message records and {len(bundle.peer_keys)} key(s)")
fields = {f.name for rec in bundle.messages[:1] for f in rec.__dataclass_fields__.values()}
print(f"record fields: {sorted(fields)}")
print("no contact keys, no hidden plaintext, no queue state - deniability holds.")
