"""The hidden channel: frames, cover budgets, and reorder-tolerant decode.

Run:  python demos/02_hidden_channel.py
"""

import random

from saltline import PROFILES, cover_count, encode_hidden
from saltline.crypto import prng_fill
from saltline.hidden import Reassembler

hmk = prng_fill(16)  # the per-contact key, exchanged out of band

print("=== cover-message budget per profile ===")
print(f"{'profile':14s} {'coin':>5s}  n=1  n=30  n=100  n=4096")
for name in ("telegram", "signal", "briar"):
    p = PROFILES[name]
    row = [cover_count(n, p) for n in (1, 30, 100, 4096)]
    print(f"{p.name:14s} {p.coin_width:5d}  {row[0]:3d}  {row[1]:4d}  {row[2]:5d}  {row[3]:6d}")

profile = PROFILES["telegram"]
msg = b"rendezvous moved to thursday"
print(f"\n=== encoding a {len(msg)}-octet hidden message ===")
queue = encode_hidden(hmk, msg, profile)
chunks = queue.drain()
print(f"chunks: {len(chunks)} = 2 header + {len(chunks) - 2} body")
for i, c in enumerate(chunks):
    kind = "header" if i < 2 else "body"
    print(f"  chunk {i} ({kind}): {c.hex()}")
print("every chunk is keyed ciphertext or fresh randomness; none of them")
print("shows structure without the contact key.")

print("\n=== decoding, in order ===")
reasm = Reassembler(hmk, profile)
for seq, c in enumerate(chunks, start=1):
    for out in reasm.ingest(seq, c):
        print(f"decoded after chunk {seq}: {out!r}")

print("\n=== decoding, shuffled delivery ===")
labelled = list(enumerate(chunks, start=1))
random.Random(7).shuffle(labelled)
reasm = Reassembler(hmk, profile)
print(f"delivery order: {[s for s, _ in labelled]}")
for seq, c in labelled:
    for out in reasm.ingest(seq, c):
        print(f"decoded once the last gap filled: {out!r}")

print("\n=== the wrong key sees only noise ===")
wrong = Reassembler(prng_fill(16), profile)
emitted = []
for seq, c in enumerate(chunks, start=1):
    emitted += wrong.ingest(seq, c)
print(f"messages recovered without the key: {emitted}")
