"""The hidden channel carried inside public-message random coins.

A hidden message becomes a frame of coin-width chunks: two header chunks
holding a random IV plus an encrypted length field and zero redundancy,
followed by the CTR ciphertext of the message body. Every chunk is either
uniform randomness (the IV, the tail fill) or keyed CTR output, so the coin
stream with injection is indistinguishable from one without the key.

Receivers scan seq-adjacent coin pairs for the redundancy pattern under their
contact key and reassemble bodies by public sequence number, which makes the
decode tolerant to arbitrary delivery reordering.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from enum import Enum

from . import crypto
from .channel import ChannelProfile
from .crypto import BLOCK

IV_LEN = 16
LEN_FIELD = 8
MAX_HIDDEN = 1 << 20

# The header's length+redundancy region is encrypted with CTR counter blocks
# whose top bit is flipped relative to the body's, so the two keystreams can
# never overlap within a frame.
_HEADER_COUNTER_MASK = 0x80


class HiddenChannelError(Exception):
    pass


class KeyMissingError(HiddenChannelError):
    pass


def cover_count(n: int, profile: ChannelProfile) -> int:
    """Public messages needed to carry an n-octet hidden message."""
    if n < 1:
        raise ValueError("hidden message must be at least 1 octet")
    return math.ceil(n / profile.coin_width) + 2


def header_nonce(iv: bytes) -> bytes:
    return bytes([iv[0] ^ _HEADER_COUNTER_MASK]) + iv[1:]


@dataclass(frozen=True)
class HiddenFrameHeader:
    """Frame header: IV, body length, and all-zero redundancy."""

    iv: bytes
    length: int

    def redundancy_len(self, profile: ChannelProfile) -> int:
        return 2 * profile.coin_width - IV_LEN - LEN_FIELD

    def serialized(self, profile: ChannelProfile) -> bytes:
        """Plaintext header structure, exactly two chunks wide."""
        return (
            self.iv
            + self.length.to_bytes(LEN_FIELD, "big")
            + b"\x00" * self.redundancy_len(profile)
        )


def _header_chunks(header: HiddenFrameHeader, hmk: bytes, profile: ChannelProfile) -> list[bytes]:
    """Two chunks: the IV in clear, then the encrypted length + redundancy.

    The IV is itself uniform randomness so it needs no covering; the length
    field and zeros would be recognisable and are encrypted under the contact
    key, keyed to the IV.
    """
    plain = header.length.to_bytes(LEN_FIELD, "big") + b"\x00" * header.redundancy_len(profile)
    sealed = header.iv + crypto.ctr_xcrypt(hmk, header_nonce(header.iv), plain)
    w = profile.coin_width
    return [sealed[:w], sealed[w : 2 * w]]


class ChunkQueue:
    """FIFO pool of coin-width chunks awaiting injection."""

    def __init__(self) -> None:
        self._pending: deque[bytes] = deque()

    def push_frame(self, chunks: list[bytes]) -> None:
        self._pending.extend(chunks)

    def pop(self) -> bytes | None:
        return self._pending.popleft() if self._pending else None

    def drain(self) -> list[bytes]:
        chunks = list(self._pending)
        self._pending.clear()
        return chunks

    def remaining(self) -> int:
        return len(self._pending)


def encode_hidden(
    hmk: bytes, msg: bytes, profile: ChannelProfile, rng=None
) -> ChunkQueue:
    """Encrypt and chunk a hidden message into a ready-to-inject queue."""
    if len(hmk) != BLOCK:
        raise KeyMissingError("no 16-octet contact key established")
    if not 1 <= len(msg) <= MAX_HIDDEN:
        raise ValueError(f"hidden message must be 1..{MAX_HIDDEN} octets")
    w = profile.coin_width
    iv = crypto.prng_fill(IV_LEN, rng)
    header = HiddenFrameHeader(iv, len(msg))
    chunks = _header_chunks(header, hmk, profile)
    body = crypto.ctr_xcrypt(hmk, iv, msg)
    for i in range(0, len(body), w):
        chunk = body[i : i + w]
        if len(chunk) < w:
            # Random tail fill: zeros here would bias the coin distribution.
            chunk += crypto.prng_fill(w - len(chunk), rng)
        chunks.append(chunk)
    assert len(chunks) == cover_count(len(msg), profile)
    queue = ChunkQueue()
    queue.push_frame(chunks)
    return queue


def next_coin(queue: ChunkQueue, coin_width: int, rng=None) -> bytes:
    """The per-message coin: fresh randomness, overwritten by a pending chunk.

    The random draw happens unconditionally so the work done is identical
    whether or not injection occurs.
    """
    coin = crypto.prng_fill(coin_width, rng)
    chunk = queue.pop()
    return chunk if chunk is not None else coin


class Phase(Enum):
    SCANNING = "scanning"
    COLLECTING = "collecting"


class Reassembler:
    """Receiver-side state machine turning ingested coins back into messages.

    One instance per (contact, direction). Coins are buffered by public
    sequence number; header detection tests seq-adjacent pairs under the
    contact key, then body chunks are collected until the frame completes.
    Unmatched coins older than `window` sequence numbers behind the newest
    are discarded, which bounds memory while tolerating any reordering whose
    displacement stays inside the window.
    """

    def __init__(self, hmk: bytes, profile: ChannelProfile, window: int = 1024) -> None:
        if len(hmk) != BLOCK:
            raise KeyMissingError("no 16-octet contact key established")
        self._hmk = hmk
        self._profile = profile
        self._window = window
        self._buffer: dict[int, bytes] = {}
        self._pending_scan: set[int] = set()
        self._phase = Phase.SCANNING
        self._header: HiddenFrameHeader | None = None
        self._first_seq = 0
        self._body_chunks = 0
        self._max_seq = -1
        w = profile.coin_width
        self._sealed_len = 2 * w - IV_LEN  # encrypted length field + redundancy
        self._ks_blocks = math.ceil(self._sealed_len / BLOCK)
        from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes

        self._ecb = Cipher(algorithms.AES(hmk), modes.ECB()).encryptor()

    @property
    def phase(self) -> Phase:
        return self._phase

    def pending_chunks(self) -> int:
        """Body chunks still missing for the frame under collection."""
        if self._phase is not Phase.COLLECTING:
            return 0
        have = sum(
            1
            for s in range(self._first_seq + 2, self._first_seq + 2 + self._body_chunks)
            if s in self._buffer
        )
        return self._body_chunks - have

    def ingest(self, seq: int, coin: bytes) -> list[bytes]:
        """Feed one coin; returns any hidden messages completed by it."""
        buf = self._buffer
        if len(coin) != self._profile.coin_width:
            raise ValueError("coin width does not match profile")
        if seq not in buf:
            buf[seq] = coin
            self._pending_scan.add(seq)
            if seq > self._max_seq:
                self._max_seq = seq
        if self._phase is Phase.SCANNING and not self._try_detect():
            # Common case: nothing found, stay scanning.
            if len(buf) > 2 * self._window:
                self._prune()
            return []
        out: list[bytes] = []
        while True:
            if self._phase is Phase.COLLECTING:
                msg = self._try_complete()
                if msg is None:
                    break
                out.append(msg)
            elif not self._try_detect():
                break
        if len(buf) > 2 * self._window:
            self._prune()
        return out

    # -- header detection -------------------------------------------------

    def _header_keystream(self, iv: bytes) -> bytes:
        """CTR keystream for the sealed header region, via one ECB pass."""
        nonce = bytes([iv[0] ^ _HEADER_COUNTER_MASK]) + iv[1:]
        if self._ks_blocks == 1:
            return self._ecb.update(nonce)
        counter = int.from_bytes(nonce, "big")
        blocks = b"".join(
            ((counter + i) % (1 << 128)).to_bytes(BLOCK, "big")
            for i in range(self._ks_blocks)
        )
        return self._ecb.update(blocks)

    def _parse_pair(self, first: int) -> HiddenFrameHeader | None:
        buf = self._buffer
        blob = buf[first] + buf[first + 1]
        iv = blob[:IV_LEN]
        sealed = blob[IV_LEN:]
        ks = self._header_keystream(iv)
        # Redundancy decrypts to zero iff ciphertext equals keystream there.
        if sealed[LEN_FIELD:] != ks[LEN_FIELD : self._sealed_len]:
            return None
        n = int.from_bytes(sealed[:LEN_FIELD], "big") ^ int.from_bytes(
            ks[:LEN_FIELD], "big"
        )
        if not 1 <= n <= MAX_HIDDEN:
            # Implausible length: treat as a false positive and keep scanning.
            return None
        return HiddenFrameHeader(iv, n)

    def _try_detect(self) -> bool:
        pending = self._pending_scan
        buf = self._buffer
        while pending:
            # Ascending order so the earliest frame wins deterministically.
            s = next(iter(pending)) if len(pending) == 1 else min(pending)
            pending.discard(s)
            if s not in buf:
                continue
            for first in (s - 1, s):
                if first in buf and first + 1 in buf:
                    header = self._parse_pair(first)
                    if header is not None:
                        self._enter_collecting(header, first)
                        return True
        return False

    def _enter_collecting(self, header: HiddenFrameHeader, first_seq: int) -> None:
        self._phase = Phase.COLLECTING
        self._header = header
        self._first_seq = first_seq
        self._body_chunks = math.ceil(header.length / self._profile.coin_width)

    # -- body collection ---------------------------------------------------

    def _try_complete(self) -> bytes | None:
        assert self._header is not None
        start = self._first_seq + 2
        need = range(start, start + self._body_chunks)
        if not all(s in self._buffer for s in need):
            return None
        body = b"".join(self._buffer[s] for s in need)[: self._header.length]
        msg = crypto.ctr_xcrypt(self._hmk, self._header.iv, body)
        for s in range(self._first_seq, start + self._body_chunks):
            self._buffer.pop(s, None)
        self._phase = Phase.SCANNING
        self._header = None
        return msg

    # -- housekeeping --------------------------------------------------------

    def _prune(self) -> None:
        floor = self._max_seq - self._window
        keep_from = keep_to = -1
        if self._phase is Phase.COLLECTING:
            keep_from = self._first_seq
            keep_to = self._first_seq + 1 + self._body_chunks
        self._buffer = {
            s: c
            for s, c in self._buffer.items()
            if s >= floor or keep_from <= s <= keep_to
        }
        self._pending_scan = {s for s in self._pending_scan if s in self._buffer}
