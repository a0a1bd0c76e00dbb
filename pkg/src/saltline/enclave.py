"""Simulated secure-enclave state machine.

This is the only component that ever holds passwords, contact keys, the
hidden queue, or the hidden inbox. It exposes two call surfaces:

* the normal boundary (what a messaging app and the host OS can see) - every
  call is logged to an execution transcript as (name, parameter sizes,
  response size, logical time), and nothing mode-dependent ever changes the
  shape of a response;
* the secure channel (modelling enclave-direct I/O) - invisible to the
  normal-world transcript in the default unified-I/O configuration. The
  legacy configuration models interrupt-triggered hidden I/O instead, where
  each secure call in hidden mode leaks one observable interrupt event.

Passwords select the mode: the public password enables crypto-only service,
the hidden password additionally enables injection and the hidden inbox, and
the disclosure password releases keys and per-message metadata for every
retained public message - and nothing else.
"""

from __future__ import annotations

import hmac
import os
import struct
import threading
from collections import deque
from dataclasses import dataclass, field
from enum import Enum

from . import channel, crypto, hidden
from .channel import AuthKey, ChannelProfile, PublicEnvelope, PublicPlaintext
from .hidden import ChunkQueue, Reassembler

BLOB_SIZE = 1 << 20
BLOB_NONCE_LEN = 16
BLOB_TAG_LEN = 32
BLOB_CT_LEN = BLOB_SIZE - BLOB_NONCE_LEN - BLOB_TAG_LEN
_PREAMBLE_LEN = 512
_RECORD_LEN = 136
_MAGIC = b"SLB1"
CONTACT_CAPACITY = (BLOB_CT_LEN - _PREAMBLE_LEN - 4) // _RECORD_LEN

_REFUSAL = "unavailable"


class EnclaveError(Exception):
    pass


class UniformRefusal(EnclaveError):
    """Single error shape for anything unauthorized or unknown on a surface."""

    def __init__(self) -> None:
        super().__init__(_REFUSAL)


class LockedOutError(EnclaveError):
    """Too many failed password attempts; access is permanently locked."""


class SetupError(EnclaveError):
    pass


class TamperError(EnclaveError):
    """Persisted blob failed its integrity check."""


class SequenceError(EnclaveError):
    """Outbound sequence numbers must be strictly increasing per session."""


class ContactError(EnclaveError):
    pass


class Mode(Enum):
    LOCKED = "locked"
    PUBLIC_ONLY = "public_only"
    PUBLIC_HIDDEN = "public_hidden"


@dataclass(frozen=True)
class VerifyResult:
    verified: bool

    def to_bytes(self) -> bytes:
        return b"\x01" if self.verified else b"\x00"


@dataclass(frozen=True)
class InboxMessage:
    contact_id: bytes
    body: bytes


@dataclass(frozen=True)
class Inbox:
    watermark: str
    messages: tuple[InboxMessage, ...]


@dataclass(frozen=True)
class DisclosedMessage:
    peer_id: bytes
    session_id: bytes
    seq_no: int
    direction: str  # "out" | "in"
    body: bytes
    coin: bytes
    padding: bytes
    envelope_digest: bytes


@dataclass(frozen=True)
class DisclosureBundle:
    peer_keys: tuple[tuple[bytes, bytes], ...]  # (peer_id, auth key)
    messages: tuple[DisclosedMessage, ...]


# Response types that can cross the normal boundary; audited structurally.
BOUNDARY_RESPONSE_TYPES = (VerifyResult, PublicEnvelope, PublicPlaintext)


@dataclass(frozen=True)
class BoundaryEvent:
    t: int
    call: str
    param_sizes: tuple[int, ...]
    response_size: int


@dataclass
class EnclaveConfig:
    profile: ChannelProfile = channel.TELEGRAM_LIKE
    store_path: str = "contact_store.blob"
    unified_io: bool = True
    password_cost: int = crypto.DEFAULT_PASSWORD_COST
    lockout_limit: int = 10
    retention: int = 10_000
    scan_window: int = 1024


@dataclass
class _PeerState:
    auth: AuthKey
    reassembler: Reassembler | None = None
    last_out_seq: dict[bytes, int] = field(default_factory=dict)


def _pt_size(pt: PublicPlaintext) -> int:
    return 8 + 8 + 4 + len(pt.body)


class Enclave:
    """One device's secure world. All calls serialize through one lock."""

    def __init__(self) -> None:
        raise TypeError("use Enclave.setup() or Enclave.load()")

    @classmethod
    def _blank(cls, config: EnclaveConfig, rng) -> "Enclave":
        self = object.__new__(cls)
        self.config = config
        self._rng = rng
        self._lock = threading.RLock()
        self._mode = Mode.LOCKED
        self._salt = b""
        self._digests = (b"", b"", b"")
        self._watermark = ""
        self._attempts = 0
        self._locked_out = False
        self._disclosure_used = False
        self._master_key = b""
        self._contacts: dict[bytes, bytes] = {}  # contact_id -> 128-octet secret
        self._peers: dict[bytes, _PeerState] = {}
        self._queues: dict[bytes, ChunkQueue] = {}  # contact_id -> pending pool
        self._inbox: list[InboxMessage] = []
        self._records: dict[tuple[bytes, bytes], deque] = {}
        self.transcript: list[BoundaryEvent] = []
        return self

    # ------------------------------------------------------------------
    # setup ceremony and persistence
    # ------------------------------------------------------------------

    @classmethod
    def uninitialized(cls, config: EnclaveConfig, rng=None) -> "Enclave":
        """A device before the setup ceremony: every call refuses uniformly."""
        return cls._blank(config, rng)

    @classmethod
    def setup(
        cls,
        config: EnclaveConfig,
        public_pw: str,
        hidden_pw: str,
        disclosure_pw: str,
        watermark: str,
        *,
        master_key: bytes | None = None,
        rng=None,
    ) -> "Enclave":
        """One-time ceremony: store password digests and the anti-spoofing
        watermark, then reserve the fixed-size contact store on disk."""
        if os.path.exists(config.store_path):
            raise SetupError("already initialized; re-initialization refused")
        pws = (public_pw, hidden_pw, disclosure_pw)
        if len(set(pws)) != 3:
            raise SetupError("passwords must be pairwise distinct")
        if any(len(p) < 8 for p in pws):
            raise SetupError("passwords must be at least 8 characters")
        if not watermark or len(watermark.encode("utf-8")) > 255:
            raise SetupError("watermark must be 1..255 octets of UTF-8")
        self = cls._blank(config, rng)
        self._salt = crypto.prng_fill(16, rng)
        self._digests = tuple(
            crypto.password_digest(p, self._salt, config.password_cost) for p in pws
        )
        if len({d for d in self._digests}) != 3:  # pragma: no cover
            raise SetupError("password digests collide")
        self._watermark = watermark
        self._master_key = master_key or crypto.prng_fill(16, rng)
        self.save()
        return self

    @classmethod
    def load(cls, config: EnclaveConfig, master_key: bytes, rng=None) -> "Enclave":
        """Boot: read and decrypt the blob; the enclave starts locked."""
        with open(config.store_path, "rb") as fh:
            blob = fh.read()
        if len(blob) != BLOB_SIZE:
            raise TamperError("blob size altered")
        nonce = blob[:BLOB_NONCE_LEN]
        ct = blob[BLOB_NONCE_LEN : BLOB_NONCE_LEN + BLOB_CT_LEN]
        tag = blob[BLOB_NONCE_LEN + BLOB_CT_LEN :]
        mac_key = crypto.sha256(b"\x21" + master_key)
        expect = hmac.new(mac_key, nonce + ct, "sha256").digest()
        if not crypto.ct_equal(expect, tag):
            raise TamperError("blob integrity check failed")
        enc_key = crypto.sha256(b"\x20" + master_key)[:16]
        plain = crypto.ctr_xcrypt(enc_key, nonce, ct)
        self = cls._blank(config, rng)
        self._master_key = master_key
        self._parse_state(plain)
        return self

    def _serialize_state(self) -> bytes:
        wm = self._watermark.encode("utf-8")
        pre = bytearray(_PREAMBLE_LEN)
        pre[0:4] = _MAGIC
        pre[4] = 1
        pre[5] = self.config.password_cost
        pre[6] = 1 if self._locked_out else 0
        pre[7] = self._attempts
        pre[8:24] = self._salt
        pre[24:56], pre[56:88], pre[88:120] = self._digests
        pre[120:122] = struct.pack(">H", len(wm))
        pre[122 : 122 + len(wm)] = wm
        pre[378] = 1 if self._disclosure_used else 0
        records = bytearray(struct.pack(">I", len(self._contacts)))
        for cid, secret in self._contacts.items():
            records += cid + secret
        used = _PREAMBLE_LEN + len(records)
        return bytes(pre) + bytes(records) + crypto.prng_fill(BLOB_CT_LEN - used, self._rng)

    def _parse_state(self, plain: bytes) -> None:
        if plain[0:4] != _MAGIC or plain[4] != 1:
            raise TamperError("unrecognized blob layout")
        self.config.password_cost = plain[5]
        self._locked_out = bool(plain[6])
        self._attempts = plain[7]
        self._salt = plain[8:24]
        self._digests = (plain[24:56], plain[56:88], plain[88:120])
        wm_len = struct.unpack(">H", plain[120:122])[0]
        self._watermark = plain[122 : 122 + wm_len].decode("utf-8")
        self._disclosure_used = bool(plain[378])
        count = struct.unpack(">I", plain[_PREAMBLE_LEN : _PREAMBLE_LEN + 4])[0]
        if count > CONTACT_CAPACITY:
            raise TamperError("record count out of range")
        off = _PREAMBLE_LEN + 4
        for _ in range(count):
            cid = plain[off : off + 8]
            secret = plain[off + 8 : off + _RECORD_LEN]
            self._contacts[cid] = secret
            off += _RECORD_LEN

    def save(self) -> None:
        """Re-encrypt and persist the store with fresh randomness.

        Runs on every graceful shutdown in every mode; the file size is a
        constant function of configuration, never of content.
        """
        with self._lock:
            nonce = crypto.prng_fill(BLOB_NONCE_LEN, self._rng)
            enc_key = crypto.sha256(b"\x20" + self._master_key)[:16]
            mac_key = crypto.sha256(b"\x21" + self._master_key)
            ct = crypto.ctr_xcrypt(enc_key, nonce, self._serialize_state())
            tag = hmac.new(mac_key, nonce + ct, "sha256").digest()
            tmp = self.config.store_path + ".tmp"
            with open(tmp, "wb") as fh:
                fh.write(nonce + ct + tag)
            os.replace(tmp, self.config.store_path)
            self._record("save", (), 0)

    # ------------------------------------------------------------------
    # execution transcript
    # ------------------------------------------------------------------

    def _record(self, call: str, param_sizes: tuple[int, ...], response_size: int) -> None:
        self.transcript.append(
            BoundaryEvent(len(self.transcript), call, param_sizes, response_size)
        )

    def _secure_entry(self) -> None:
        """Model the observable cost of entering the secure UI.

        Unified I/O: nothing is observable. Legacy configuration: hidden-mode
        secure I/O is initiated by a hardware interrupt the normal world can
        see, so one event leaks per secure call.
        """
        if not self.config.unified_io and self._mode is Mode.PUBLIC_HIDDEN:
            self._record("hw_interrupt", (), 0)

    # ------------------------------------------------------------------
    # normal boundary
    # ------------------------------------------------------------------

    @property
    def mode(self) -> Mode:
        return self._mode

    def verify_password(self, password: str) -> VerifyResult:
        """Mode selection. The response is byte-identical for both successful
        cases so the caller cannot learn which mode was entered."""
        with self._lock:
            if not self._salt:
                self._record("verify_password", (), len(_REFUSAL))
                raise UniformRefusal()
            if self._locked_out:
                self._record("verify_password", (), 0)
                raise LockedOutError("permanently locked")
            digest = crypto.password_digest(password, self._salt, self.config.password_cost)
            is_public = crypto.ct_equal(digest, self._digests[0])
            is_hidden = crypto.ct_equal(digest, self._digests[1])
            if is_public or is_hidden:
                self._mode = Mode.PUBLIC_HIDDEN if is_hidden else Mode.PUBLIC_ONLY
                self._attempts = 0
                result = VerifyResult(True)
            else:
                self._attempts += 1
                if self._attempts >= self.config.lockout_limit:
                    self._locked_out = True
                result = VerifyResult(False)
            self._record("verify_password", (), len(result.to_bytes()))
            return result

    def register_peer(self, peer_id: bytes, auth_key: bytes) -> None:
        """Install the long-term public-channel key for a peer."""
        with self._lock:
            self._require_unlocked("register_peer", (8, len(auth_key)))
            if len(peer_id) != 8:
                raise ContactError("peer id must be 8 octets")
            self._peers[peer_id] = _PeerState(AuthKey.from_key(auth_key))
            self._record("register_peer", (8, len(auth_key)), 0)

    def seal(self, peer_id: bytes, pt: PublicPlaintext) -> PublicEnvelope:
        """Seal a public message for a peer.

        The sealing code path is the same function in both modes; only the
        coin source differs, and a fresh coin is drawn either way.
        """
        with self._lock:
            sizes = (8, _pt_size(pt))
            self._require_unlocked("seal", sizes)
            peer = self._peer(peer_id, "seal", sizes)
            last = peer.last_out_seq.get(pt.session_id, -1)
            if pt.seq_no <= last:
                self._record("seal", sizes, 0)
                raise SequenceError("seq_no must increase")
            if self._mode is Mode.PUBLIC_HIDDEN:
                queue = self._queues.get(peer_id, _EMPTY_QUEUE)
            else:
                queue = _EMPTY_QUEUE
            coin = hidden.next_coin(queue, self.config.profile.coin_width, self._rng)
            pad = crypto.prng_fill(
                channel.padding_length(len(coin), len(pt.body)), self._rng
            )
            env = channel.seal_public(peer.auth, pt, coin, padding=pad)
            peer.last_out_seq[pt.session_id] = pt.seq_no
            self._retain(peer_id, pt, coin, pad, env, "out")
            self._record("seal", sizes, len(env.to_bytes()))
            return env

    def open_envelope(self, peer_id: bytes, env: PublicEnvelope) -> PublicPlaintext:
        """Open a public message. In hidden mode the coin is additionally fed
        to the reassembler; completed hidden messages go to the inbox, which
        never crosses this boundary."""
        with self._lock:
            sizes = (8, len(env.to_bytes()))
            self._require_unlocked("open", sizes)
            peer = self._peer(peer_id, "open", sizes)
            try:
                opened = channel.open_public_record(
                    peer.auth, env, self.config.profile.coin_width
                )
            except channel.ChannelError:
                self._record("open", sizes, 0)
                raise
            pt = opened.plaintext
            if self._mode is Mode.PUBLIC_HIDDEN:
                reasm = self._reassembler_for(peer_id)
                if reasm is not None:
                    for msg in reasm.ingest(pt.seq_no, opened.coin):
                        self._inbox.append(InboxMessage(peer_id, msg))
            self._retain(peer_id, pt, opened.coin, opened.padding, env, "in")
            self._record("open", sizes, _pt_size(pt))
            return pt

    # ------------------------------------------------------------------
    # secure channel (enclave-direct I/O)
    # ------------------------------------------------------------------

    def secure_add_contact(self, contact_id: bytes, secret: bytes) -> None:
        """Install an out-of-band shared secret for hidden messaging."""
        with self._lock:
            self._secure_entry()
            if self._mode is not Mode.PUBLIC_HIDDEN:
                raise UniformRefusal()
            if len(contact_id) != 8 or len(secret) != 128:
                raise ContactError("contact record must be 8+128 octets")
            if contact_id in self._contacts:
                raise ContactError("duplicate contact id")
            if len(self._contacts) >= CONTACT_CAPACITY:
                raise ContactError("contact store capacity exceeded")
            self._contacts[contact_id] = secret

    def secure_queue_hidden(self, contact_id: bytes, msg: bytes) -> int:
        """Queue a hidden message; returns covers still needed for the pool."""
        with self._lock:
            self._secure_entry()
            if self._mode is not Mode.PUBLIC_HIDDEN:
                raise UniformRefusal()
            hmk = self._working_hmk(contact_id)
            if hmk is None:
                raise hidden.KeyMissingError("no contact key for recipient")
            frame = hidden.encode_hidden(hmk, msg, self.config.profile, self._rng)
            pool = self._queues.setdefault(contact_id, ChunkQueue())
            pool.push_frame(frame.drain())
            return pool.remaining()

    def secure_read_inbox(self) -> Inbox:
        with self._lock:
            self._secure_entry()
            if self._mode is not Mode.PUBLIC_HIDDEN:
                raise UniformRefusal()
            return Inbox(self._watermark, tuple(self._inbox))

    def secure_pending_covers(self, contact_id: bytes) -> int:
        with self._lock:
            self._secure_entry()
            if self._mode is not Mode.PUBLIC_HIDDEN:
                raise UniformRefusal()
            pool = self._queues.get(contact_id)
            return pool.remaining() if pool else 0

    def secure_disclose(self, password: str) -> DisclosureBundle:
        """Release keys and metadata for retained public messages.

        The bundle contains no contact keys, no hidden plaintext, and no
        queue state, whatever the mode history.
        """
        with self._lock:
            self._secure_entry()
            if not self._salt:
                raise UniformRefusal()
            if self._locked_out:
                raise LockedOutError("permanently locked")
            digest = crypto.password_digest(password, self._salt, self.config.password_cost)
            if not crypto.ct_equal(digest, self._digests[2]):
                self._attempts += 1
                if self._attempts >= self.config.lockout_limit:
                    self._locked_out = True
                raise UniformRefusal()
            self._disclosure_used = True
            keys = tuple(
                (pid, peer.auth.key) for pid, peer in sorted(self._peers.items())
            )
            msgs = []
            for key in sorted(self._records):
                msgs.extend(self._records[key])
            return DisclosureBundle(keys, tuple(msgs))

    def secure_reset_disclosure_password(self, new_password: str) -> None:
        """Allowed only after the disclosure password has been used."""
        with self._lock:
            self._secure_entry()
            if not self._disclosure_used:
                raise UniformRefusal()
            if len(new_password) < 8:
                raise SetupError("passwords must be at least 8 characters")
            digest = crypto.password_digest(
                new_password, self._salt, self.config.password_cost
            )
            if any(crypto.ct_equal(digest, d) for d in self._digests[:2]):
                raise SetupError("passwords must be pairwise distinct")
            self._digests = (self._digests[0], self._digests[1], digest)
            self._disclosure_used = False

    # ------------------------------------------------------------------
    # internals
    # ------------------------------------------------------------------

    def _require_unlocked(self, call: str, sizes: tuple[int, ...]) -> None:
        if self._mode is Mode.LOCKED:
            self._record(call, sizes, len(_REFUSAL))
            raise UniformRefusal()

    def _peer(self, peer_id: bytes, call: str, sizes: tuple[int, ...]) -> _PeerState:
        peer = self._peers.get(peer_id)
        if peer is None:
            self._record(call, sizes, len(_REFUSAL))
            raise UniformRefusal()
        return peer

    def _working_hmk(self, contact_id: bytes) -> bytes | None:
        secret = self._contacts.get(contact_id)
        if secret is None:
            return None
        return crypto.sha256(b"\x10" + secret)[:16]

    def _reassembler_for(self, peer_id: bytes) -> Reassembler | None:
        peer = self._peers.get(peer_id)
        if peer is None:
            return None
        if peer.reassembler is None:
            hmk = self._working_hmk(peer_id)
            if hmk is None:
                return None
            peer.reassembler = Reassembler(
                hmk, self.config.profile, self.config.scan_window
            )
        return peer.reassembler

    def _retain(
        self,
        peer_id: bytes,
        pt: PublicPlaintext,
        coin: bytes,
        padding: bytes,
        env: PublicEnvelope,
        direction: str,
    ) -> None:
        key = (peer_id, pt.session_id)
        store = self._records.get(key)
        if store is None:
            store = self._records[key] = deque(maxlen=self.config.retention)
        store.append(
            DisclosedMessage(
                peer_id,
                pt.session_id,
                pt.seq_no,
                direction,
                pt.body,
                coin,
                padding,
                crypto.sha256(env.to_bytes()),
            )
        )


# Shared always-empty pool for public-only sealing; nothing ever pushes here.
_EMPTY_QUEUE = ChunkQueue()
