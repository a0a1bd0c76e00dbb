"""The public E2EE messaging layer.

A message is sealed from a plaintext plus a caller-supplied random coin; the
coin travels inside the encrypted payload exactly like the salt of an
MTProto-style message. Sealing is one code path whose behaviour depends only
on the coin's *length*, never its content - that property is what lets the
hidden channel ride in the coin slot without altering anything observable.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

from . import crypto
from .crypto import BLOCK, FramingError

MAX_BODY = 4096
MIN_PADDING = 12
MAX_PADDING = MIN_PADDING + 15
METADATA_LEN = 33

_HEADER_AFTER_COIN = 8 + 8 + 4  # session_id + seq_no + body_len


class ChannelError(Exception):
    """Base class for public-channel failures."""


class SizeError(ChannelError):
    """Body or field size outside the permitted range."""


class RoutingError(ChannelError):
    """Envelope addressed to a key this party does not hold."""


class IntegrityError(ChannelError):
    """Message key mismatch; nothing is released."""


@dataclass(frozen=True)
class ChannelProfile:
    """A messenger shape: its name and the width of its per-message coin."""

    name: str
    coin_width: int

    def __post_init__(self) -> None:
        if self.coin_width not in (15, 16, 48):
            raise ValueError("coin width must be one of 15, 16, 48")


TELEGRAM_LIKE = ChannelProfile("telegram-like", 15)
SIGNAL_LIKE = ChannelProfile("signal-like", 16)
BRIAR_LIKE = ChannelProfile("briar-like", 48)

PROFILES = {
    "telegram": TELEGRAM_LIKE,
    "telegram-like": TELEGRAM_LIKE,
    "signal": SIGNAL_LIKE,
    "signal-like": SIGNAL_LIKE,
    "briar": BRIAR_LIKE,
    "briar-like": BRIAR_LIKE,
}


def profile_by_name(name: str) -> ChannelProfile:
    try:
        return PROFILES[name]
    except KeyError:
        raise ValueError(f"unknown profile {name!r}") from None


@dataclass(frozen=True)
class AuthKey:
    """Long-term shared key; key_id is the first 8 octets of its hash."""

    key_id: bytes
    key: bytes

    def __post_init__(self) -> None:
        if len(self.key) != crypto.AUTH_KEY_LEN:
            raise ValueError("auth key must be 160 octets")
        if self.key_id != crypto.sha256(self.key)[:8]:
            raise ValueError("key_id does not match key")

    @classmethod
    def from_key(cls, key: bytes) -> "AuthKey":
        return cls(crypto.sha256(key)[:8], key)

    @classmethod
    def generate(cls, rng=None) -> "AuthKey":
        return cls.from_key(crypto.prng_fill(crypto.AUTH_KEY_LEN, rng))


@dataclass(frozen=True)
class PublicPlaintext:
    session_id: bytes
    seq_no: int
    body: bytes

    def __post_init__(self) -> None:
        if len(self.session_id) != 8:
            raise ValueError("session_id must be 8 octets")
        if not 0 <= self.seq_no < 1 << 64:
            raise ValueError("seq_no out of range")
        if not 1 <= len(self.body) <= MAX_BODY:
            raise SizeError("body must be 1..4096 octets")


@dataclass(frozen=True)
class PublicEnvelope:
    """On-wire unit: auth_key_id(8) | msg_key(16) | ct_len(4 BE) | ciphertext."""

    auth_key_id: bytes
    msg_key: bytes
    ciphertext: bytes

    def to_bytes(self) -> bytes:
        return (
            self.auth_key_id
            + self.msg_key
            + struct.pack(">I", len(self.ciphertext))
            + self.ciphertext
        )

    @classmethod
    def from_bytes(cls, data: bytes) -> "PublicEnvelope":
        if len(data) < 28:
            raise FramingError("short envelope")
        ct_len = struct.unpack(">I", data[24:28])[0]
        if len(data) != 28 + ct_len:
            raise FramingError("envelope length mismatch")
        return cls(data[:8], data[8:24], data[28:])


@dataclass(frozen=True)
class SealedMetadata:
    """Sealed-sender style metadata: 16-octet IV beside a 33-octet CTR body."""

    iv: bytes
    ciphertext: bytes

    def __post_init__(self) -> None:
        if len(self.iv) != 16:
            raise ValueError("metadata IV must be 16 octets")
        if len(self.ciphertext) != METADATA_LEN:
            raise ValueError("metadata ciphertext must be 33 octets")


@dataclass(frozen=True)
class OpenedMessage:
    """Decrypted message plus the material needed for disclosure records."""

    plaintext: PublicPlaintext
    coin: bytes
    padding: bytes


def padding_length(coin_width: int, body_len: int) -> int:
    """Octets of random padding: minimum 12, to the next 16 multiple."""
    base = coin_width + _HEADER_AFTER_COIN + body_len + MIN_PADDING
    return MIN_PADDING + (-base % BLOCK)


def build_payload(
    pt: PublicPlaintext,
    coin: bytes,
    *,
    padding: bytes | None = None,
    rng=None,
) -> bytes:
    """coin | session_id(8) | seq_no(8 BE) | body_len(4 BE) | body | padding."""
    if len(coin) not in (15, 16, 48):
        raise SizeError("coin width must be one of 15, 16, 48")
    need = padding_length(len(coin), len(pt.body))
    if padding is None:
        padding = crypto.prng_fill(need, rng)
    elif len(padding) != need:
        raise SizeError(f"padding must be exactly {need} octets")
    return (
        coin
        + pt.session_id
        + struct.pack(">Q", pt.seq_no)
        + struct.pack(">I", len(pt.body))
        + pt.body
        + padding
    )


def parse_payload(payload: bytes, coin_width: int) -> OpenedMessage:
    """Inverse of build_payload; raises FramingError on any malformation."""
    if len(payload) % BLOCK:
        raise FramingError("payload not a multiple of 16")
    fixed = coin_width + _HEADER_AFTER_COIN
    if len(payload) < fixed + 1 + MIN_PADDING:
        raise FramingError("payload too short")
    coin = payload[:coin_width]
    session_id = payload[coin_width : coin_width + 8]
    seq_no = struct.unpack(">Q", payload[coin_width + 8 : coin_width + 16])[0]
    body_len = struct.unpack(">I", payload[coin_width + 16 : fixed])[0]
    if not 1 <= body_len <= MAX_BODY:
        raise FramingError("body length field out of range")
    if fixed + body_len + MIN_PADDING > len(payload):
        raise FramingError("body overruns payload")
    body = payload[fixed : fixed + body_len]
    padding = payload[fixed + body_len :]
    if not MIN_PADDING <= len(padding) <= MAX_PADDING:
        raise FramingError("padding length out of range")
    return OpenedMessage(PublicPlaintext(session_id, seq_no, body), coin, padding)


def seal_public(
    auth: AuthKey,
    pt: PublicPlaintext,
    coin: bytes,
    *,
    padding: bytes | None = None,
    rng=None,
) -> PublicEnvelope:
    """Seal a plaintext under the caller-supplied coin.

    The coin is opaque: this function never branches on its content, which is
    the entire injection point for the hidden channel. With explicit padding
    the result is a pure function of its arguments, so a disclosed message
    can be re-sealed bit-exactly for verification.
    """
    payload = build_payload(pt, coin, padding=padding, rng=rng)
    msg_key, ige_key, ige_iv = crypto.derive_message_keys(auth.key, payload)
    ciphertext = crypto.ige_encrypt(ige_key, ige_iv, payload)
    return PublicEnvelope(auth.key_id, msg_key, ciphertext)


def open_public_record(
    auth: AuthKey, env: PublicEnvelope, coin_width: int = TELEGRAM_LIKE.coin_width
) -> OpenedMessage:
    """Open an envelope, returning plaintext, coin and padding.

    Order of checks: routing (key id), decrypt, integrity (recomputed message
    key, constant-time), then framing. On integrity failure nothing parsed is
    released.
    """
    if env.auth_key_id != auth.key_id:
        raise RoutingError("envelope addressed to a different auth key")
    if len(env.msg_key) != 16:
        raise FramingError("message key must be 16 octets")
    if not env.ciphertext or len(env.ciphertext) % BLOCK:
        raise FramingError("ciphertext not a multiple of 16")
    ige_key, ige_iv = crypto.derive_payload_keys(auth.key, env.msg_key)
    payload = crypto.ige_decrypt(ige_key, ige_iv, env.ciphertext)
    expected = crypto.sha256(auth.key + payload)[:16]
    if not crypto.ct_equal(expected, env.msg_key):
        raise IntegrityError("message key mismatch")
    return parse_payload(payload, coin_width)


def open_public(
    auth: AuthKey, env: PublicEnvelope, coin_width: int = TELEGRAM_LIKE.coin_width
) -> tuple[PublicPlaintext, bytes]:
    opened = open_public_record(auth, env, coin_width)
    return opened.plaintext, opened.coin


def seal_metadata(key: bytes, metadata: bytes, iv: bytes) -> SealedMetadata:
    """Encrypt the fixed 33-octet metadata block under CTR with the given IV.

    The IV slot accepts any 16-octet string - fresh randomness or a hidden
    ciphertext chunk - without changing anything about the result's shape.
    """
    if len(metadata) != METADATA_LEN:
        raise SizeError("metadata must be exactly 33 octets")
    return SealedMetadata(iv, crypto.ctr_xcrypt(key, iv, metadata))


def open_metadata(key: bytes, sm: SealedMetadata) -> bytes:
    """Inverse of seal_metadata. CTR carries no tag; garbage on a wrong key."""
    return crypto.ctr_xcrypt(key, sm.iv, sm.ciphertext)


class SessionOutbox:
    """Mints plaintexts with a strictly increasing per-direction sequence."""

    def __init__(self, session_id: bytes, first_seq: int = 1) -> None:
        self.session_id = session_id
        self._next = first_seq

    def next_plaintext(self, body: bytes) -> PublicPlaintext:
        pt = PublicPlaintext(self.session_id, self._next, body)
        self._next += 1
        return pt
