"""Deterministic crypto primitives shared by every other layer.

Everything here is a pure function of its inputs. The only stateful object is
the randomness source, which is injectable so that games and fixtures can be
replayed from a seed while production paths stay on OS entropy.
"""

from __future__ import annotations

import hashlib
import hmac
import os
import random
from dataclasses import dataclass

from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes

BLOCK = 16
DIGEST_LEN = 32
AUTH_KEY_LEN = 160

# scrypt work factor (log2 of N). The default targets >=100 ms on a desktop;
# tests pass a smaller value explicitly.
DEFAULT_PASSWORD_COST = 15
_SCRYPT_R = 8


class CryptoError(Exception):
    """Base class for failures in this module."""


class FramingError(CryptoError):
    """Input length does not fit the required block or field structure."""


class EntropyError(CryptoError):
    """The system entropy source failed. Never degraded to weak output."""


class SystemRng:
    """Cryptographically secure byte source backed by the OS."""

    def bytes(self, n: int) -> bytes:
        if n < 0:
            raise ValueError("negative length")
        try:
            out = os.urandom(n)
        except OSError as exc:  # pragma: no cover - hard to trigger
            raise EntropyError("system entropy source unavailable") from exc
        if len(out) != n:  # pragma: no cover
            raise EntropyError("short read from entropy source")
        return out


class SeededRng:
    """Deterministic byte source for replayable games and fixtures.

    Not suitable for production keys; the deniability argument assumes
    coins come from a real CSPRNG.
    """

    def __init__(self, seed: int) -> None:
        self._rng = random.Random(seed)

    def bytes(self, n: int) -> bytes:
        if n < 0:
            raise ValueError("negative length")
        return self._rng.randbytes(n)


SYSTEM_RNG = SystemRng()


def prng_fill(n: int, rng=None) -> bytes:
    """Return n random octets from rng (default: OS entropy)."""
    return (rng or SYSTEM_RNG).bytes(n)


def sha256(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


def ct_equal(a: bytes, b: bytes) -> bool:
    """Constant-time comparison for keys, digests and MACs."""
    return hmac.compare_digest(a, b)


@dataclass(frozen=True)
class IgePair:
    """IV pair for IGE mode: y0 chains ciphertext, x0 chains plaintext."""

    y0: bytes
    x0: bytes

    def __post_init__(self) -> None:
        if len(self.y0) != BLOCK or len(self.x0) != BLOCK:
            raise FramingError("IGE IV halves must be 16 octets each")

    @classmethod
    def from_bytes(cls, material: bytes) -> "IgePair":
        if len(material) != 2 * BLOCK:
            raise FramingError("IGE IV material must be 32 octets")
        return cls(material[:BLOCK], material[BLOCK:])

    def to_bytes(self) -> bytes:
        return self.y0 + self.x0


def _aes_ecb(key: bytes):
    return Cipher(algorithms.AES(key), modes.ECB())


def ige_encrypt(key: bytes, iv: IgePair, plaintext: bytes) -> bytes:
    """AES-256 IGE: y_i = E_K(x_i ^ y_{i-1}) ^ x_{i-1}, (y_0, x_0) = iv."""
    if len(key) != 32:
        raise CryptoError("IGE key must be 32 octets")
    if len(plaintext) % BLOCK:
        raise FramingError("plaintext length must be a multiple of 16")
    enc = _aes_ecb(key).encryptor()
    y_prev = int.from_bytes(iv.y0, "big")
    x_prev = int.from_bytes(iv.x0, "big")
    out = bytearray()
    for i in range(0, len(plaintext), BLOCK):
        x = int.from_bytes(plaintext[i : i + BLOCK], "big")
        e = enc.update((x ^ y_prev).to_bytes(BLOCK, "big"))
        y = int.from_bytes(e, "big") ^ x_prev
        out += y.to_bytes(BLOCK, "big")
        y_prev, x_prev = y, x
    return bytes(out)


def ige_decrypt(key: bytes, iv: IgePair, ciphertext: bytes) -> bytes:
    """Inverse of ige_encrypt under the same key and IV pair."""
    if len(key) != 32:
        raise CryptoError("IGE key must be 32 octets")
    if len(ciphertext) % BLOCK:
        raise FramingError("ciphertext length must be a multiple of 16")
    dec = _aes_ecb(key).decryptor()
    y_prev = int.from_bytes(iv.y0, "big")
    x_prev = int.from_bytes(iv.x0, "big")
    out = bytearray()
    for i in range(0, len(ciphertext), BLOCK):
        y = int.from_bytes(ciphertext[i : i + BLOCK], "big")
        d = dec.update((y ^ x_prev).to_bytes(BLOCK, "big"))
        x = int.from_bytes(d, "big") ^ y_prev
        out += x.to_bytes(BLOCK, "big")
        y_prev, x_prev = y, x
    return bytes(out)


def ctr_xcrypt(key: bytes, nonce: bytes, data: bytes) -> bytes:
    """AES-128 CTR keystream XOR. Length preserving; its own inverse."""
    if len(key) != BLOCK:
        raise CryptoError("CTR key must be 16 octets")
    if len(nonce) != BLOCK:
        raise CryptoError("CTR nonce must be 16 octets")
    enc = Cipher(algorithms.AES(key), modes.CTR(nonce)).encryptor()
    return enc.update(data) + enc.finalize()


def derive_payload_keys(auth_key: bytes, msg_key: bytes) -> tuple[bytes, IgePair]:
    """Expand (auth_key, msg_key) into the IGE key and IV pair.

    Domain-separated SHA-256 layout; both directions of a session derive
    identically so a received message key can be expanded before decryption.
    """
    if len(auth_key) != AUTH_KEY_LEN:
        raise CryptoError("auth key must be 160 octets")
    if len(msg_key) != BLOCK:
        raise CryptoError("message key must be 16 octets")
    ige_key = sha256(b"\x01" + msg_key + auth_key)
    iv_material = sha256(b"\x02" + msg_key + auth_key) + sha256(
        b"\x03" + msg_key + auth_key
    )
    return ige_key, IgePair.from_bytes(iv_material[:32])


def derive_message_keys(auth_key: bytes, payload: bytes) -> tuple[bytes, bytes, IgePair]:
    """Per-message key schedule: (msg_key, ige_key, ige_iv) from the payload."""
    if len(payload) % BLOCK:
        raise FramingError("payload length must be a multiple of 16")
    msg_key = sha256(auth_key + payload)[:BLOCK]
    ige_key, ige_iv = derive_payload_keys(auth_key, msg_key)
    return msg_key, ige_key, ige_iv


def password_digest(password: str, salt: bytes, cost: int = DEFAULT_PASSWORD_COST) -> bytes:
    """Memory-hard password hash (scrypt). cost is log2 of the CPU/memory N."""
    if not password:
        raise ValueError("empty password rejected")
    if len(salt) != 16:
        raise CryptoError("salt must be 16 octets")
    if not 1 <= cost <= 22:
        raise ValueError("cost out of range")
    n = 1 << cost
    return hashlib.scrypt(
        password.encode("utf-8"),
        salt=salt,
        n=n,
        r=_SCRYPT_R,
        p=1,
        maxmem=256 * _SCRYPT_R * n + (1 << 20),
        dklen=DIGEST_LEN,
    )


def verify_password_digest(
    password: str, salt: bytes, cost: int, expected: bytes
) -> bool:
    """Recompute and compare in constant time. Single code path either way."""
    return ct_equal(password_digest(password, salt, cost), expected)
