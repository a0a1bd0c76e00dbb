"""Deniable messaging research stack.

Layers, bottom up: crypto primitives, the public E2EE channel, the hidden
channel riding in its random coins, a simulated secure enclave that owns all
secrets, transport plumbing with transcripts, and an adversary harness that
turns the indistinguishability claims into executable experiments.
"""

from .channel import (
    BRIAR_LIKE,
    PROFILES,
    SIGNAL_LIKE,
    TELEGRAM_LIKE,
    AuthKey,
    ChannelProfile,
    PublicEnvelope,
    PublicPlaintext,
    SealedMetadata,
    open_metadata,
    open_public,
    seal_metadata,
    seal_public,
)
from .crypto import SeededRng, SystemRng, prng_fill, sha256
from .enclave import DisclosureBundle, Enclave, EnclaveConfig, Mode
from .hidden import ChunkQueue, Reassembler, cover_count, encode_hidden, next_coin
from .stats import StatReport, stat_battery

__all__ = [
    "AuthKey",
    "BRIAR_LIKE",
    "ChannelProfile",
    "ChunkQueue",
    "DisclosureBundle",
    "Enclave",
    "EnclaveConfig",
    "Mode",
    "PROFILES",
    "PublicEnvelope",
    "PublicPlaintext",
    "Reassembler",
    "SIGNAL_LIKE",
    "SealedMetadata",
    "SeededRng",
    "StatReport",
    "SystemRng",
    "TELEGRAM_LIKE",
    "cover_count",
    "encode_hidden",
    "next_coin",
    "open_metadata",
    "open_public",
    "prng_fill",
    "seal_metadata",
    "seal_public",
    "sha256",
    "stat_battery",
]

__version__ = "0.1.0"
