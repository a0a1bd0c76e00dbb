"""Executable indistinguishability games and disclosure verification.

Three desk-scale experiments stand in for the security argument:

* the transcript game - a challenger seals a scripted conversation either
  with fresh random coins or with a hidden message injected, hands the
  adversary everything a coercer would get (ciphertexts, coins, the public
  key, the plaintexts), and measures the adversary's advantage over guessing;
* the execution game - the same boundary-call script replayed against a
  public-only and a public-hidden enclave, asserting the execution
  transcripts are identical (and demonstrating the divergence that the
  legacy interrupt-driven configuration leaks);
* disclosure verification - every disclosed message is re-sealed bit-exactly
  and matched against the on-wire record.

A statistical battery is a necessary-but-not-sufficient stand-in for "all
polynomial-time adversaries"; the games bound what this harness can claim.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Callable

from . import channel, crypto, hidden, stats
from .channel import AuthKey, ChannelProfile, PublicEnvelope, PublicPlaintext
from .crypto import SeededRng
from .enclave import BoundaryEvent, DisclosureBundle, Enclave, EnclaveConfig, UniformRefusal
from .hidden import ChunkQueue


# ---------------------------------------------------------------------------
# transcript game (message-transcript indistinguishability)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GameScript:
    """One scripted conversation for the transcript game."""

    public_bodies: tuple[bytes, ...]
    hidden_message: bytes
    profile: ChannelProfile
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.public_bodies:
            raise ValueError("need at least one public message")
        needed = hidden.cover_count(len(self.hidden_message), self.profile)
        if needed > len(self.public_bodies):
            raise ValueError(
                f"hidden message needs {needed} covers but script has "
                f"{len(self.public_bodies)} public messages"
            )


@dataclass(frozen=True)
class TrialView:
    """Everything handed to the adversary: the compelled-disclosure view."""

    envelopes: tuple[PublicEnvelope, ...]
    coins: tuple[bytes, ...]
    auth_key: bytes
    plaintexts: tuple[bytes, ...]
    profile: ChannelProfile


Adversary = Callable[[TrialView], int]


def battery_adversary(alpha: float = stats.DEFAULT_ALPHA) -> Adversary:
    """Guess injection iff the coin stream fails the statistical battery."""
    import numpy as np

    def guess(view: TrialView) -> int:
        data = np.frombuffer(b"".join(view.coins), dtype=np.uint8)
        bits = np.unpackbits(data)
        results = (
            stats.monobit(bits),
            stats.byte_chi_square(data),
            stats.serial_correlation(data),
            stats.runs(bits),
        )
        return 0 if all(r.p_value >= alpha for r in results) else 1

    return guess


def hmk_oracle_adversary(hmk: bytes) -> Adversary:
    """Out-of-model sanity ceiling: an adversary holding the contact key can
    detect the frame header in adjacent coins and win (almost) always."""

    def guess(view: TrialView) -> int:
        w = view.profile.coin_width
        sealed_len = 2 * w - hidden.IV_LEN
        for a, b in zip(view.coins, view.coins[1:]):
            blob = a + b
            iv = blob[: hidden.IV_LEN]
            sealed = blob[hidden.IV_LEN :]
            plain = crypto.ctr_xcrypt(
                hmk, hidden.header_nonce(iv), sealed[:sealed_len]
            )
            if plain[hidden.LEN_FIELD :] == b"\x00" * (sealed_len - hidden.LEN_FIELD):
                n = int.from_bytes(plain[: hidden.LEN_FIELD], "big")
                if 1 <= n <= hidden.MAX_HIDDEN:
                    return 1
        return 0

    return guess


def constant_adversary(bit: int) -> Adversary:
    return lambda view: bit


def coin_flip_adversary(seed: int) -> Adversary:
    """Guesses uniformly at random; the estimator's zero point."""
    r = random.Random(seed)
    return lambda view: r.getrandbits(1)


@dataclass(frozen=True)
class GameResult:
    trials: int
    wins: int
    advantage: float
    ci_low: float
    ci_high: float

    @property
    def win_rate(self) -> float:
        return self.wins / self.trials


def wilson_interval(wins: int, n: int, z: float = 1.96) -> tuple[float, float]:
    """95% Wilson score interval for a binomial proportion."""
    if n == 0:
        return 0.0, 1.0
    p = wins / n
    denom = 1.0 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return center - half, center + half


def _challenger_transcript(
    script: GameScript, inject: bool, rng: SeededRng
) -> tuple[TrialView, bytes]:
    """Seal the scripted conversation; inject the hidden message iff asked."""
    auth = AuthKey.generate(rng)
    hmk = crypto.prng_fill(16, rng)
    session_id = crypto.prng_fill(8, rng)
    queue = (
        hidden.encode_hidden(hmk, script.hidden_message, script.profile, rng)
        if inject
        else ChunkQueue()
    )
    envelopes: list[PublicEnvelope] = []
    coins: list[bytes] = []
    for i, body in enumerate(script.public_bodies):
        pt = PublicPlaintext(session_id, i + 1, body)
        coin = hidden.next_coin(queue, script.profile.coin_width, rng)
        envelopes.append(channel.seal_public(auth, pt, coin, rng=rng))
        coins.append(coin)
    view = TrialView(
        tuple(envelopes),
        tuple(coins),
        auth.key,
        script.public_bodies,
        script.profile,
    )
    return view, hmk


def run_transcript_game(
    script: GameScript,
    trials: int,
    adversary: Adversary | None = None,
    *,
    give_hmk: bool = False,
) -> GameResult:
    """Estimate the adversary's advantage over `trials` challenger rounds.

    The challenge bits are balanced (exactly half injected) and shuffled by
    the script seed, so the whole experiment is replayable. With give_hmk
    the adversary is handed the contact key before guessing - the
    out-of-model ceiling that should make it win outright.
    """
    if trials < 100:
        raise ValueError("need at least 100 trials")
    rng = SeededRng(script.seed)
    shuffler = random.Random(script.seed ^ 0x5EED)
    bits = [0] * (trials // 2) + [1] * (trials - trials // 2)
    shuffler.shuffle(bits)
    default = battery_adversary()
    wins = 0
    for b in bits:
        view, hmk = _challenger_transcript(script, inject=bool(b), rng=rng)
        if give_hmk:
            guesser: Adversary = hmk_oracle_adversary(hmk)
        else:
            guesser = adversary or default
        if guesser(view) == b:
            wins += 1
    lo, hi = wilson_interval(wins, trials)
    return GameResult(trials, wins, wins / trials - 0.5, lo - 0.5, hi - 0.5)


# ---------------------------------------------------------------------------
# execution game (execution-transcript indistinguishability)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BoundaryOp:
    kind: str  # "seal" | "open" | "hidden_send" | "read_inbox"
    data: bytes = b""


@dataclass(frozen=True)
class BoundaryScript:
    ops: tuple[BoundaryOp, ...]
    seed: int = 0

    @property
    def has_hidden_io(self) -> bool:
        return any(op.kind in ("hidden_send", "read_inbox") for op in self.ops)


@dataclass(frozen=True)
class ExecutionVerdict:
    equal: bool
    divergence_index: int | None
    public_only: tuple[BoundaryEvent, ...]
    public_hidden: tuple[BoundaryEvent, ...]


def make_random_script(seed: int, length: int = 20, with_hidden: bool = True) -> BoundaryScript:
    r = random.Random(seed)
    kinds = ["seal", "open"]
    ops: list[BoundaryOp] = []
    for _ in range(length):
        k = r.choice(kinds + (["hidden_send", "read_inbox"] if with_hidden else []))
        if k == "seal":
            ops.append(BoundaryOp("seal", r.randbytes(r.randint(1, 64))))
        elif k == "open":
            ops.append(BoundaryOp("open"))
        elif k == "hidden_send":
            ops.append(BoundaryOp("hidden_send", r.randbytes(r.randint(1, 24))))
        else:
            ops.append(BoundaryOp("read_inbox"))
    if with_hidden and not any(o.kind in ("hidden_send", "read_inbox") for o in ops):
        ops.append(BoundaryOp("hidden_send", r.randbytes(8)))
    return BoundaryScript(tuple(ops), seed)


_PW = ("public-pw-000", "hidden-pw-000", "disclose-pw-0")
_PEER = bytes(8)
_CONTACT_SECRET = bytes(range(128))


def _fresh_enclave(tmpdir: str, tag: str, profile: ChannelProfile, unified: bool, seed: int) -> Enclave:
    cfg = EnclaveConfig(
        profile=profile,
        store_path=f"{tmpdir}/exec-{tag}-{seed}.blob",
        unified_io=unified,
        password_cost=4,
    )
    return Enclave.setup(cfg, *_PW, watermark="wm-exec", rng=SeededRng(seed))


def _feed_envelopes(script: BoundaryScript, profile: ChannelProfile, auth_key: bytes) -> list[PublicEnvelope]:
    """Pre-generate the inbound stream both enclave instances will open."""
    r = SeededRng(script.seed ^ 0xFEED)
    auth = AuthKey.from_key(auth_key)
    session_id = b"\x11" * 8
    n_opens = sum(1 for op in script.ops if op.kind == "open")
    body_rng = random.Random(script.seed ^ 0xB0D1)
    envs = []
    for i in range(n_opens):
        pt = PublicPlaintext(session_id, i + 1, body_rng.randbytes(body_rng.randint(1, 64)))
        coin = crypto.prng_fill(profile.coin_width, r)
        envs.append(channel.seal_public(auth, pt, coin, rng=r))
    return envs


def _run_script(
    enclave: Enclave, password: str, script: BoundaryScript, inbound: list[PublicEnvelope], auth_key: bytes
) -> tuple[BoundaryEvent, ...]:
    enclave.verify_password(password)
    enclave.register_peer(_PEER, auth_key)
    try:
        enclave.secure_add_contact(_PEER, _CONTACT_SECRET)
    except UniformRefusal:
        pass
    start = len(enclave.transcript)
    session_id = b"\x22" * 8
    seq = 0
    opened = 0
    for op in script.ops:
        if op.kind == "seal":
            seq += 1
            enclave.seal(_PEER, PublicPlaintext(session_id, seq, op.data))
        elif op.kind == "open":
            if opened < len(inbound):
                enclave.open_envelope(_PEER, inbound[opened])
                opened += 1
        elif op.kind == "hidden_send":
            try:
                enclave.secure_queue_hidden(_PEER, op.data)
            except UniformRefusal:
                pass
        elif op.kind == "read_inbox":
            try:
                enclave.secure_read_inbox()
            except UniformRefusal:
                pass
    # Rebase logical timestamps so the two runs compare script-relative.
    return tuple(
        BoundaryEvent(e.t - start, e.call, e.param_sizes, e.response_size)
        for e in enclave.transcript[start:]
    )


def run_execution_game(
    script: BoundaryScript,
    profile: ChannelProfile = channel.TELEGRAM_LIKE,
    unified_io: bool = True,
) -> ExecutionVerdict:
    """Replay one boundary script in both modes and diff the transcripts."""
    import shutil
    import tempfile

    auth_key = SeededRng(script.seed ^ 0xA07).bytes(crypto.AUTH_KEY_LEN)
    inbound = _feed_envelopes(script, profile, auth_key)
    workdir = tempfile.mkdtemp(prefix="exec-game-")
    try:
        pub = _fresh_enclave(workdir, "pub", profile, unified_io, script.seed)
        hid = _fresh_enclave(workdir, "hid", profile, unified_io, script.seed + 1)
        t_pub = _run_script(pub, _PW[0], script, inbound, auth_key)
        t_hid = _run_script(hid, _PW[1], script, inbound, auth_key)
    finally:
        shutil.rmtree(workdir, ignore_errors=True)
    divergence = None
    for i, (a, b) in enumerate(zip(t_pub, t_hid)):
        if a != b:
            divergence = i
            break
    if divergence is None and len(t_pub) != len(t_hid):
        divergence = min(len(t_pub), len(t_hid))
    return ExecutionVerdict(divergence is None, divergence, t_pub, t_hid)


# ---------------------------------------------------------------------------
# disclosure verification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DisclosureVerdict:
    total_records: int
    matched: int
    mismatched_indices: tuple[int, ...]
    unmatched_frames: int

    @property
    def all_match(self) -> bool:
        return not self.mismatched_indices and self.matched == self.total_records


def verify_disclosure(
    bundle: DisclosureBundle,
    frames: list[bytes],
    coin_width: int,
) -> DisclosureVerdict:
    """Re-seal every disclosed message and match it on the wire.

    A record verifies iff re-encrypting (body, coin, padding) under the
    disclosed key reproduces both the recorded envelope digest and an actual
    on-wire frame, octet for octet.
    """
    keys = {pid: AuthKey.from_key(k) for pid, k in bundle.peer_keys}
    frame_pool: dict[bytes, int] = {}
    for f in frames:
        frame_pool[f] = frame_pool.get(f, 0) + 1
    mismatched = []
    matched = 0
    for idx, rec in enumerate(bundle.messages):
        auth = keys.get(rec.peer_id)
        if auth is None:
            mismatched.append(idx)
            continue
        try:
            env = channel.seal_public(
                auth,
                PublicPlaintext(rec.session_id, rec.seq_no, rec.body),
                rec.coin,
                padding=rec.padding,
            )
        except channel.ChannelError:
            mismatched.append(idx)
            continue
        wire = env.to_bytes()
        ok = (
            crypto.sha256(wire) == rec.envelope_digest
            and frame_pool.get(wire, 0) > 0
        )
        if ok:
            frame_pool[wire] -= 1
            matched += 1
        else:
            mismatched.append(idx)
    unmatched = sum(v for v in frame_pool.values())
    return DisclosureVerdict(len(bundle.messages), matched, tuple(mismatched), unmatched)
