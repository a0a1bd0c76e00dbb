"""Adversary harness: transcript game, execution game, disclosure verify."""

import pytest

from saltline import channel, games
from saltline.channel import SIGNAL_LIKE, TELEGRAM_LIKE, AuthKey, PublicPlaintext
from saltline.crypto import SeededRng
from saltline.enclave import DisclosedMessage, DisclosureBundle
from saltline.games import (
    BoundaryScript,
    GameScript,
    constant_adversary,
    make_random_script,
    run_execution_game,
    run_transcript_game,
    verify_disclosure,
    wilson_interval,
)

SCRIPT = GameScript(
    public_bodies=tuple(b"cover %02d" % i for i in range(8)),
    hidden_message=b"covert payload under 90",  # 23 octets -> 4 covers
    profile=TELEGRAM_LIKE,
    seed=1234,
)


class TestTranscriptGame:
    def test_battery_adversary_near_zero_advantage(self):
        result = run_transcript_game(SCRIPT, trials=200)
        assert abs(result.advantage) < 0.12
        assert result.ci_low <= 0.0 <= result.ci_high

    def test_hmk_oracle_wins(self):
        result = run_transcript_game(SCRIPT, trials=200, give_hmk=True)
        assert result.win_rate > 0.99

    def test_constant_adversary_exactly_half(self):
        result = run_transcript_game(SCRIPT, trials=200, adversary=constant_adversary(0))
        assert result.advantage == 0.0
        result1 = run_transcript_game(SCRIPT, trials=200, adversary=constant_adversary(1))
        assert result1.advantage == 0.0

    def test_estimator_unbiased_under_coin_flipping(self):
        # 1e4 trials; a random guesser's advantage stays within 2 sigma of 0,
        # sigma = sqrt(0.25/n) = 0.005.
        small = GameScript(
            public_bodies=(b"a", b"b", b"c"),
            hidden_message=b"z",
            profile=TELEGRAM_LIKE,
            seed=77,
        )
        result = run_transcript_game(
            small, trials=10_000, adversary=games.coin_flip_adversary(123)
        )
        assert abs(result.advantage) <= 0.01

    def test_seed_determinism(self):
        a = run_transcript_game(SCRIPT, trials=100)
        b = run_transcript_game(SCRIPT, trials=100)
        assert a == b

    def test_k_constraint_enforced(self):
        with pytest.raises(ValueError):
            GameScript(
                public_bodies=(b"one", b"two"),
                hidden_message=b"x" * 100,
                profile=TELEGRAM_LIKE,
            )

    def test_min_trials(self):
        with pytest.raises(ValueError):
            run_transcript_game(SCRIPT, trials=10)

    def test_wilson_interval_basics(self):
        lo, hi = wilson_interval(50, 100)
        assert lo < 0.5 < hi
        lo0, hi0 = wilson_interval(0, 100)
        assert lo0 >= 0.0 and hi0 < 0.1


class TestExecutionGame:
    def test_unified_transcripts_equal(self):
        for seed in range(5):
            script = make_random_script(seed, length=20)
            verdict = run_execution_game(script, unified_io=True)
            assert verdict.equal, (seed, verdict.divergence_index)
            assert len(verdict.public_only) > 0

    def test_legacy_diverges_on_hidden_io(self):
        script = make_random_script(7, length=20, with_hidden=True)
        assert script.has_hidden_io
        verdict = run_execution_game(script, unified_io=False)
        assert not verdict.equal
        assert verdict.divergence_index is not None

    def test_legacy_equal_without_hidden_io(self):
        script = make_random_script(8, length=12, with_hidden=False)
        verdict = run_execution_game(script, unified_io=False)
        assert verdict.equal

    def test_empty_script_trivially_equal(self):
        verdict = run_execution_game(BoundaryScript((), seed=1))
        assert verdict.equal and verdict.public_only == ()

    def test_signal_profile_also_equal(self):
        script = make_random_script(9, length=10)
        assert run_execution_game(script, profile=SIGNAL_LIKE).equal


def _bundle_and_frames(seed=5, forge_index=None):
    """Build an honest session at the channel level and its bundle."""
    rng = SeededRng(seed)
    auth = AuthKey.generate(rng)
    sid = rng.bytes(8)
    frames = []
    records = []
    for i in range(6):
        body = bytes([65 + i]) * (i + 1)
        pt = PublicPlaintext(sid, i + 1, body)
        coin = rng.bytes(15)
        pad = rng.bytes(channel.padding_length(15, len(body)))
        env = channel.seal_public(auth, pt, coin, padding=pad)
        frames.append(env.to_bytes())
        from saltline import crypto

        records.append(
            DisclosedMessage(
                b"\x01" * 8, sid, i + 1, "out", body, coin, pad,
                crypto.sha256(env.to_bytes()),
            )
        )
    if forge_index is not None:
        r = records[forge_index]
        records[forge_index] = DisclosedMessage(
            r.peer_id, r.session_id, r.seq_no, r.direction,
            b"innocent text", r.coin, r.padding, r.envelope_digest,
        )
    bundle = DisclosureBundle(((b"\x01" * 8, auth.key),), tuple(records))
    return bundle, frames


class TestVerifyDisclosure:
    def test_honest_session_all_match(self):
        bundle, frames = _bundle_and_frames()
        verdict = verify_disclosure(bundle, frames, 15)
        assert verdict.all_match
        assert verdict.matched == 6 and verdict.unmatched_frames == 0

    def test_forged_plaintext_flagged(self):
        bundle, frames = _bundle_and_frames(forge_index=3)
        verdict = verify_disclosure(bundle, frames, 15)
        assert not verdict.all_match
        assert verdict.mismatched_indices == (3,)
        assert verdict.matched == 5

    def test_count_mismatch_reported_not_fatal(self):
        bundle, frames = _bundle_and_frames()
        verdict = verify_disclosure(bundle, frames + frames[:2], 15)
        assert verdict.unmatched_frames == 2
        assert verdict.matched == 6
