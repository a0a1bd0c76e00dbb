"""Distinguisher battery sanity: accepts real randomness and CTR output,
rejects degenerate streams."""

import pytest

from saltline import crypto
from saltline.crypto import SeededRng
from saltline.stats import stat_battery


class TestBattery:
    def test_prng_coins_pass(self):
        coins = [crypto.prng_fill(15) for _ in range(10_000)]
        report = stat_battery(coins)
        assert report.passed, report.failures()

    def test_all_zero_fails_chi_square(self):
        report = stat_battery([b"\x00" * 15] * 100)
        assert not report.passed
        assert "byte_chi_square" in report.failures()

    def test_ctr_ciphertext_of_english_passes(self):
        text = (
            b"The quick brown fox jumps over the lazy dog. " * 400
        )
        hmk = crypto.prng_fill(16)
        ct = crypto.ctr_xcrypt(hmk, crypto.prng_fill(16), text)
        coins = [ct[i : i + 15] for i in range(0, len(ct) - 15, 15)]
        report = stat_battery(coins)
        assert report.passed, report.failures()

    def test_too_few_coins_rejected(self):
        with pytest.raises(ValueError):
            stat_battery([b"\x00" * 15] * 63)

    def test_deterministic_given_input(self):
        rng = SeededRng(3)
        coins = [rng.bytes(16) for _ in range(200)]
        assert stat_battery(coins) == stat_battery(coins)

    def test_biased_bits_fail_monobit(self):
        # 75% ones per byte on average.
        rng = SeededRng(4)
        coins = [
            bytes(b | 0xF0 for b in rng.bytes(16)) for _ in range(500)
        ]
        report = stat_battery(coins)
        assert not report.passed
        assert "monobit" in report.failures()

    def test_sawtooth_fails_serial_correlation(self):
        coins = [bytes(range(i, i + 16)) for i in range(0, 128)]
        report = stat_battery(coins)
        assert "serial_correlation" in report.failures()

    def test_alternating_bits_fail_runs(self):
        report = stat_battery([b"\x55" * 16] * 100)
        assert not report.passed
