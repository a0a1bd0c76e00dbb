"""Randomness test battery used as the executable distinguisher.

Four classical tests over a concatenated coin stream: bit frequency
(monobit), byte chi-square, lag-1 serial correlation, and the runs test.
Each returns a p-value; the battery verdict fails if any p-value drops
below the configured significance level.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import erfc, sqrt

import numpy as np
from scipy.stats import chi2

DEFAULT_ALPHA = 0.001
MIN_COINS = 64


@dataclass(frozen=True)
class TestResult:
    name: str
    statistic: float
    p_value: float


@dataclass(frozen=True)
class StatReport:
    results: tuple[TestResult, ...]
    alpha: float

    @property
    def passed(self) -> bool:
        return all(r.p_value >= self.alpha for r in self.results)

    def failures(self) -> list[str]:
        return [r.name for r in self.results if r.p_value < self.alpha]


def monobit(bits: np.ndarray) -> TestResult:
    n = bits.size
    s = abs(2.0 * int(bits.sum()) - n) / sqrt(n)
    return TestResult("monobit", s, erfc(s / sqrt(2.0)))


def byte_chi_square(data: np.ndarray) -> TestResult:
    counts = np.bincount(data, minlength=256)
    expected = data.size / 256.0
    stat = float(((counts - expected) ** 2 / expected).sum())
    return TestResult("byte_chi_square", stat, float(chi2.sf(stat, 255)))


def serial_correlation(data: np.ndarray) -> TestResult:
    x = data.astype(np.float64)
    if x.size < 3 or float(x.std()) == 0.0:
        return TestResult("serial_correlation", float("inf"), 0.0)
    a, b = x[:-1], x[1:]
    r = float(np.corrcoef(a, b)[0, 1])
    z = abs(r) * sqrt(x.size - 1)
    return TestResult("serial_correlation", r, erfc(z / sqrt(2.0)))


def runs(bits: np.ndarray) -> TestResult:
    n = bits.size
    pi = float(bits.sum()) / n
    if abs(pi - 0.5) >= 2.0 / sqrt(n):
        # Frequency precondition failed; the sequence is already non-random.
        return TestResult("runs", 0.0, 0.0)
    v = 1 + int(np.count_nonzero(np.diff(bits)))
    num = abs(v - 2.0 * n * pi * (1.0 - pi))
    den = 2.0 * sqrt(2.0 * n) * pi * (1.0 - pi)
    return TestResult("runs", float(v), erfc(num / den))


def stat_battery(coins: list[bytes], alpha: float = DEFAULT_ALPHA) -> StatReport:
    """Run the whole battery over the concatenation of the given coins."""
    if len(coins) < MIN_COINS:
        raise ValueError(f"need at least {MIN_COINS} coins")
    data = np.frombuffer(b"".join(coins), dtype=np.uint8)
    bits = np.unpackbits(data)
    report = (
        monobit(bits),
        byte_chi_square(data),
        serial_correlation(data),
        runs(bits),
    )
    return StatReport(report, alpha)
