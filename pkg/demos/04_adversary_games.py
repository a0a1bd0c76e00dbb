"""The adversary's desk: statistical batteries and the two
indistinguishability games.

Run:  python demos/04_adversary_games.py
"""

from saltline import stat_battery
from saltline.channel import TELEGRAM_LIKE
from saltline.crypto import prng_fill
from saltline.games import (
    GameScript,
    constant_adversary,
    make_random_script,
    run_execution_game,
    run_transcript_game,
)

print("=== the battery on honest randomness ===")
coins = [prng_fill(15) for _ in range(5000)]
report = stat_battery(coins)
for r in report.results:
    print(f"  {r.name:20s} p={r.p_value:.4f}")
print(f"verdict: {'pass' if report.passed else 'fail'}")

print("\n=== the battery on something that is not random ===")
report = stat_battery([b"\x00" * 15] * 100)
print(f"all-zero coins: {'pass' if report.passed else 'FAIL -> ' + ', '.join(report.failures())}")

script = GameScript(
    public_bodies=tuple(b"cover %02d" % i for i in range(8)),
    hidden_message=b"the deniable payload",
    profile=TELEGRAM_LIKE,
    seed=42,
)

print("\n=== transcript game: can a coercer spot injection? ===")
print("the challenger flips a coin; half the trials inject a hidden message")
print("into the random-coin slots, half do not. The adversary gets everything")
print("a compelled user would hand over: plaintexts, coins, the key.")
result = run_transcript_game(script, trials=400)
print(f"battery adversary: win rate {result.win_rate:.3f}, "
      f"advantage {result.advantage:+.3f}, 95% CI [{result.ci_low:+.3f}, {result.ci_high:+.3f}]")

result = run_transcript_game(script, trials=400, adversary=constant_adversary(0))
print(f"constant-0 adversary: advantage {result.advantage:+.3f} (sanity floor)")

result = run_transcript_game(script, trials=400, give_hmk=True)
print(f"adversary holding the contact key: win rate {result.win_rate:.3f} (sanity ceiling)")

print("\n=== execution game: can the host OS spot hidden I/O? ===")
script2 = make_random_script(seed=7, length=16, with_hidden=True)
unified = run_execution_game(script2, unified_io=True)
print(f"unified secure I/O:  transcripts equal = {unified.equal}")
legacy = run_execution_game(script2, unified_io=False)
print(f"legacy interrupt I/O: transcripts equal = {legacy.equal} "
      f"(diverges at event {legacy.divergence_index}: the interrupt leaks)")
