"""Feldman patterns: occurrence counts and the cross-pattern alignment ratio.

Run: python3 demos/feldman_demo.py
"""

from twistabc.feldman import FeldmanSpec, generate, verify_patterns

spec = FeldmanSpec(T=1, N=3, M=2)
pats = generate(spec)
for p in pats:
    print(f"pattern {p.index}: length {p.word.length}, {p.cycles} cycles")

rep = verify_patterns(pats)
print("each block occurs", rep["occurrences_each"], "times; every check passes:", rep["ok"])
