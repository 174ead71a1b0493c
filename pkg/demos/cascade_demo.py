"""Strict parameter ledger and the bound cascade through n = 6.

Run: python3 demos/cascade_demo.py
"""

from fractions import Fraction

from twistabc import reduction
from twistabc.trees import TreePrefix

prefix = TreePrefix.full(7)
led = reduction.strict_ledger(prefix, 6, Fraction(1, 16))


def bits(x):
    return "-" if x is None else x.bit_length()


for row in led.rows[:7]:
    print(f"n={row.n}  bits: p {bits(row.p)}, R {bits(row.R)}, k {bits(row.k)}, q {bits(row.q)};  e={row.e}")

casc = reduction.bound_cascade(led, prefix, 6)
for n in sorted(casc.beta):
    print(f"beta_{n} ~ {float(casc.beta[n]):.3g}")
print("all floors hold:", all(c["holds"] for c in casc.checks if c["check"] == "floor"))
print("ledger inequalities hold:", all(r["holds"] for r in reduction.check_ledger(led, prefix, 6)))
