"""fbar distance with a best matching, and the deletion bound.

Run: python3 demos/fbar_demo.py
"""

import random
from fractions import Fraction

from twistabc.fbar import check_deletion_bound, fbar

a, b = "abcabcab", "bacbbacb"
v = fbar(a, b, witness=True)
print(f"fbar({a}, {b}) = {v.value} ~ {v.approx:.4f}")
print("matched pairs:", v.witness)

rng = random.Random(1)
x = [rng.randrange(3) for _ in range(40)]
y = [rng.randrange(3) for _ in range(40)]
x_del, y_del = x[3:], y[:-5]
rep = check_deletion_bound(x, y, x_del, y_del, gamma=Fraction(1, 10))
print("deletion bound:", {k: rep[k] for k in ("fbar", "bound", "deleted", "holds")})
