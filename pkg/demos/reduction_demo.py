"""Build the miniature reduction on a three-node tree and check it.

Run: python3 demos/reduction_demo.py   (about 15 s)
"""

from twistabc import reduction
from twistabc.trees import TreePrefix

prefix = TreePrefix([(), (0,), (0, 0)], 3)
build = reduction.Build(prefix, 2)
for lvl in build.levels:
    print(f"level {lvl.n}: {lvl.count} words, s = {lvl.s}, k_prev = {lvl.k_prev}")
print("C:", build.C, " q_2:", build.q(2))

for n in range(build.top + 1):
    rep = reduction.verify_specs(build.levels, prefix, n)
    print(f"level {n} clauses:", {c: v["ok"] for c, v in rep.items() if isinstance(v, dict)})

print("propagation level 1:", reduction.propagate(build, 1)["ok"])

e = reduction.eta_g(build, 1, [(0,)], 2)
print("eta for g = (0): bijection", e["bijection"], "involution", e["involution"],
      "lands in reversed words", e["in_rev"])
