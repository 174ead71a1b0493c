"""Tree prefixes, the canonical enumeration and groups of involutions.

Run: python3 demos/trees_demo.py
"""

from twistabc.trees import M_of, TreePrefix, build_group, canonical_enumeration, s_of

print("first sequences:", canonical_enumeration(9))

prefix = TreePrefix.from_text("-\n0\n0 0\n1\n", 3)
print("M(1), M(2):", M_of(prefix, 1), M_of(prefix, 2))
print("s(n):", [s_of(prefix, n) for n in range(4)])
for s in (1, 2):
    g = build_group(prefix, s, 3)
    print(f"G_{s}: generators {g.generators}, order {g.order}")
