"""Twist a handful of letters and show the spacer layout.

Run: python3 demos/twist_demo.py
"""

from twistabc.twist import derive_params, parse_subscales, tilde_twist_op, twist_op
from twistabc.words import flatten, from_seq, rev, to_sexpr

params = derive_params((1, 1), (2, 2))
print("derived numbers:", params.as_dict())

# level 0: four one-letter blocks give a word of length q_1 = 8
w1 = twist_op(0, [from_seq([x]) for x in (1, 2, 3, 1)], params)
print("C_0(1,2,3,1) =", "".join(map(str, flatten(w1))))

# level 1: 64 blocks of length 8 give a word of length 8192, stored compressed
blocks = [from_seq([1 + (i + j) % 3 for j in range(8)]) for i in range(64)]
w2 = twist_op(1, blocks, params)
print("C_1 length:", w2.length, " s-expression size:", len(to_sexpr(w2)))

tree = parse_subscales(w2, 1, params)
print("spacer letters:", tree.boundary_size, "of", tree.length)

# reversing the word equals the tilde operator on reversed blocks
lhs = flatten(rev(w2))
rhs = flatten(tilde_twist_op(1, [rev(b) for b in reversed(blocks)], params))
print("rev identity holds:", lhs == rhs)
