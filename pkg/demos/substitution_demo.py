"""The substitution step on its desk-scale instance.

Run: python3 demos/substitution_demo.py   (about 35 s; the M2=3 run dominates)
"""

from twistabc.substitution import (miniature_input, miniature_omega, substitute,
                                   verify_substitution)

for M2 in (1, 3):
    inp = miniature_input(M2=M2)
    omega = miniature_omega(inp)
    res = substitute(omega, inp)
    rep = verify_substitution(res, omega, inp)
    print(f"M2={M2}: {rep['size']} output words of length {res.omega_prime[0].length}")
    print(f"  closure {rep['part1']}, multiplicity {rep['part2']}, pair counts {rep['part3']}"
          f" (range {rep['part3_range']}, target {rep['part3_target']})")
