"""One stage of the conjugation construction on a rational grid.

Run: python3 demos/abc_demo.py
"""

from twistabc import abc_sim
from twistabc.twist import derive_params

params = derive_params((1, 1), (2, 2))
print(abc_sim.render_h1(1, params).splitlines()[:6])

hist = abc_sim.displacement_histogram(1, params)
print("displacements:", [hist["histogram"][d] for d in range(8)])
print("max deviation", hist["max_deviation"], "bound", hist["bound"])

# weak mixing needs C_1 to be a multiple of s_1^2
mix_params = derive_params((1, 4), (2, 2))
bt = abc_sim.balanced_btuples(1, mix_params, 2, 2)
mix = abc_sim.verify_mixing_inequality(1, bt, mix_params)
print("mixing: max deviation", mix["max_deviation"], "bound", mix["bound"], "ok", mix["ok"])

print("symbolic name equals twisted word:", abc_sim.name_matches_twist(1, params))
