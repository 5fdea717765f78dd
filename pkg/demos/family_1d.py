"""Quadratic and quartic lower bounds for the constrained scalar problem.

Fits both degrees for three state-relevance weights, compares them with a
value-iteration reference and writes ``family_1d.csv`` next to this script.
"""
# %%
import pathlib

import numpy as np

from sosadp.bellman import fit_value
from sosadp.config import default_weights, parse_weight
from sosadp.oracles import value_iteration_1d
from sosadp.problems import example_1d
from sosadp.simulate import write_csv

base = example_1d()
xs = np.linspace(-20, 20, 401)
cols, header = [xs], ["x"]

# %% fits
for w in default_weights():
    prob = base.replace(weight=parse_weight(w, base.weight.box, 1))
    v2, v4 = fit_value(prob, 2), fit_value(prob, 4)
    band = np.abs(xs) >= 18
    gain = np.min(v4(xs[band, None]) - v2(xs[band, None]))
    print(f"weight {w!r:16}  objective d2 {v2.objective_value:9.2f}  d4 {v4.objective_value:9.2f}  "
          f"quartic margin at |x|>=18: {gain:8.2f}")
    cols += [v2(xs[:, None]), v4(xs[:, None])]
    header += [f"deg2[{w}]", f"deg4[{w}]"]

# %% reference value function on a fine grid
vstar = value_iteration_1d(base)
cols.append(vstar(xs))
header.append("vstar")
inner = np.abs(xs) <= 15
print("largest V_hat - V* on |x| <= 15:", max(np.max(c[inner] - vstar(xs[inner])) for c in cols[1:-1]))

out = pathlib.Path(__file__).with_name("family_1d.csv")
write_csv(out, header, np.column_stack(cols))
print("wrote", out)
