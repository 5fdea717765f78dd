"""Scalar LQG: the SOS fit, the Riccati recursion and Monte Carlo agree.

Run with ``python demos/lqg_check.py``.
"""
# %%
import numpy as np

from sosadp.bellman import fit_value, verify_bellman
from sosadp.oracles import linear_quadratic_data, riccati_discounted
from sosadp.policy import GreedyPolicy
from sosadp.problems import scalar_lqg
from sosadp.simulate import estimate_cost

prob = scalar_lqg()
A, B, Q, R, E = linear_quadratic_data(prob)
ric = riccati_discounted(A, B, Q, R, prob.discount, E @ E.T)
print(f"Riccati:  P = {ric.P[0, 0]:.10f}  s = {ric.s:.6f}  K = {ric.K[0, 0]:.6f}")

# %% without constraints the quadratic fit is the exact value function
v = fit_value(prob, 2)
print(f"SOS fit:  P = {v.coefficient((2,)):.10f}  s = {v.coefficient((0,)):.6f}  "
      f"({v.diagnostics['sdp_iterations']} IPM iterations)")

# %% its greedy policy is the LQR gain
pol = GreedyPolicy(v, prob)
xs = np.array([[-5.0], [-1.0], [2.0], [4.0]])
print("u(x) / x:", (pol.batch(xs)[0][:, 0] / xs[:, 0]).round(6), "  -K:", round(-ric.K[0, 0], 6))

# %% Monte Carlo cost from x0 = 1 against x0' P x0 + s
rep = estimate_cost(prob, v, [1.0], n_rollouts=500, horizon=1000, seed=0, policy=pol)
exact = ric.P[0, 0] + ric.s
print(f"Monte Carlo {rep.mean_cost:.2f} +- {rep.stderr:.2f}   exact {exact:.2f}")
print("sampled Bellman violation:", verify_bellman(v, prob).max_violation)
