"""Ten-state helicopter: convex quadratic fit, hover and a 1 m box flight."""
# %%
import time

import numpy as np

from sosadp.bellman import fit_value, verify_bellman
from sosadp.policy import GreedyPolicy
from sosadp.problems import HELI_STATE_NAMES, helicopter10, scenario
from sosadp.simulate import simulate_scenario

prob = helicopter10()
t0 = time.perf_counter()
v = fit_value(prob, 2, convex=True)
print(f"fit: {v.status} in {time.perf_counter() - t0:.2f} s, objective {v.objective_value:.2f}")
print("sampled Bellman violation:", verify_bellman(v, prob).max_violation)
pol = GreedyPolicy(v, prob)

# %% recover from a 0.5 m offset without noise
x0 = np.zeros(10)
x0[:3] = 0.5
tr = simulate_scenario(v, scenario("hover"), noise=False, x0=x0, policy=pol)
err = tr.position_error()
for t in (1, 2, 5, 10, 30, 60):
    print(f"  t = {t:2d} s   position error {err[int(t / 0.02)] * 100:6.2f} cm")

# %% noisy hover
peak = [np.abs(simulate_scenario(v, scenario("hover"), seed=s, policy=pol).x[:, :3]).max() for s in range(5)]
print("noisy hover, max |position| per seed [m]:", np.round(peak, 3))

# %% box flight
sc = scenario("box_1m")
tr = simulate_scenario(v, sc, seed=0, policy=pol)
for k in range(sc.legs):
    sel = (tr.t >= sc.switch_times[k]) & (tr.t < sc.leg_end(k))
    d = np.linalg.norm(tr.x[sel, :3] - np.asarray(sc.setpoints[k + 1]), axis=1)
    print(f"  leg {k}: target {sc.setpoints[k + 1]}, closest approach {d.min() * 100:.2f} cm")

# %% policy latency
lat = [pol(x).wall_time for x in np.random.default_rng(0).normal(scale=0.2, size=(500, 10))]
print(f"median policy latency {np.median(lat) * 1e3:.3f} ms")
print("state order:", ", ".join(HELI_STATE_NAMES))
