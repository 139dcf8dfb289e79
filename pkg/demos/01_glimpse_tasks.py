"""
Glimpse tasks and the LightDark toy problem
==========================================

A tour of the cheapest environments: the agent sees only a 5x5 window of a
28x28 CircleSquare image, or a noisy position reading in LightDark.
"""

import numpy as np

from apsuite import make
from apsuite.agents import GradientClimber, LightDarkSeeker, RandomAgent, StayAgent
from apsuite.harness import aggregate, run_episode, run_many

# one CircleSquare episode, printed as the glimpse drifts uphill
env = make("CircleSquare-v0")
obs = env.reset(seed=3)
agent = GradientClimber()
agent.start(env.env_id, env.spec.to_dict(), 3)
print("CircleSquare target label:", env.prediction_target())
for t in range(env.spec.step_limit):
    action, prediction = agent.act(obs, None)
    out = env.step(action, prediction)
    obs = out.observation
    g = obs["glimpse"][..., 0]
    print(f"step {t:2d}  pos={np.round(obs['glimpse_pos'], 2)}  glimpse max={g.max():.2f}"
          f"  reward={out.reward:+.4f}")
    if out.terminated:
        break

# random agents with uniform logits sit exactly at chance probability
logs = run_many(lambda: make("CircleSquare-v0"), RandomAgent, range(20))
print("random CircleSquare, average metrics:", dict(aggregate(logs, "average")))

# LightDark: seeking the light band makes the position readings sharp
seek = [run_episode(make("LightDark-v0"), LightDarkSeeker(), s) for s in range(20)]
stay = [run_episode(make("LightDark-v0"), StayAgent(), s) for s in range(20)]
print("LightDark final mse  seeker: %.4f  stay: %.4f" % (
    dict(aggregate(seek, "final"))["mse"], dict(aggregate(stay, "final"))["mse"]))
