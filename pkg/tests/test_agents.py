import numpy as np
import pytest

from apsuite.agents import (BUILTIN, ExecAgent, GradientClimber, LightDarkSeeker, OracleAgent,
                            RandomAgent, StayAgent, builtin_agent, make_agent, sample_unit_ball)
from apsuite.core import InvalidArgument
from apsuite.harness import run_episode
from apsuite.registry import make

from conftest import ALL_ENV_IDS


def test_factory():
    for name in BUILTIN:
        assert builtin_agent(name) is not builtin_agent(name)
    assert isinstance(make_agent("random"), RandomAgent)
    assert isinstance(make_agent("exec:python3 agent.py"), ExecAgent)
    assert make_agent("exec:agent.py").command[1:] == ["agent.py"]
    with pytest.raises(InvalidArgument):
        builtin_agent("greedy")
    with pytest.raises(InvalidArgument):
        make_agent("exec:")


def test_unit_ball_sampling():
    rng = np.random.default_rng(0)
    for dim in (2, 3):
        x = np.array([sample_unit_ball(rng, dim) for _ in range(20_000)])
        r = np.linalg.norm(x, axis=1)
        assert r.max() <= 1.0
        # radius of a uniform ball sample has CDF r^dim
        assert np.mean(r <= 0.5) == pytest.approx(0.5 ** dim, abs=0.015)
        assert np.abs(x.mean(axis=0)).max() < 0.02


def test_random_agent_seeded():
    a, b = RandomAgent(), RandomAgent()
    spec = make("LightDark-v0").spec.to_dict()
    a.start("LightDark-v0", spec, 3)
    b.start("LightDark-v0", spec, 3)
    for _ in range(5):
        np.testing.assert_array_equal(a.act({}, None)[0], b.act({}, None)[0])


@pytest.mark.parametrize("env_id", ["CircleSquare-v0", "LightDark-v0", "Toolbox-v0",
                                    "Starstruck-v0"])
def test_stay_reward_is_minus_loss(env_id):
    env = make(env_id)
    log = run_episode(env, StayAgent(), 4)
    bonus = env.spec.reward_bonus
    for s in log.steps:
        assert s.reward == bonus - s.loss
        assert s.action == [0.0] * env.spec.base_action_dim


def test_random_circle_square_prob_half():
    log = run_episode(make("CircleSquare-v0"), RandomAgent(), 0)
    assert all(s.metrics["correct_label_prob"] == 0.5 for s in log.steps)
    assert all(s.metrics["accuracy"] == 0.0 for s in log.steps)


@pytest.mark.parametrize("env_id", ALL_ENV_IDS)
def test_oracle_zero_loss(env_factory, env_id):
    log = run_episode(env_factory(env_id), OracleAgent(), 1)
    assert all(s.loss == 0.0 for s in log.steps)
    summary = log.summary()
    for mode in ("average", "final"):
        m = summary[mode]
        if "accuracy" in m:
            assert m["accuracy"] == 1.0
        else:
            assert m["mse"] == 0.0


def test_oracle_refuses_without_truth():
    agent = OracleAgent()
    agent.start("CircleSquare-v0", make("CircleSquare-v0").spec.to_dict(), 0)
    with pytest.raises(InvalidArgument):
        agent.act({}, None)


def test_seeker_moves_into_light():
    env = make("LightDark-v0")
    seeker = LightDarkSeeker()
    run_episode(env, seeker, 2)
    x = env.hidden_state()["pos"][0]
    assert abs(x - 0.75) < 0.3


def test_climber_stops_on_shape():
    agent = GradientClimber()
    env = make("CircleSquare-v0")
    agent.start(env.env_id, env.spec.to_dict(), 0)
    g = np.zeros((5, 5, 1))
    g[2, 2, 0] = 1.0
    a, p = agent.act({"glimpse": g}, None)
    assert not a.any() and p.tolist() == [0.0, 0.0]
    ramp = np.tile(np.linspace(0.1, 0.5, 5), (5, 1))[..., None]
    a, _ = agent.act({"glimpse": ramp}, None)
    np.testing.assert_allclose(a, [1.0, 0.0])
    a, _ = agent.act({"glimpse": np.full((5, 5, 1), 0.3)}, None)
    assert not a.any()
